#pragma once

#include <cstddef>
#include <functional>

namespace stf {

/// Worker count: STF_SNN_THREADS when set (>= 1), else hardware concurrency.
std::size_t worker_threads();

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker, so results are independent of the thread count as long as bodies
/// write disjoint outputs.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t min_per_worker = 1);

}  // namespace stf
