#include "stf/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace stf {

std::size_t worker_threads() {
  if (const char* env = std::getenv("STF_SNN_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t min_per_worker) {
  std::size_t workers = std::min(worker_threads(), count / std::max<std::size_t>(1, min_per_worker));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  auto run = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += workers) body(i);
  };
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
}

}  // namespace stf
