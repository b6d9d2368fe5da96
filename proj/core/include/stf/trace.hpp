#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stf {

enum class TraceKind {
  first_conv,     // MAC-costed convolution on real-valued input
  feedback_step,  // temporal-feedback conv at one timestep, spike input
  block,          // any spike-driven layer, costed over all timesteps
};

/// Operation count and input activity of one layer, gathered during a forward
/// pass for energy accounting.
struct TraceEntry {
  std::string name;
  TraceKind kind = TraceKind::block;
  std::uint64_t flops = 0;  // per sample, per timestep
  double input_rate = 0.0;  // firing rate of the layer's spike input
  std::size_t timesteps = 1;
};

using ActivityTrace = std::vector<TraceEntry>;

/// Fraction of nonzero entries.
inline double spike_rate(std::span<const float> values) {
  if (values.empty()) return 0.0;
  std::size_t ones = 0;
  for (float v : values) ones += v != 0.0f;
  return static_cast<double>(ones) / static_cast<double>(values.size());
}

}  // namespace stf
