#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "stf/ops.hpp"
#include "stf/rng.hpp"

namespace stf::testing {

inline Tensor64 random64(const Shape& shape, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed);
  std::vector<double> v(numel(shape));
  for (auto& e : v) e = scale * rng.normal();
  return Tensor64::from_data(shape, std::move(v));
}

inline Tensor random32(const Shape& shape, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  CounterRng rng(seed);
  std::vector<float> v(numel(shape));
  for (auto& e : v) e = static_cast<float>(rng.uniform(lo, hi));
  return Tensor::from_data(shape, std::move(v));
}

/// sum(out * R) for a fixed random R, so every output element matters.
inline Tensor64 weighted_sum(const Tensor64& out, std::uint64_t seed = 99) {
  return sum(mul(out, random64(out.shape(), seed)));
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences, element by element, for every input.
inline GradCheck gradcheck(const std::function<Tensor64(const std::vector<Tensor64>&)>& f,
                           std::vector<Tensor64> inputs, double h = 1e-6) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.zero_grad();
  }
  f(inputs).backward();
  GradCheck r;
  for (auto& x : inputs) {
    const std::vector<double> analytic = x.grad();
    auto data = x.mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double saved = data[j];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard guard;
        data[j] = saved + h;
        plus = f(inputs).item();
        data[j] = saved - h;
        minus = f(inputs).item();
      }
      data[j] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double scale = std::max(std::abs(analytic[j]), std::abs(numeric));
      const double err = scale > 1e-6 ? std::abs(analytic[j] - numeric) / scale : std::abs(analytic[j] - numeric);
      r.max_rel_error = std::max(r.max_rel_error, err);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace stf::testing
