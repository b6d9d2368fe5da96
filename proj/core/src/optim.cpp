#include "stf/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stf {

AdamW::AdamW(ParameterSet& params, AdamWOptions options) : options_(options) {
  if (options_.learning_rate < 0.0 || options_.weight_decay < 0.0) {
    throw std::invalid_argument("AdamW: learning rate and weight decay must be >= 0");
  }
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const std::size_t n = e.tensor.numel();
    slots_.push_back(Slot{e.tensor, e.weight_decay, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
  }
}

void AdamW::step(double lr) {
  ++t_;
  if (lr == 0.0) return;  // parameters must stay bit-identical
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (auto& s : slots_) {
    auto p = s.param.mutable_data();
    const auto g = s.param.grad_view();
    const bool has_grad = !g.empty();
    const double decay = s.decay ? lr * options_.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = has_grad ? static_cast<double>(g[i]) : 0.0;
      s.m[i] = options_.beta1 * s.m[i] + (1.0 - options_.beta1) * gi;
      s.v[i] = options_.beta2 * s.v[i] + (1.0 - options_.beta2) * gi * gi;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      double value = static_cast<double>(p[i]);
      value -= decay * value;
      value -= lr * mhat / (std::sqrt(vhat) + options_.eps);
      p[i] = static_cast<float>(value);
    }
  }
}

double cosine_lr(double base_lr, std::size_t step, std::size_t total_steps, std::size_t warmup_steps) {
  if (total_steps == 0) return base_lr;
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  const std::size_t span = total_steps > warmup_steps ? total_steps - warmup_steps : 1;
  const double progress = std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(span));
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

double gradient_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    for (float g : e.tensor.grad_view()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

}  // namespace stf
