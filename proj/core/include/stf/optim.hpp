#pragma once

#include <cstddef>
#include <vector>

#include "stf/layers.hpp"

namespace stf {

struct AdamWOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Decoupled weight decay Adam with bias correction. Entries registered
/// without decay (norm affine parameters, biases) are only moved by Adam.
class AdamW {
 public:
  AdamW(ParameterSet& params, AdamWOptions options);

  /// Applies one update with the given learning rate using the gradients
  /// currently stored on each trainable parameter.
  void step(double learning_rate);
  void step() { step(options_.learning_rate); }

  std::size_t steps_taken() const { return t_; }
  const AdamWOptions& options() const { return options_; }

 private:
  struct Slot {
    Tensor param;
    bool decay;
    std::vector<double> m, v;
  };
  AdamWOptions options_;
  std::vector<Slot> slots_;
  std::size_t t_ = 0;
};

/// Linear warmup over warmup_steps, then cosine decay to zero at total_steps.
double cosine_lr(double base_lr, std::size_t step, std::size_t total_steps, std::size_t warmup_steps);

/// Sum of squared gradients over all trainable parameters, square-rooted.
double gradient_norm(const ParameterSet& params);

}  // namespace stf
