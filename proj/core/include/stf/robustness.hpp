#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stf/tensor.hpp"

namespace stf {

class Model;
struct Dataset;

enum class AttackKind { fgsm, pgd };

std::string_view to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(std::string_view name);

struct AttackConfig {
  double epsilon = 8.0 / 255.0;  // L-inf budget
  double eta = 2.0 / 255.0;      // PGD step size
  std::size_t steps = 1;
  std::string_view loss = "cross_entropy";

  void validate() const;
};

/// Valid pixel range the attacks clamp to.
struct InputRange {
  float lo = 0.0f;
  float hi = 1.0f;
};

/// Scalar objective J(x) for fixed labels. Must be differentiable in x.
using Objective = std::function<Tensor(const Tensor& x)>;

/// Cross-entropy of the model's eval-mode logits.
Objective cross_entropy_objective(Model& model, std::span<const int> labels);

/// Gradient of J at x (x itself is not modified).
std::vector<float> input_gradient(const Objective& objective, const Tensor& x);

/// x + beta*sign(grad J), clamped to the valid range; sign(0) = 0.
Tensor fgsm_attack(const Objective& objective, const Tensor& x, double beta, InputRange range = {});

/// Iterates x' <- Proj_{B_inf(x, eps)}(x' + eta*sign(grad J(x'))) from x' = x,
/// then clamps to the valid range. `observer` sees every iterate.
Tensor pgd_attack(const Objective& objective, const Tensor& x, const AttackConfig& config,
                  InputRange range = {},
                  const std::function<void(std::size_t, const Tensor&)>& observer = {});

struct RobustnessOptions {
  AttackKind attack = AttackKind::fgsm;
  std::size_t pgd_steps = 5;
  /// PGD step size as a multiple of the budget divided by steps.
  double pgd_step_factor = 2.5;
  std::size_t batch_size = 64;
};

/// Accuracy under attack at each budget. Budget 0 evaluates the clean inputs.
std::vector<double> robustness_curve(Model& model, const Dataset& data,
                                     const std::vector<double>& budgets,
                                     const RobustnessOptions& options = {});

}  // namespace stf
