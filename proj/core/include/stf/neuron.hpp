#pragma once

#include <functional>
#include <optional>

#include "stf/ops.hpp"
#include "stf/tensor.hpp"

namespace stf {

/// Leaky integrate-and-fire constants with hard reset.
struct LifParams {
  double tau_m = 2.0;
  double u_th = 1.0;
  double u_reset = 0.0;
  /// leaky_input scales the input by 1/tau_m; reduced feeds it unscaled
  /// (U[t] = tau*U[t-1] + I[t] for u_reset = 0).
  IntegrationForm form = IntegrationForm::leaky_input;
  SurrogateSpec surrogate{};

  /// Leak factor tau = 1 - 1/tau_m.
  double leak() const { return 1.0 - 1.0 / tau_m; }
  void validate() const;
};

struct LifState {
  Tensor u;

  static LifState resting(const Shape& shape, const LifParams& params);
};

struct LifStepResult {
  SpikeTensor spikes;
  LifState state;
};

/// One update: H = charge(U, I) (+ injection), S = Theta(H - u_th),
/// U' = H(1 - S) + u_reset*S. The injection is added to the membrane after
/// the charge, unscaled; with the reduced form this is
/// H = (1 - 1/tau_m)U + I + injection.
LifStepResult lif_step(const LifState& state, const Tensor& input_current, const LifParams& params,
                       const std::optional<Tensor>& membrane_injection = std::nullopt);

/// Maps the previous step's spikes to a membrane injection.
using InjectionHook = std::function<Tensor(const SpikeTensor& previous_spikes)>;

/// Runs lif_step over `timesteps` equal chunks of the leading axis of
/// `inputs`, starting from U = u_reset. The hook is not called for the first
/// step (no spike precedes it). Output has the same shape as `inputs`.
SpikeTensor lif_sequence(const Tensor& inputs, std::size_t timesteps, const LifParams& params,
                         const InjectionHook& hook = {});

}  // namespace stf
