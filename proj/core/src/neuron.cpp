#include "stf/neuron.hpp"

#include <string>
#include <vector>

namespace stf {

void LifParams::validate() const {
  if (!(tau_m > 1.0)) throw std::invalid_argument("tau_m must be > 1, got " + std::to_string(tau_m));
  if (!(u_th > u_reset)) throw std::invalid_argument("u_th must exceed u_reset");
  surrogate.validate();
}

LifState LifState::resting(const Shape& shape, const LifParams& params) {
  return {Tensor::full(shape, static_cast<float>(params.u_reset))};
}

LifStepResult lif_step(const LifState& state, const Tensor& input_current, const LifParams& params,
                       const std::optional<Tensor>& membrane_injection) {
  require_same_shape(state.u.shape(), input_current.shape(), "lif_step");
  if (membrane_injection) require_same_shape(state.u.shape(), membrane_injection->shape(), "lif_step");

  const auto tau_m = static_cast<float>(params.tau_m);
  const auto u_reset = static_cast<float>(params.u_reset);
  Tensor h = lif_charge(state.u, input_current, tau_m, u_reset, params.form);
  if (membrane_injection) h = add(h, *membrane_injection);
  SpikeTensor s = heaviside_surrogate(add_scalar(h, -static_cast<float>(params.u_th)), params.surrogate);
  Tensor u_next = lif_reset(h, s.real(), u_reset);
  return {s, {u_next}};
}

SpikeTensor lif_sequence(const Tensor& inputs, std::size_t timesteps, const LifParams& params,
                         const InjectionHook& hook) {
  if (timesteps < 1) throw std::invalid_argument("lif_sequence: timesteps must be >= 1");
  const std::size_t rows = inputs.shape()[0];
  if (rows % timesteps != 0) {
    throw ShapeError("lif_sequence: leading extent " + std::to_string(rows) +
                     " not divisible by T=" + std::to_string(timesteps));
  }
  const std::size_t per_step = rows / timesteps;
  if (timesteps == 1 && !hook) {
    return lif_step(LifState::resting(inputs.shape(), params), inputs, params).spikes;
  }

  Shape step_shape = inputs.shape();
  step_shape[0] = per_step;
  LifState state = LifState::resting(step_shape, params);
  std::vector<Tensor> outputs;
  outputs.reserve(timesteps);
  SpikeTensor previous;
  for (std::size_t t = 0; t < timesteps; ++t) {
    Tensor current = slice_leading(inputs, t * per_step, (t + 1) * per_step);
    std::optional<Tensor> injection;
    if (hook && t > 0) injection = hook(previous);
    auto step = lif_step(state, current, params, injection);
    state = step.state;
    previous = step.spikes;
    outputs.push_back(step.spikes.real());
  }
  return SpikeTensor::trusted(concat_leading(outputs));
}

}  // namespace stf
