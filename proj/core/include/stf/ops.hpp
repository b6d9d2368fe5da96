#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stf/tensor.hpp"

namespace stf {

enum class SurrogateKind { arctan };

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::arctan;
  double alpha = 2.0;

  void validate() const;
};

/// d/dx [ atan(pi*alpha*x/2)/pi + 1/2 ]
double surrogate_derivative(const SurrogateSpec& spec, double x);

// Elementwise, identical shapes.
template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> scale(const BasicTensor<T>& a, T factor);
template <typename T> BasicTensor<T> add_scalar(const BasicTensor<T>& a, T offset);

template <typename T> BasicTensor<T> sum(const BasicTensor<T>& a);
template <typename T> BasicTensor<T> mean(const BasicTensor<T>& a);
/// Mean over one axis; the axis is removed from the result shape.
template <typename T> BasicTensor<T> mean_axis(const BasicTensor<T>& a, std::size_t axis);

template <typename T> BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);
template <typename T>
BasicTensor<T> permute(const BasicTensor<T>& a, const std::vector<std::size_t>& axes);

/// Rows [begin, end) of the leading axis.
template <typename T>
BasicTensor<T> slice_leading(const BasicTensor<T>& a, std::size_t begin, std::size_t end);
/// Concatenation along the leading axis.
template <typename T>
BasicTensor<T> concat_leading(const std::vector<BasicTensor<T>>& parts);
/// [d...] -> [count, d...], every slice an exact copy.
template <typename T>
BasicTensor<T> repeat_leading(const BasicTensor<T>& a, std::size_t count);
/// x: [A, B, rest...], y: [A, rest...]; y is broadcast over the second axis.
template <typename T>
BasicTensor<T> add_broadcast_axis1(const BasicTensor<T>& x, const BasicTensor<T>& y);

/// [M,K] x [K,N] -> [M,N]
template <typename T> BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// [G,M,K] x [G,K,N] -> [G,M,N]
template <typename T> BasicTensor<T> bmm(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// x: [M,N], bias: [N]
template <typename T> BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// x: [N,C,H,W], weight: [O,C,K,K] -> [N,O,Ho,Wo]. No bias.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      Conv2dGeometry geometry = {});

/// Non-overlapping max pooling with a square window; first maximum wins ties.
template <typename T> BasicTensor<T> max_pool2d(const BasicTensor<T>& x, std::size_t window);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
  std::size_t channel_axis = 1;
};

/// Normalizes over every axis except channel_axis. In training mode uses batch
/// statistics and updates the running buffers (unbiased variance); otherwise
/// uses the running buffers.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, std::span<T> running_mean,
                          std::span<T> running_var, const BatchNormOptions& options);

/// Per-channel x*scale[c] + shift[c] on [N,C,...] with constant coefficients.
template <typename T>
BasicTensor<T> channel_affine(const BasicTensor<T>& x, std::span<const T> scale,
                              std::span<const T> shift);

/// Mean cross-entropy over a batch of logits [B,K].
template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels);

/// Forward: 1 where x >= 0 else 0. Backward: surrogate derivative.
template <typename T>
BasicTensor<T> heaviside(const BasicTensor<T>& x, const SurrogateSpec& spec);
/// The smooth function whose derivative heaviside() uses in its backward pass.
template <typename T>
BasicTensor<T> arctan_sigmoid(const BasicTensor<T>& x, const SurrogateSpec& spec);

SpikeTensor heaviside_surrogate(const Tensor& x, const SurrogateSpec& spec);

/// a + b - a*b; logical OR on binary inputs.
template <typename T> BasicTensor<T> spike_or(const BasicTensor<T>& a, const BasicTensor<T>& b);

enum class IntegrationForm {
  leaky_input,  // H = U + (I - (U - u_reset)) / tau_m
  reduced,      // H = u_reset + tau*(U - u_reset) + I, tau = 1 - 1/tau_m
};

/// Membrane charge H from the previous potential and the input current.
template <typename T>
BasicTensor<T> lif_charge(const BasicTensor<T>& u, const BasicTensor<T>& input, T tau_m,
                          T u_reset, IntegrationForm form);
/// U' = H*(1-S) + u_reset*S
template <typename T>
BasicTensor<T> lif_reset(const BasicTensor<T>& h, const BasicTensor<T>& s, T u_reset);

}  // namespace stf
