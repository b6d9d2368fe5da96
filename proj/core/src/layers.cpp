#include "stf/layers.hpp"

#include <algorithm>
#include <cmath>

namespace stf {

void ParameterSet::add_parameter(std::string name, Tensor tensor, bool weight_decay) {
  tensor.set_requires_grad(true);
  entries_.push_back({std::move(name), std::move(tensor), true, weight_decay});
}

void ParameterSet::add_buffer(std::string name, Tensor tensor) {
  entries_.push_back({std::move(name), std::move(tensor), false, false});
}

const NamedTensor* ParameterSet::find(const std::string& name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const NamedTensor& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

std::size_t ParameterSet::trainable_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [](const NamedTensor& e) { return e.trainable; }));
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

namespace {

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual default for conv/linear.
std::vector<float> fan_in_uniform(std::size_t count, std::size_t fan_in, CounterRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<float> v(count);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
  return v;
}

}  // namespace

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t padding, CounterRng rng)
    : in_(in_channels), out_(out_channels), kernel_(kernel), padding_(padding) {
  const std::size_t fan_in = in_channels * kernel * kernel;
  weight_ = Tensor::parameter({out_channels, in_channels, kernel, kernel},
                              fan_in_uniform(out_channels * fan_in, fan_in, rng));
}

Tensor Conv2d::forward(const Tensor& x) const {
  return conv2d(x, weight_, Conv2dGeometry{1, padding_});
}

void Conv2d::register_into(ParameterSet& params, const std::string& prefix) const {
  params.add_parameter(prefix + ".weight", weight_);
}

BatchNorm::BatchNorm(std::size_t channels, std::size_t channel_axis)
    : channel_axis_(channel_axis),
      gamma_(Tensor::parameter({channels}, std::vector<float>(channels, 1.0f))),
      beta_(Tensor::parameter({channels}, std::vector<float>(channels, 0.0f))),
      running_mean_(Tensor::zeros({channels})),
      running_var_(Tensor::full({channels}, 1.0f)) {}

Tensor BatchNorm::forward(const Tensor& x, Phase phase) {
  BatchNormOptions opts;
  opts.training = phase == Phase::train;
  opts.channel_axis = channel_axis_;
  return batch_norm(x, gamma_, beta_, running_mean_.mutable_data(), running_var_.mutable_data(),
                    opts);
}

void BatchNorm::register_into(ParameterSet& params, const std::string& prefix) const {
  params.add_parameter(prefix + ".gamma", gamma_, false);
  params.add_parameter(prefix + ".beta", beta_, false);
  params.add_buffer(prefix + ".running_mean", running_mean_);
  params.add_buffer(prefix + ".running_var", running_var_);
}

ConvBn::ConvBn(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t padding, CounterRng rng)
    : conv_(in_channels, out_channels, kernel, padding, rng), bn_(out_channels, 1) {}

Tensor ConvBn::forward(const Tensor& x, Phase phase) { return bn_.forward(conv_.forward(x), phase); }

void ConvBn::register_into(ParameterSet& params, const std::string& prefix) const {
  conv_.register_into(params, prefix + ".conv");
  bn_.register_into(params, prefix + ".bn");
}

Linear::Linear(std::size_t in_features, std::size_t out_features, bool bias, CounterRng rng)
    : in_(in_features), out_(out_features) {
  weight_ = Tensor::parameter({in_features, out_features},
                              fan_in_uniform(in_features * out_features, in_features, rng));
  if (bias) {
    bias_ = Tensor::parameter({out_features}, fan_in_uniform(out_features, in_features, rng));
  }
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = matmul(x, weight_);
  return bias_.defined() ? add_bias(y, bias_) : y;
}

void Linear::register_into(ParameterSet& params, const std::string& prefix) const {
  params.add_parameter(prefix + ".weight", weight_);
  if (bias_.defined()) params.add_parameter(prefix + ".bias", bias_, false);
}

}  // namespace stf
