#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stf/ops.hpp"
#include "stf/rng.hpp"
#include "stf/tensor.hpp"

namespace stf {

enum class Phase { train, eval };

struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool trainable = true;
  bool weight_decay = true;
};

/// Ordered registry of every persistent tensor of a model. Order is the
/// registration order and defines the checkpoint layout.
class ParameterSet {
 public:
  void add_parameter(std::string name, Tensor tensor, bool weight_decay = true);
  void add_buffer(std::string name, Tensor tensor);

  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<NamedTensor>& entries() { return entries_; }
  const NamedTensor* find(const std::string& name) const;
  std::size_t trainable_count() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> entries_;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t padding, CounterRng rng);

  Tensor forward(const Tensor& x) const;
  void register_into(ParameterSet& params, const std::string& prefix) const;

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t padding() const { return padding_; }
  Tensor& weight() { return weight_; }
  const Tensor& weight() const { return weight_; }

 private:
  std::size_t in_ = 0, out_ = 0, kernel_ = 0, padding_ = 0;
  Tensor weight_;
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::size_t channels, std::size_t channel_axis);

  Tensor forward(const Tensor& x, Phase phase);
  void register_into(ParameterSet& params, const std::string& prefix) const;

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

 private:
  std::size_t channel_axis_ = 1;
  Tensor gamma_, beta_, running_mean_, running_var_;
};

/// Convolution followed by batch normalization.
class ConvBn {
 public:
  ConvBn() = default;
  ConvBn(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t padding, CounterRng rng);

  Tensor forward(const Tensor& x, Phase phase);
  void register_into(ParameterSet& params, const std::string& prefix) const;

  Conv2d& conv() { return conv_; }
  const Conv2d& conv() const { return conv_; }
  BatchNorm& bn() { return bn_; }

 private:
  Conv2d conv_;
  BatchNorm bn_;
};

/// y = x W (+ b), x: [M, in], W: [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features, bool bias, CounterRng rng);

  Tensor forward(const Tensor& x) const;
  void register_into(ParameterSet& params, const std::string& prefix) const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor weight_, bias_;
};

}  // namespace stf
