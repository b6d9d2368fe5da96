#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stf/layers.hpp"
#include "stf/neuron.hpp"
#include "stf/trace.hpp"

namespace stf {

struct BackboneConfig {
  std::size_t depth = 2;
  std::size_t embed_dim = 64;
  std::size_t heads = 4;
  std::size_t merge = 4;  // spatial down-sampling factor per axis, power of two
  std::size_t mlp_ratio = 2;
  std::size_t num_classes = 10;
  std::size_t timesteps = 4;
  std::size_t in_channels = 16;
  double attention_scale = 0.125;
  double attention_threshold = 0.5;
  LifParams lif{};

  void validate() const;
};

/// conv3x3-BN-LIF stages, each but the patch-size-1 case followed by 2x2 max
/// pooling, then flattening of the H/merge x W/merge grid into tokens.
class SpikingPatchEmbedding {
 public:
  SpikingPatchEmbedding() = default;
  SpikingPatchEmbedding(const BackboneConfig& config, CounterRng rng);

  /// [T,B,C,H,W] -> [T,B,N,D], N = H*W/merge^2.
  SpikeTensor forward(const SpikeTensor& spikes, Phase phase, ActivityTrace* trace = nullptr);
  void register_into(ParameterSet& params, const std::string& prefix) const;

 private:
  BackboneConfig config_;
  std::vector<ConvBn> stages_;
  std::vector<bool> pooled_;
};

/// Q, K, V = LIF(BN(Linear(x))); attention = scale * (Q K^T) V per head with no
/// softmax; LIF; then Linear-BN-LIF projection.
class SpikingSelfAttention {
 public:
  SpikingSelfAttention() = default;
  SpikingSelfAttention(const BackboneConfig& config, CounterRng rng);

  /// [T,B,N,D] -> [T,B,N,D]
  SpikeTensor forward(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace = nullptr,
                      const std::string& name = "ssa");
  void register_into(ParameterSet& params, const std::string& prefix) const;

 private:
  BackboneConfig config_;
  Linear q_, k_, v_, proj_;
  BatchNorm q_bn_, k_bn_, v_bn_, proj_bn_;
};

class SpikingMlp {
 public:
  SpikingMlp() = default;
  SpikingMlp(const BackboneConfig& config, CounterRng rng);

  SpikeTensor forward(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace = nullptr,
                      const std::string& name = "mlp");
  void register_into(ParameterSet& params, const std::string& prefix) const;

 private:
  BackboneConfig config_;
  Linear fc1_, fc2_;
  BatchNorm bn1_, bn2_;
};

/// Residual connections use spike OR (a + b - ab) so activations stay binary.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const BackboneConfig& config, CounterRng rng);

  SpikeTensor forward(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace = nullptr,
                      const std::string& name = "block");
  void register_into(ParameterSet& params, const std::string& prefix) const;

 private:
  SpikingSelfAttention attention_;
  SpikingMlp mlp_;
};

/// Rate readout: mean over timesteps and tokens, then an affine head.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(std::size_t embed_dim, std::size_t num_classes, CounterRng rng);

  /// [T,B,N,D] -> logits [B,K]
  Tensor forward(const SpikeTensor& features, ActivityTrace* trace = nullptr) const;
  void register_into(ParameterSet& params, const std::string& prefix) const;

  Linear& linear() { return head_; }

 private:
  Linear head_;
};

class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneConfig& config, CounterRng rng);

  SpikeTensor embed(const SpikeTensor& spikes, Phase phase, ActivityTrace* trace = nullptr);
  SpikeTensor transform(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace = nullptr);
  Tensor forward(const SpikeTensor& spikes, Phase phase, ActivityTrace* trace = nullptr);
  void register_into(ParameterSet& params, const std::string& prefix) const;

  const BackboneConfig& config() const { return config_; }
  SpikingPatchEmbedding& patch_embedding() { return sps_; }
  std::vector<TransformerBlock>& blocks() { return blocks_; }
  ClassifierHead& head() { return head_; }

 private:
  BackboneConfig config_;
  SpikingPatchEmbedding sps_;
  std::vector<TransformerBlock> blocks_;
  ClassifierHead head_;
};

}  // namespace stf
