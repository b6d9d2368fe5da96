#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stf/backbone.hpp"
#include "stf/encoding.hpp"

namespace stf {

struct ModelConfig {
  EncoderConfig encoder{};
  BackboneConfig backbone{};
  /// Per-channel input normalization applied inside the model, so attacks
  /// operate on raw [0,1] pixels. Empty means identity.
  std::vector<float> input_mean;
  std::vector<float> input_std;

  void validate() const;
};

/// Applied to encoder output spikes before the backbone (e.g. temporal shuffling).
using SpikeTransform = std::function<SpikeTensor(const SpikeTensor&)>;

/// Encoder + spiking-transformer backbone. Owns its parameters; not copyable
/// because tensor handles would alias.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  /// images [B,C,H,W] in [0,1] -> logits [B,K]
  Tensor forward(const Tensor& images, Phase phase, const SpikeTransform& transform = {},
                 ActivityTrace* trace = nullptr);
  /// Encoder output [T,B,C',H,W].
  SpikeTensor encode(const Tensor& images, Phase phase, ActivityTrace* trace = nullptr);

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const ModelConfig& config() const { return config_; }
  Encoder& encoder() { return encoder_; }
  Backbone& backbone() { return backbone_; }

 private:
  Tensor normalize(const Tensor& images) const;

  ModelConfig config_;
  Encoder encoder_;
  Backbone backbone_;
  ParameterSet params_;
};

}  // namespace stf
