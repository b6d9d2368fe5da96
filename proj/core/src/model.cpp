#include "stf/model.hpp"

#include <stdexcept>

namespace stf {

void ModelConfig::validate() const {
  encoder.validate();
  backbone.validate();
  if (backbone.in_channels != encoder.out_channels) {
    throw std::invalid_argument("model: backbone in_channels must equal encoder out_channels");
  }
  if (backbone.timesteps != encoder.timesteps()) {
    throw std::invalid_argument("model: encoder and backbone timesteps differ");
  }
  if (input_mean.size() != input_std.size() ||
      (!input_mean.empty() && input_mean.size() != encoder.in_channels)) {
    throw std::invalid_argument("model: normalization needs one mean/std per input channel");
  }
  for (float s : input_std) {
    if (!(s > 0.0f)) throw std::invalid_argument("model: normalization std must be > 0");
  }
}

Model::Model(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      encoder_((config_.validate(), config_.encoder), CounterRng(seed).derive("init").derive("encoder")),
      backbone_(config_.backbone, CounterRng(seed).derive("init").derive("backbone")) {
  encoder_.register_into(params_, "encoder");
  backbone_.register_into(params_, "backbone");
}

Tensor Model::normalize(const Tensor& images) const {
  if (config_.input_mean.empty()) return images;
  std::vector<float> k(config_.input_std.size()), b(k.size());
  for (std::size_t c = 0; c < k.size(); ++c) {
    k[c] = 1.0f / config_.input_std[c];
    b[c] = -config_.input_mean[c] / config_.input_std[c];
  }
  return channel_affine<float>(images, k, b);
}

SpikeTensor Model::encode(const Tensor& images, Phase phase, ActivityTrace* trace) {
  return encoder_.forward(normalize(images), phase, trace);
}

Tensor Model::forward(const Tensor& images, Phase phase, const SpikeTransform& transform,
                      ActivityTrace* trace) {
  SpikeTensor spikes = encode(images, phase, trace);
  if (transform) spikes = transform(spikes);
  return backbone_.forward(spikes, phase, trace);
}

}  // namespace stf
