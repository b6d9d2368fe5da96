#include "stf/backbone.hpp"

#include <stdexcept>

namespace stf {

namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::size_t log2_exact(std::size_t v) {
  std::size_t p = 0;
  while ((std::size_t{1} << p) < v) ++p;
  return p;
}

// LIF over a time-major [T*rest, ...] tensor.
SpikeTensor fire(const Tensor& x, std::size_t timesteps, const LifParams& lif) {
  return lif_sequence(x, timesteps, lif);
}

Tensor flatten_tokens(const SpikeTensor& tokens) {
  const Shape& s = tokens.shape();
  return reshape(tokens.real(), {s[0] * s[1] * s[2], s[3]});
}

void check_tokens(const SpikeTensor& tokens, std::size_t dim, const char* who) {
  const Shape& s = tokens.shape();
  if (s.size() != 4 || s[3] != dim) {
    throw ShapeError(std::string(who) + ": tokens " + to_string(s) + " do not have width " +
                     std::to_string(dim));
  }
}

}  // namespace

void BackboneConfig::validate() const {
  if (timesteps < 1) throw std::invalid_argument("backbone: timesteps must be >= 1");
  if (depth < 1) throw std::invalid_argument("backbone: depth must be >= 1");
  if (heads < 1 || embed_dim % heads != 0) {
    throw std::invalid_argument("backbone: embed_dim " + std::to_string(embed_dim) +
                                " not divisible by heads " + std::to_string(heads));
  }
  if (!is_power_of_two(merge)) throw std::invalid_argument("backbone: merge must be a power of two");
  const std::size_t stages = log2_exact(merge);
  if (stages > 1 && embed_dim % (std::size_t{1} << (stages - 1)) != 0) {
    throw std::invalid_argument("backbone: embed_dim must be divisible by merge/2");
  }
  if (num_classes < 1 || in_channels < 1 || mlp_ratio < 1) {
    throw std::invalid_argument("backbone: extents must be positive");
  }
  lif.validate();
}

SpikingPatchEmbedding::SpikingPatchEmbedding(const BackboneConfig& config, CounterRng rng)
    : config_(config) {
  const std::size_t p = log2_exact(config.merge);
  std::size_t in = config.in_channels;
  if (p == 0) {
    stages_.emplace_back(in, config.embed_dim, 3, 1, rng.derive(0));
    pooled_.push_back(false);
    return;
  }
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t out = config.embed_dim >> (p - 1 - i);
    stages_.emplace_back(in, out, 3, 1, rng.derive(i));
    pooled_.push_back(true);
    in = out;
  }
}

SpikeTensor SpikingPatchEmbedding::forward(const SpikeTensor& spikes, Phase phase,
                                           ActivityTrace* trace) {
  const Shape& s = spikes.shape();
  if (s.size() != 5 || s[0] != config_.timesteps || s[2] != config_.in_channels) {
    throw ShapeError("patch embedding: input " + to_string(s) + " is not [T,B," +
                     std::to_string(config_.in_channels) + ",H,W]");
  }
  if (s[3] % config_.merge != 0 || s[4] % config_.merge != 0) {
    throw ShapeError("patch embedding: spatial extent " + std::to_string(s[3]) + "x" +
                     std::to_string(s[4]) + " not divisible by merge " +
                     std::to_string(config_.merge));
  }
  const std::size_t T = s[0], B = s[1];
  Tensor x = reshape(spikes.real(), {T * B, s[2], s[3], s[4]});
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Shape xs = x.shape();
    if (trace) {
      const auto& conv = stages_[i].conv();
      trace->push_back({"sps.stage" + std::to_string(i), TraceKind::block,
                        static_cast<std::uint64_t>(conv.out_channels() * xs[2] * xs[3] *
                                                   conv.in_channels() * 9),
                        spike_rate(x.data()), T});
    }
    x = fire(stages_[i].forward(x, phase), T, config_.lif).real();
    if (pooled_[i]) x = max_pool2d(x, 2);
  }
  const Shape xs = x.shape();
  const std::size_t D = xs[1], N = xs[2] * xs[3];
  Tensor tokens = permute(reshape(x, {T * B, D, N}), {0, 2, 1});
  return SpikeTensor::trusted(reshape(tokens, {T, B, N, D}));
}

void SpikingPatchEmbedding::register_into(ParameterSet& params, const std::string& prefix) const {
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    stages_[i].register_into(params, prefix + ".stage" + std::to_string(i));
  }
}

SpikingSelfAttention::SpikingSelfAttention(const BackboneConfig& config, CounterRng rng)
    : config_(config),
      q_(config.embed_dim, config.embed_dim, false, rng.derive("q")),
      k_(config.embed_dim, config.embed_dim, false, rng.derive("k")),
      v_(config.embed_dim, config.embed_dim, false, rng.derive("v")),
      proj_(config.embed_dim, config.embed_dim, false, rng.derive("proj")),
      q_bn_(config.embed_dim, 1),
      k_bn_(config.embed_dim, 1),
      v_bn_(config.embed_dim, 1),
      proj_bn_(config.embed_dim, 1) {}

SpikeTensor SpikingSelfAttention::forward(const SpikeTensor& tokens, Phase phase,
                                          ActivityTrace* trace, const std::string& name) {
  check_tokens(tokens, config_.embed_dim, "self-attention");
  const Shape& s = tokens.shape();
  const std::size_t T = s[0], TB = s[0] * s[1], N = s[2], D = s[3];
  const std::size_t h = config_.heads, d = D / h;
  const Tensor x = flatten_tokens(tokens);

  SpikeTensor q = fire(q_bn_.forward(q_.forward(x), phase), T, config_.lif);
  SpikeTensor k = fire(k_bn_.forward(k_.forward(x), phase), T, config_.lif);
  SpikeTensor v = fire(v_bn_.forward(v_.forward(x), phase), T, config_.lif);

  Tensor qh = reshape(permute(reshape(q.real(), {TB, N, h, d}), {0, 2, 1, 3}), {TB * h, N, d});
  Tensor kt = reshape(permute(reshape(k.real(), {TB, N, h, d}), {0, 2, 3, 1}), {TB * h, d, N});
  Tensor vh = reshape(permute(reshape(v.real(), {TB, N, h, d}), {0, 2, 1, 3}), {TB * h, N, d});
  Tensor attn = scale(bmm(bmm(qh, kt), vh), static_cast<float>(config_.attention_scale));
  Tensor merged = reshape(permute(reshape(attn, {TB, h, N, d}), {0, 2, 1, 3}), {TB * N, D});

  LifParams attn_lif = config_.lif;
  attn_lif.u_th = config_.attention_threshold;
  SpikeTensor a = fire(merged, T, attn_lif);
  SpikeTensor y = fire(proj_bn_.forward(proj_.forward(a.real()), phase), T, config_.lif);

  if (trace) {
    const double rate_in = spike_rate(x.data());
    const auto dense = static_cast<std::uint64_t>(N * D * D);
    const auto mix = static_cast<std::uint64_t>(h * N * N * d);
    trace->push_back({name + ".q", TraceKind::block, dense, rate_in, T});
    trace->push_back({name + ".k", TraceKind::block, dense, rate_in, T});
    trace->push_back({name + ".v", TraceKind::block, dense, rate_in, T});
    trace->push_back({name + ".qk", TraceKind::block, mix, spike_rate(q.data()), T});
    trace->push_back({name + ".attn_v", TraceKind::block, mix, spike_rate(v.data()), T});
    trace->push_back({name + ".proj", TraceKind::block, dense, spike_rate(a.data()), T});
  }
  return SpikeTensor::trusted(reshape(y.real(), s));
}

void SpikingSelfAttention::register_into(ParameterSet& params, const std::string& prefix) const {
  q_.register_into(params, prefix + ".q");
  q_bn_.register_into(params, prefix + ".q_bn");
  k_.register_into(params, prefix + ".k");
  k_bn_.register_into(params, prefix + ".k_bn");
  v_.register_into(params, prefix + ".v");
  v_bn_.register_into(params, prefix + ".v_bn");
  proj_.register_into(params, prefix + ".proj");
  proj_bn_.register_into(params, prefix + ".proj_bn");
}

SpikingMlp::SpikingMlp(const BackboneConfig& config, CounterRng rng)
    : config_(config),
      fc1_(config.embed_dim, config.embed_dim * config.mlp_ratio, false, rng.derive("fc1")),
      fc2_(config.embed_dim * config.mlp_ratio, config.embed_dim, false, rng.derive("fc2")),
      bn1_(config.embed_dim * config.mlp_ratio, 1),
      bn2_(config.embed_dim, 1) {}

SpikeTensor SpikingMlp::forward(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace,
                                const std::string& name) {
  check_tokens(tokens, config_.embed_dim, "mlp");
  const Shape& s = tokens.shape();
  const std::size_t T = s[0], N = s[2], D = s[3], hidden = D * config_.mlp_ratio;
  const Tensor x = flatten_tokens(tokens);
  SpikeTensor h = fire(bn1_.forward(fc1_.forward(x), phase), T, config_.lif);
  SpikeTensor y = fire(bn2_.forward(fc2_.forward(h.real()), phase), T, config_.lif);
  if (trace) {
    trace->push_back({name + ".fc1", TraceKind::block, static_cast<std::uint64_t>(N * D * hidden),
                      spike_rate(x.data()), T});
    trace->push_back({name + ".fc2", TraceKind::block, static_cast<std::uint64_t>(N * hidden * D),
                      spike_rate(h.data()), T});
  }
  return SpikeTensor::trusted(reshape(y.real(), s));
}

void SpikingMlp::register_into(ParameterSet& params, const std::string& prefix) const {
  fc1_.register_into(params, prefix + ".fc1");
  bn1_.register_into(params, prefix + ".bn1");
  fc2_.register_into(params, prefix + ".fc2");
  bn2_.register_into(params, prefix + ".bn2");
}

TransformerBlock::TransformerBlock(const BackboneConfig& config, CounterRng rng)
    : attention_(config, rng.derive("attention")), mlp_(config, rng.derive("mlp")) {}

SpikeTensor TransformerBlock::forward(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace,
                                      const std::string& name) {
  SpikeTensor a = attention_.forward(tokens, phase, trace, name + ".ssa");
  SpikeTensor x1 = SpikeTensor::trusted(spike_or(tokens.real(), a.real()));
  SpikeTensor m = mlp_.forward(x1, phase, trace, name + ".mlp");
  return SpikeTensor::trusted(spike_or(x1.real(), m.real()));
}

void TransformerBlock::register_into(ParameterSet& params, const std::string& prefix) const {
  attention_.register_into(params, prefix + ".ssa");
  mlp_.register_into(params, prefix + ".mlp");
}

ClassifierHead::ClassifierHead(std::size_t embed_dim, std::size_t num_classes, CounterRng rng)
    : head_(embed_dim, num_classes, true, rng) {}

Tensor ClassifierHead::forward(const SpikeTensor& features, ActivityTrace* trace) const {
  const Shape& s = features.shape();
  if (s.size() != 4 || s[3] != head_.in_features()) {
    throw ShapeError("classifier: features " + to_string(s) + " do not have width " +
                     std::to_string(head_.in_features()));
  }
  if (trace) {
    trace->push_back({"head", TraceKind::block,
                      static_cast<std::uint64_t>(head_.in_features() * head_.out_features()),
                      spike_rate(features.data()), 1});
  }
  Tensor pooled = mean_axis(mean_axis(features.real(), 0), 1);  // [B, D]
  return head_.forward(pooled);
}

void ClassifierHead::register_into(ParameterSet& params, const std::string& prefix) const {
  head_.register_into(params, prefix + ".linear");
}

Backbone::Backbone(const BackboneConfig& config, CounterRng rng) : config_(config) {
  config_.validate();
  sps_ = SpikingPatchEmbedding(config_, rng.derive("sps"));
  for (std::size_t i = 0; i < config_.depth; ++i) blocks_.emplace_back(config_, rng.derive(100 + i));
  head_ = ClassifierHead(config_.embed_dim, config_.num_classes, rng.derive("head"));
}

SpikeTensor Backbone::embed(const SpikeTensor& spikes, Phase phase, ActivityTrace* trace) {
  return sps_.forward(spikes, phase, trace);
}

SpikeTensor Backbone::transform(const SpikeTensor& tokens, Phase phase, ActivityTrace* trace) {
  SpikeTensor x = tokens;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    x = blocks_[i].forward(x, phase, trace, "block" + std::to_string(i));
  }
  return x;
}

Tensor Backbone::forward(const SpikeTensor& spikes, Phase phase, ActivityTrace* trace) {
  return head_.forward(transform(embed(spikes, phase, trace), phase, trace), trace);
}

void Backbone::register_into(ParameterSet& params, const std::string& prefix) const {
  sps_.register_into(params, prefix + ".sps");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].register_into(params, prefix + ".block" + std::to_string(i));
  }
  head_.register_into(params, prefix + ".head");
}

}  // namespace stf
