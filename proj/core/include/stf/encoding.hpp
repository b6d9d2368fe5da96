#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "stf/layers.hpp"
#include "stf/neuron.hpp"
#include "stf/trace.hpp"

namespace stf {

enum class StfVariant { stf1, stf2, stf3, stf4 };
enum class TspePlacement { pre_conv, post_conv };
enum class FeedbackTarget { input_current, membrane };

struct VariantLayout {
  TspePlacement placement;
  FeedbackTarget target;

  bool operator==(const VariantLayout&) const = default;
};

/// STF1: (pre_conv, input_current)   STF2: (post_conv, input_current)
/// STF3: (pre_conv, membrane)        STF4: (post_conv, membrane)
VariantLayout select_variant(StfVariant variant);

std::string_view to_string(StfVariant variant);
std::optional<StfVariant> parse_stf_variant(std::string_view name);

struct StfConfig {
  StfVariant variant = StfVariant::stf4;
  std::size_t timesteps = 4;

  TspePlacement tspe_placement() const { return select_variant(variant).placement; }
  FeedbackTarget tf_target() const { return select_variant(variant).target; }
};

/// [d...] -> [T, d...]: the static input repeated at every timestep.
Tensor direct_encode(const Tensor& image, std::size_t timesteps);

/// Sinusoidal T x C x H x W initialization. Channels are split into three
/// contiguous groups for the t, h and w axes (remainder to t). Inside a group
/// of size g, channel 2k holds sin(p / 10000^(2k/g)) and channel 2k+1 the
/// matching cos, with p the position along that group's axis. A trailing odd
/// channel carries the sin term only. Requires C >= 3.
Tensor init_tspe(std::size_t timesteps, std::size_t channels, std::size_t height,
                 std::size_t width);

enum class EncodingScheme { direct, stf };

struct EncoderConfig {
  EncodingScheme scheme = EncodingScheme::stf;
  StfConfig stf{};
  std::size_t in_channels = 3;
  std::size_t out_channels = 16;
  std::size_t height = 16;
  std::size_t width = 16;
  bool use_tspe = true;
  bool use_tf = true;
  /// Initialize the feedback BN scale to zero so feedback starts silent.
  bool tf_zero_init = false;
  LifParams lif{};

  std::size_t timesteps() const { return stf.timesteps; }
  bool has_tspe() const { return scheme == EncodingScheme::stf && use_tspe; }
  bool has_feedback() const { return scheme == EncodingScheme::stf && use_tf; }
  void validate() const;
};

/// Encoding layer: 3x3 ConvBN + LIF on the direct-coded image, optionally
/// extended with the position embedding and temporal feedback.
///
/// Per timestep t (S[0] = 0):
///   drive[t] = ConvBN(X_TPE[t] + I[t])     pre_conv
///            = X_TPE[t] + ConvBN(I[t])     post_conv
///   input_current: LIF input is drive[t] + W_TF(S[t-1])
///   membrane:      W_TF(S[t-1]) is injected into the membrane update
/// The feedback term is absent at t = 1.
class Encoder {
 public:
  Encoder(const EncoderConfig& config, CounterRng rng);

  /// images: [B, C, H, W] -> spikes [T, B, C', H, W].
  SpikeTensor forward(const Tensor& images, Phase phase, ActivityTrace* trace = nullptr);

  void register_into(ParameterSet& params, const std::string& prefix) const;

  const EncoderConfig& config() const { return config_; }
  ConvBn& conv_bn() { return conv_bn_; }
  /// Undefined unless has_tspe().
  Tensor& position_embedding() { return x_tpe_; }
  /// Undefined unless has_feedback().
  ConvBn& feedback() { return w_tf_; }

  /// Replaces the feedback transform; its output channel count must match the
  /// drive it is added to.
  void set_feedback(ConvBn feedback);
  void set_position_embedding(Tensor x_tpe);

 private:
  Shape tspe_shape() const;

  EncoderConfig config_;
  ConvBn conv_bn_;
  Tensor x_tpe_;
  ConvBn w_tf_;
};

}  // namespace stf
