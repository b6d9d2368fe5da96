#include "stf/encoding.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace stf {

VariantLayout select_variant(StfVariant variant) {
  switch (variant) {
    case StfVariant::stf1: return {TspePlacement::pre_conv, FeedbackTarget::input_current};
    case StfVariant::stf2: return {TspePlacement::post_conv, FeedbackTarget::input_current};
    case StfVariant::stf3: return {TspePlacement::pre_conv, FeedbackTarget::membrane};
    case StfVariant::stf4: return {TspePlacement::post_conv, FeedbackTarget::membrane};
  }
  throw std::invalid_argument("unknown STF variant");
}

std::string_view to_string(StfVariant variant) {
  switch (variant) {
    case StfVariant::stf1: return "stf1";
    case StfVariant::stf2: return "stf2";
    case StfVariant::stf3: return "stf3";
    case StfVariant::stf4: return "stf4";
  }
  return "?";
}

std::optional<StfVariant> parse_stf_variant(std::string_view name) {
  if (name == "stf1") return StfVariant::stf1;
  if (name == "stf2") return StfVariant::stf2;
  if (name == "stf3") return StfVariant::stf3;
  if (name == "stf4") return StfVariant::stf4;
  return std::nullopt;
}

Tensor direct_encode(const Tensor& image, std::size_t timesteps) {
  if (timesteps < 1) throw std::invalid_argument("direct_encode: T must be >= 1");
  return repeat_leading(image, timesteps);
}

Tensor init_tspe(std::size_t timesteps, std::size_t channels, std::size_t height,
                 std::size_t width) {
  if (channels < 3) {
    throw std::invalid_argument("init_tspe: need at least 3 channels (one per axis), got " +
                                std::to_string(channels));
  }
  const std::size_t base = channels / 3;
  const std::size_t group_size[3] = {base + channels % 3, base, base};
  std::vector<float> data(timesteps * channels * height * width);
  std::size_t c = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t g = group_size[axis];
    for (std::size_t j = 0; j < g; ++j, ++c) {
      const std::size_t k = j / 2;
      const double freq =
          1.0 / std::pow(10000.0, 2.0 * static_cast<double>(k) / static_cast<double>(g));
      const bool use_sin = j % 2 == 0;
      for (std::size_t t = 0; t < timesteps; ++t)
        for (std::size_t y = 0; y < height; ++y)
          for (std::size_t x = 0; x < width; ++x) {
            const std::size_t pos = axis == 0 ? t : (axis == 1 ? y : x);
            const double phase = static_cast<double>(pos) * freq;
            data[((t * channels + c) * height + y) * width + x] =
                static_cast<float>(use_sin ? std::sin(phase) : std::cos(phase));
          }
    }
  }
  return Tensor::from_data({timesteps, channels, height, width}, std::move(data));
}

void EncoderConfig::validate() const {
  if (stf.timesteps < 1) throw std::invalid_argument("encoder: timesteps must be >= 1");
  if (in_channels < 1 || out_channels < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("encoder: extents must be positive");
  }
  if (has_tspe()) {
    const std::size_t c =
        stf.tspe_placement() == TspePlacement::pre_conv ? in_channels : out_channels;
    if (c < 3) throw std::invalid_argument("encoder: position embedding needs >= 3 channels");
  }
  lif.validate();
}

Encoder::Encoder(const EncoderConfig& config, CounterRng rng) : config_(config) {
  config_.validate();
  conv_bn_ = ConvBn(config_.in_channels, config_.out_channels, 3, 1, rng.derive("conv_bn"));
  if (config_.has_tspe()) {
    const Shape s = tspe_shape();
    Tensor init = init_tspe(s[0], s[1], s[2], s[3]);
    x_tpe_ = Tensor::parameter(s, std::vector<float>(init.data().begin(), init.data().end()));
  }
  if (config_.has_feedback()) {
    w_tf_ = ConvBn(config_.out_channels, config_.out_channels, 3, 1, rng.derive("feedback"));
    if (config_.tf_zero_init) {
      for (auto& v : w_tf_.bn().gamma().mutable_data()) v = 0.0f;
    }
  }
}

Shape Encoder::tspe_shape() const {
  const std::size_t c = config_.stf.tspe_placement() == TspePlacement::pre_conv
                            ? config_.in_channels
                            : config_.out_channels;
  return {config_.timesteps(), c, config_.height, config_.width};
}

void Encoder::set_feedback(ConvBn feedback) {
  if (!config_.has_feedback()) throw std::logic_error("encoder has no feedback path");
  if (feedback.conv().in_channels() != config_.out_channels ||
      feedback.conv().out_channels() != config_.out_channels ||
      feedback.conv().kernel() != 2 * feedback.conv().padding() + 1) {
    throw ShapeError("feedback output [" + std::to_string(feedback.conv().out_channels()) +
                     " channels] does not match drive " +
                     to_string(Shape{config_.out_channels, config_.height, config_.width}));
  }
  w_tf_ = std::move(feedback);
}

void Encoder::set_position_embedding(Tensor x_tpe) {
  if (!config_.has_tspe()) throw std::logic_error("encoder has no position embedding");
  require_same_shape(x_tpe.shape(), tspe_shape(), "set_position_embedding");
  x_tpe.set_requires_grad(true);
  x_tpe_ = std::move(x_tpe);
}

void Encoder::register_into(ParameterSet& params, const std::string& prefix) const {
  conv_bn_.register_into(params, prefix + ".conv_bn");
  if (config_.has_tspe()) params.add_parameter(prefix + ".x_tpe", x_tpe_, false);
  if (config_.has_feedback()) w_tf_.register_into(params, prefix + ".feedback");
}

SpikeTensor Encoder::forward(const Tensor& images, Phase phase, ActivityTrace* trace) {
  const Shape& is = images.shape();
  if (is.size() != 4 || is[1] != config_.in_channels || is[2] != config_.height ||
      is[3] != config_.width) {
    throw ShapeError("encoder: input " + to_string(is) + " does not match " +
                     to_string(Shape{config_.in_channels, config_.height, config_.width}));
  }
  const std::size_t T = config_.timesteps(), B = is[0];
  const std::size_t C = config_.out_channels, H = config_.height, W = config_.width;
  const bool tspe = config_.has_tspe();
  const auto layout = config_.stf.tspe_placement();

  Tensor x = direct_encode(images, T);  // [T,B,Cin,H,W]
  if (tspe && layout == TspePlacement::pre_conv) x = add_broadcast_axis1(x, x_tpe_);
  Tensor drive = conv_bn_.forward(reshape(x, {T * B, config_.in_channels, H, W}), phase);
  if (tspe && layout == TspePlacement::post_conv) {
    drive = reshape(add_broadcast_axis1(reshape(drive, {T, B, C, H, W}), x_tpe_), {T * B, C, H, W});
  }
  if (trace) {
    trace->push_back({"encoder.conv_bn", TraceKind::first_conv,
                      static_cast<std::uint64_t>(C * H * W * config_.in_channels * 9), 1.0, 1});
  }

  SpikeTensor spikes;
  if (!config_.has_feedback()) {
    spikes = lif_sequence(drive, T, config_.lif);
  } else {
    const bool to_membrane = config_.stf.tf_target() == FeedbackTarget::membrane;
    LifState state = LifState::resting({B, C, H, W}, config_.lif);
    std::vector<Tensor> steps;
    steps.reserve(T);
    SpikeTensor previous;
    for (std::size_t t = 0; t < T; ++t) {
      Tensor current = slice_leading(drive, t * B, (t + 1) * B);
      std::optional<Tensor> fb;
      if (t > 0) fb = w_tf_.forward(previous.real(), phase);
      if (trace) {
        trace->push_back({"encoder.feedback.t" + std::to_string(t + 1), TraceKind::feedback_step,
                          static_cast<std::uint64_t>(C * H * W * C * 9),
                          t > 0 ? spike_rate(previous.data()) : 0.0, 1});
      }
      LifStepResult step = (fb && !to_membrane)
                               ? lif_step(state, add(current, *fb), config_.lif)
                               : lif_step(state, current, config_.lif, fb);
      state = step.state;
      previous = step.spikes;
      steps.push_back(step.spikes.real());
    }
    spikes = SpikeTensor::trusted(concat_leading(steps));
  }
  return SpikeTensor::trusted(reshape(spikes.real(), {T, B, C, H, W}));
}

}  // namespace stf
