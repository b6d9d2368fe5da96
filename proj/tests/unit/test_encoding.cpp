#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "stf/analysis.hpp"
#include "stf/encoding.hpp"

using namespace stf;

namespace {

EncoderConfig small_config(EncodingScheme scheme, StfVariant variant, std::size_t t = 4) {
  EncoderConfig c;
  c.scheme = scheme;
  c.stf.variant = variant;
  c.stf.timesteps = t;
  c.in_channels = 3;
  c.out_channels = 8;
  c.height = c.width = 8;
  return c;
}

/// STF encoder with the embedding zeroed and feedback forced to output zeros,
/// and a direct encoder sharing its ConvBN weights.
std::pair<Encoder, Encoder> neutralized_pair(StfVariant variant, std::size_t t) {
  Encoder stf(small_config(EncodingScheme::stf, variant, t), CounterRng(5));
  Encoder direct(small_config(EncodingScheme::direct, variant, t), CounterRng(6));
  auto src = stf.conv_bn().conv().weight().data();
  std::copy(src.begin(), src.end(), direct.conv_bn().conv().weight().mutable_data().begin());
  for (auto& v : stf.position_embedding().mutable_data()) v = 0.0f;
  for (auto& v : stf.feedback().conv().weight().mutable_data()) v = 0.0f;
  for (auto& v : stf.feedback().bn().gamma().mutable_data()) v = 0.0f;
  for (auto& v : stf.feedback().bn().beta().mutable_data()) v = 0.0f;
  return {std::move(stf), std::move(direct)};
}

}  // namespace

TEST_CASE("direct encoding repeats the image") {
  auto img = testing::random32({2, 3, 4, 4}, 1);
  auto one = direct_encode(img, 1);
  CHECK(one.shape() == Shape{1, 2, 3, 4, 4});
  auto four = direct_encode(img, 4);
  const std::size_t n = img.numel();
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < n; ++i) CHECK(four.data()[t * n + i] == img.data()[i]);
  }
}

TEST_CASE("variant selection") {
  CHECK(select_variant(StfVariant::stf1) == VariantLayout{TspePlacement::pre_conv, FeedbackTarget::input_current});
  CHECK(select_variant(StfVariant::stf2) == VariantLayout{TspePlacement::post_conv, FeedbackTarget::input_current});
  CHECK(select_variant(StfVariant::stf3) == VariantLayout{TspePlacement::pre_conv, FeedbackTarget::membrane});
  CHECK(select_variant(StfVariant::stf4) == VariantLayout{TspePlacement::post_conv, FeedbackTarget::membrane});
  CHECK(StfConfig{}.variant == StfVariant::stf4);
  CHECK(parse_stf_variant("stf2") == StfVariant::stf2);
  CHECK_FALSE(parse_stf_variant("stf5").has_value());
}

TEST_CASE("sinusoidal position embedding") {
  auto x = init_tspe(4, 48, 8, 8);
  CHECK(x.shape() == Shape{4, 48, 8, 8});
  // Channel 0 is the first t-group sin channel, channel 1 its cos.
  CHECK(x.data()[0] == 0.0f);
  CHECK(x.data()[64] == 1.0f);
  for (float v : x.data()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
  // t-group: channel 0 at t = 1 is sin(1).
  CHECK(x.data()[48 * 64] == doctest::Approx(std::sin(1.0)));
  CHECK_NOTHROW(init_tspe(2, 3, 4, 4));
  CHECK_THROWS(init_tspe(2, 2, 4, 4));
}

TEST_CASE("neutralized STF reduces to direct coding bit for bit") {
  for (auto variant : {StfVariant::stf1, StfVariant::stf2, StfVariant::stf3, StfVariant::stf4}) {
    CAPTURE(to_string(variant));
    auto [stf, direct] = neutralized_pair(variant, 4);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto img = testing::random32({2, 3, 8, 8}, 100 + seed);
      for (auto phase : {Phase::eval, Phase::train}) {
        auto a = stf.forward(img, phase);
        auto b = direct.forward(img, phase);
        REQUIRE(a.shape() == b.shape());
        bool same = true;
        for (std::size_t i = 0; i < a.numel(); ++i) same = same && a.data()[i] == b.data()[i];
        CHECK(same);
      }
    }
  }
}

TEST_CASE("with T=1 feedback has no effect") {
  EncoderConfig with = small_config(EncodingScheme::stf, StfVariant::stf4, 1);
  EncoderConfig without = with;
  without.use_tf = false;
  Encoder a(with, CounterRng(9));
  Encoder b(without, CounterRng(9));
  // Same ConvBN weights and embedding; feedback weights differ but are unused.
  auto w = a.conv_bn().conv().weight().data();
  std::copy(w.begin(), w.end(), b.conv_bn().conv().weight().mutable_data().begin());
  auto e = a.position_embedding().data();
  std::copy(e.begin(), e.end(), b.position_embedding().mutable_data().begin());
  auto img = testing::random32({3, 3, 8, 8}, 10);
  auto sa = a.forward(img, Phase::eval);
  auto sb = b.forward(img, Phase::eval);
  for (std::size_t i = 0; i < sa.numel(); ++i) CHECK(sa.data()[i] == sb.data()[i]);
}

TEST_CASE("encoder output is binary and causal") {
  Encoder enc(small_config(EncodingScheme::stf, StfVariant::stf4), CounterRng(11));
  auto img = testing::random32({2, 3, 8, 8}, 12);
  auto s = enc.forward(img, Phase::eval);
  CHECK(s.shape() == Shape{4, 2, 8, 8, 8});
  for (float v : s.data()) CHECK((v == 0.0f || v == 1.0f));

  // Truncating T leaves the earlier steps untouched.
  auto c3 = small_config(EncodingScheme::stf, StfVariant::stf4, 3);
  Encoder short_enc(c3, CounterRng(11));
  auto e = enc.position_embedding().data();
  std::copy(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(short_enc.position_embedding().numel()),
            short_enc.position_embedding().mutable_data().begin());
  auto s3 = short_enc.forward(img, Phase::eval);
  for (std::size_t i = 0; i < s3.numel(); ++i) CHECK(s3.data()[i] == s.data()[i]);
}

TEST_CASE("STF-4 pattern entropy exceeds direct coding at random init") {
  Encoder stf(small_config(EncodingScheme::stf, StfVariant::stf4), CounterRng(21));
  Encoder direct(small_config(EncodingScheme::direct, StfVariant::stf4), CounterRng(21));
  auto img = testing::random32({16, 3, 8, 8}, 22);
  const double h_stf = spike_entropy(spike_pattern_histogram(stf.forward(img, Phase::eval)));
  const double h_direct = spike_entropy(spike_pattern_histogram(direct.forward(img, Phase::eval)));
  CHECK(h_stf > h_direct);
}

TEST_CASE("feedback replacement is shape-checked") {
  Encoder enc(small_config(EncodingScheme::stf, StfVariant::stf4), CounterRng(13));
  CHECK_THROWS_AS(enc.set_feedback(ConvBn(8, 4, 3, 1, CounterRng(1))), ShapeError);
  CHECK_THROWS_AS(enc.set_position_embedding(Tensor::zeros({4, 8, 4, 4})), ShapeError);
}

TEST_CASE("encoder gradients reach embedding and feedback") {
  Encoder enc(small_config(EncodingScheme::stf, StfVariant::stf4), CounterRng(14));
  auto img = testing::random32({2, 3, 8, 8}, 15);
  sum(enc.forward(img, Phase::train).real()).backward();
  CHECK(enc.position_embedding().has_grad());
  CHECK(enc.feedback().conv().weight().has_grad());
  CHECK(enc.conv_bn().conv().weight().has_grad());
}
