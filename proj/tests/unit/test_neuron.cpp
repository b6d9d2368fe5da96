#include <doctest.h>

#include "gradcheck.hpp"
#include "stf/neuron.hpp"

using namespace stf;

namespace {
Tensor scalar(float v) { return Tensor::from_data({1}, {v}); }
}  // namespace

TEST_CASE("lif step examples") {
  const LifParams p;
  SUBCASE("sub-threshold charge") {
    auto r = lif_step(LifState{scalar(0.4f)}, scalar(1.0f), p);
    CHECK(r.spikes.data()[0] == 0.0f);
    CHECK(r.state.u.data()[0] == doctest::Approx(0.7f));
  }
  SUBCASE("threshold crossing resets") {
    auto r = lif_step(LifState{scalar(0.9f)}, scalar(1.5f), p);
    CHECK(r.spikes.data()[0] == 1.0f);
    CHECK(r.state.u.data()[0] == 0.0f);
  }
  SUBCASE("zero stays zero") {
    auto r = lif_step(LifState{scalar(0.0f)}, scalar(0.0f), p);
    CHECK(r.spikes.data()[0] == 0.0f);
    CHECK(r.state.u.data()[0] == 0.0f);
  }
}

TEST_CASE("hard reset lands exactly on u_reset") {
  LifParams p;
  p.u_reset = -0.3;
  auto in = testing::random32({200}, 3, -1.0f, 3.0f);
  auto u = testing::random32({200}, 4, -0.5f, 0.9f);
  auto r = lif_step(LifState{u}, in, p);
  for (std::size_t i = 0; i < 200; ++i) {
    if (r.spikes.data()[i] == 1.0f) CHECK(r.state.u.data()[i] == -0.3f);
  }
}

TEST_CASE("reduced form with constant input 0.6 first fires at t=3") {
  LifParams p;
  p.form = IntegrationForm::reduced;
  auto inputs = Tensor::full({6, 1}, 0.6f);
  auto s = lif_sequence(inputs, 6, p);
  CHECK(s.data()[0] == 0.0f);
  CHECK(s.data()[1] == 0.0f);
  CHECK(s.data()[2] == 1.0f);
}

TEST_CASE("sequence with T=1 equals a single step whatever the hook") {
  const LifParams p;
  auto in = testing::random32({1, 10}, 5, 0.0f, 3.0f);
  InjectionHook hook = [](const SpikeTensor& s) { return Tensor::full(s.shape(), 5.0f); };
  auto seq = lif_sequence(in, 1, p, hook);
  auto step = lif_step(LifState::resting({1, 10}, p), in, p);
  for (std::size_t i = 0; i < 10; ++i) CHECK(seq.data()[i] == step.spikes.data()[i]);
}

TEST_CASE("zero hook is the same as no hook") {
  const LifParams p;
  auto in = testing::random32({4, 3, 5}, 6, 0.0f, 3.0f);
  InjectionHook zero = [](const SpikeTensor& s) { return Tensor::zeros(s.shape()); };
  auto a = lif_sequence(in, 4, p);
  auto b = lif_sequence(in, 4, p, zero);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("hook sees all-zero spikes before the second step") {
  const LifParams p;
  auto in = Tensor::full({3, 2}, 5.0f);
  std::size_t calls = 0;
  InjectionHook hook = [&](const SpikeTensor& s) {
    ++calls;
    CHECK(s.shape() == Shape{1, 2});
    return Tensor::zeros(s.shape());
  };
  lif_sequence(in, 3, p, hook);
  CHECK(calls == 2);
}

TEST_CASE("injection is added after the charge") {
  LifParams p;
  p.form = IntegrationForm::reduced;
  // H = 0.5*0.4 + 0.2 + 0.5 = 0.9 below threshold.
  auto r = lif_step(LifState{scalar(0.4f)}, scalar(0.2f), p, scalar(0.5f));
  CHECK(r.spikes.data()[0] == 0.0f);
  CHECK(r.state.u.data()[0] == doctest::Approx(0.9f));
}

TEST_CASE("lif parameters are validated") {
  LifParams p;
  p.tau_m = 1.0;
  CHECK_THROWS(p.validate());
  p = LifParams{};
  p.u_th = 0.0;
  CHECK_THROWS(p.validate());
}

TEST_CASE("sequence rejects a leading axis not divisible by T") {
  CHECK_THROWS_AS(lif_sequence(Tensor::zeros({5, 2}), 2, LifParams{}), ShapeError);
}
