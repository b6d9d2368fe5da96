#include <benchmark/benchmark.h>

#include <vector>

#include "stf/config.hpp"
#include "stf/encoding.hpp"
#include "stf/model.hpp"
#include "stf/optim.hpp"
#include "stf/train.hpp"

namespace {

stf::Tensor images(std::size_t batch, std::size_t size) {
  stf::CounterRng rng(7);
  std::vector<float> v(batch * 3 * size * size);
  for (auto& e : v) e = static_cast<float>(rng.uniform());
  return stf::Tensor::from_data({batch, 3, size, size}, std::move(v));
}

// range(0): 0 = direct coding, 1 = STF-4.
void BM_Encoder(benchmark::State& state) {
  stf::EncoderConfig cfg;
  cfg.scheme = state.range(0) == 0 ? stf::EncodingScheme::direct : stf::EncodingScheme::stf;
  cfg.stf.timesteps = static_cast<std::size_t>(state.range(1));
  stf::Encoder encoder(cfg, stf::CounterRng(1));
  const auto x = images(8, cfg.height);
  stf::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(encoder.forward(x, stf::Phase::eval));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Encoder)->ArgsProduct({{0, 1}, {1, 4, 8}})->Unit(benchmark::kMicrosecond);

void BM_ModelForward(benchmark::State& state) {
  stf::TrainConfig c;
  c.variant = state.range(0) == 0 ? "direct" : "stf4";
  stf::Model model(stf::make_model_config(c), 1);
  const auto x = images(1, c.image_size);
  stf::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x, stf::Phase::eval));
}
BENCHMARK(BM_ModelForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  stf::TrainConfig c;
  c.variant = state.range(0) == 0 ? "direct" : "stf4";
  stf::Model model(stf::make_model_config(c), 1);
  stf::AdamW adam(model.parameters(), stf::AdamWOptions{});
  const auto x = images(8, c.image_size);
  const std::vector<int> labels = {0, 1, 2, 3, 0, 1, 2, 3};
  for (auto _ : state) benchmark::DoNotOptimize(stf::train_step(model, adam, x, labels, 1e-3));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
