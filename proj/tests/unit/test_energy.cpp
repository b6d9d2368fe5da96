#include <doctest.h>

#include <thread>

#include "stf/energy.hpp"
#include "stf/rng.hpp"

using namespace stf;

TEST_CASE("flop counting") {
  CHECK(count_flops(ConvGeometry{3, 3, 1, 8, 8}) == 576);
  CHECK(count_flops(LinearGeometry{10, 5}) == 50);
  std::uint64_t loops = 0;
  for (int o = 0; o < 32; ++o)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 16; ++c)
          for (int k = 0; k < 9; ++k) ++loops;
  CHECK(count_flops(ConvGeometry{16, 32, 3, 8, 8}) == loops);
  CHECK(loops == 294912);
}

TEST_CASE("firing rate") {
  CHECK(firing_rate(SpikeTensor::zeros({4, 4})) == 0.0);
  CHECK(firing_rate(SpikeTensor::from_data({2}, {1, 1})) == 1.0);
  CHECK(firing_rate(SpikeTensor::from_data({4}, {1, 0, 0, 1})) == 0.5);
}

TEST_CASE("energy worked examples") {
  const LayerProfile first{"conv", LayerKind::mac_layer, 1000, 1.0, 1};
  CHECK(energy_total({first}).total_pj == 4600.0);
  auto with_block = energy_total({first, LayerProfile{"block", LayerKind::spike_layer, 1000, 0.2, 4}});
  CHECK(with_block.total_pj - 4600.0 == 720.0);
  CHECK(with_block.rows.back().energy_pj == 720.0);
  auto silent = energy_total({first, LayerProfile{"block", LayerKind::spike_layer, 5000, 0.0, 4}},
                             {LayerProfile{"tf", LayerKind::spike_layer, 300, 0.0, 1}});
  CHECK(silent.total_pj == 4600.0);
  CHECK(with_block.recomputed_total() == with_block.total_pj);
}

TEST_CASE("energy requires exactly one MAC layer") {
  CHECK_THROWS(energy_total({LayerProfile{"block", LayerKind::spike_layer, 10, 0.1, 4}}));
  const LayerProfile mac{"conv", LayerKind::mac_layer, 10, 1.0, 1};
  CHECK_THROWS(energy_total({mac, mac}));
}

TEST_CASE("AC term is linear in firing rate") {
  CounterRng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<LayerProfile> layers = {{"conv", LayerKind::mac_layer, 1 + rng.below(5000), 1.0, 1}};
    // Rates up to 0.5 so doubling stays a valid rate.
    std::vector<LayerProfile> stf;
    for (int j = 0; j < 4; ++j) {
      layers.push_back({"b" + std::to_string(j), LayerKind::spike_layer, 1 + rng.below(100000), rng.uniform(0, 0.5), 4});
      stf.push_back({"tf" + std::to_string(j), LayerKind::spike_layer, 1 + rng.below(1000), rng.uniform(0, 0.5), 1});
    }
    auto ac_term = [](const EnergyReport& r) {
      double ac = 0.0;
      for (const auto& row : r.rows) ac += row.term == "mac" ? 0.0 : row.energy_pj;
      return ac;
    };
    const double base = ac_term(energy_total(layers, stf));
    for (auto& l : layers) {
      if (l.kind == LayerKind::spike_layer) l.firing_rate *= 2;
    }
    for (auto& l : stf) l.firing_rate *= 2.0;
    const double doubled = ac_term(energy_total(layers, stf));
    CHECK(doubled == 2.0 * base);
  }
}

TEST_CASE("latency measurement") {
  CHECK_THROWS(measure_latency([] {}, 0, 2));
  auto sleep = [] { std::this_thread::sleep_for(std::chrono::milliseconds(2)); };
  auto a = measure_latency(sleep, 1, 5);
  auto b = measure_latency(sleep, 1, 5);
  CHECK(a.repetitions == 5);
  CHECK(a.mean_ms >= 2.0);
  CHECK(a.std_ms >= 0.0);
  CHECK(std::abs(a.mean_ms - b.mean_ms) / a.mean_ms < 0.2);
  CHECK(overhead_percent(LatencyStats{10.0, 0.0, 3}, LatencyStats{11.0, 0.0, 3}) == doctest::Approx(10.0));
}
