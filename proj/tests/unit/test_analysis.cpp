#include <doctest.h>

#include <chrono>
#include <cmath>

#include "stf/analysis.hpp"
#include "stf/rng.hpp"

using namespace stf;

namespace {

SpikeTensor random_spikes(const Shape& shape, std::uint64_t seed, double p = 0.4) {
  CounterRng rng(seed);
  std::vector<float> v(numel(shape));
  for (auto& e : v) e = rng.uniform() < p ? 1.0f : 0.0f;
  return SpikeTensor::from_data(shape, std::move(v));
}

PatternHistogram histogram_of(std::size_t t, std::vector<std::uint64_t> counts) {
  PatternHistogram h(t);
  h.counts = std::move(counts);
  for (auto c : h.counts) h.total += c;
  return h;
}

}  // namespace

TEST_CASE("pattern histogram examples") {
  SUBCASE("all zeros put every site on pattern 0") {
    auto h = spike_pattern_histogram(SpikeTensor::zeros({4, 2, 3}));
    CHECK(h.counts[0] == 6);
    CHECK(h.total == 6);
  }
  SUBCASE("T=2 trains (0,1) and (1,0)") {
    // [T=2, sites=2]: site 0 is (0,1), site 1 is (1,0).
    auto h = spike_pattern_histogram(SpikeTensor::from_data({2, 2}, {0, 1, 1, 0}));
    CHECK(h.counts == std::vector<std::uint64_t>{0, 1, 1, 0});
    CHECK(h.total == 2);
  }
  SUBCASE("total matches an independent count") {
    auto s = random_spikes({4, 3, 5, 2, 2}, 1);
    auto h = spike_pattern_histogram(s);
    CHECK(h.total == 3 * 5 * 2 * 2);
    std::vector<std::uint64_t> recount(16, 0);
    const std::size_t sites = 60;
    for (std::size_t site = 0; site < sites; ++site) {
      std::size_t id = 0;
      for (std::size_t t = 0; t < 4; ++t) id = id * 2 + static_cast<std::size_t>(s.data()[t * sites + site]);
      ++recount[id];
    }
    CHECK(h.counts == recount);
  }
  SUBCASE("per-channel pooling only sees one channel") {
    auto h = spike_pattern_histogram(random_spikes({3, 2, 4, 5}, 2), PatternPool::per_channel(1));
    CHECK(h.total == 2 * 5);
    CHECK_THROWS(spike_pattern_histogram(random_spikes({3, 2, 4, 5}, 2), PatternPool::per_channel(4)));
  }
}

TEST_CASE("entropy examples") {
  CHECK(spike_entropy(histogram_of(3, {0, 0, 9, 0, 0, 0, 0, 0})) == 0.0);
  CHECK(spike_entropy(histogram_of(2, {5, 5, 5, 5})) == 2.0);
  CHECK(std::abs(spike_entropy(histogram_of(2, {2, 1, 1, 0})) - 1.5) <= 1e-12);
  for (std::size_t t = 1; t <= 8; ++t) {
    std::vector<std::uint64_t> counts(std::size_t{1} << t, 3);
    CHECK(std::abs(spike_entropy(histogram_of(t, counts)) - static_cast<double>(t)) <= 1e-9);
  }
  CHECK_THROWS(spike_entropy(PatternHistogram(2)));
}

TEST_CASE("entropy is bounded by T") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double h = spike_entropy(spike_pattern_histogram(random_spikes({4, 8, 6}, seed, 0.5)));
    CHECK(h >= 0.0);
    CHECK(h <= 4.0);
  }
}

TEST_CASE("spike generation time examples") {
  CHECK(spike_generation_time({0.6, 1.0, 0.5}) == 3u);
  CHECK(spike_generation_time({1.0, 1.0, 0.5}) == 1u);
  CHECK_FALSE(spike_generation_time({0.5, 1.0, 0.5}).has_value());
  CHECK(sg_brute_force({0.51, 1.0, 0.5}, 10) == 6u);
  CHECK(sg_brute_force({2.0, 1.0, 0.5}) == 1u);
  CHECK(spike_generation_time({0.51, 1.0, 0.5}) == 6u);
  CHECK_FALSE(sg_brute_force({0.49, 1.0, 0.5}, 1000).has_value());
  // At the boundary U = 1 - 2^-t only creeps up on u_th; it enters the 1e-12
  // tie slack at t = 40.
  CHECK_FALSE(sg_brute_force({0.5, 1.0, 0.5}, 39).has_value());
  CHECK(sg_brute_force({0.5, 1.0, 0.5}, 64) == 40u);
}

TEST_CASE("closed form agrees with the recurrence on the full grid in under a second") {
  const auto start = std::chrono::steady_clock::now();
  const auto grid = sg_verification_grid({0.25, 0.5, 0.75}, {0.5, 1.0, 2.0});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(grid.size() > 2000);
  std::size_t bad = 0;
  for (const auto& p : grid) bad += p.agree() && p.closed_form.has_value() ? 0 : 1;
  CHECK(bad == 0);
  CHECK(seconds < 1.0);
}

TEST_CASE("shuffle preserves counts, is seeded, and is the identity at T=1") {
  CounterRng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t t = 1 + rng.below(8);
    auto s = random_spikes({t, 3, 2}, rng.next_u64(), rng.uniform());
    auto out = shuffle_spike_trains(s, static_cast<std::uint64_t>(trial));
    for (std::size_t site = 0; site < 6; ++site) {
      float before = 0, after = 0;
      for (std::size_t k = 0; k < t; ++k) {
        before += s.data()[k * 6 + site];
        after += out.data()[k * 6 + site];
      }
      REQUIRE(before == after);
    }
    if (t == 1) {
      for (std::size_t i = 0; i < s.numel(); ++i) REQUIRE(out.data()[i] == s.data()[i]);
    }
  }
  auto s = random_spikes({6, 10}, 5);
  auto a = shuffle_spike_trains(s, 9), b = shuffle_spike_trains(s, 9);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("shuffle actually reorders some trains") {
  auto s = random_spikes({8, 200}, 6, 0.5);
  auto out = shuffle_spike_trains(s, 1);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < s.numel(); ++i) changed += s.data()[i] != out.data()[i];
  CHECK(changed > 0);
}
