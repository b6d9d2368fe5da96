#include "stf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "stf/rng.hpp"

namespace stf {

namespace {

// Ties between the closed form and the recurrence are exact in real
// arithmetic but land on either side after rounding; both routes treat values
// this close to the boundary as reaching it.
constexpr double kLogSnap = 1e-9;
constexpr double kThresholdSlack = 1e-12;

}  // namespace

PatternHistogram::PatternHistogram(std::size_t t) : timesteps(t) {
  if (t < 1 || t > kMaxPatternTimesteps) {
    throw std::invalid_argument("pattern histogram: T must be in [1, 16], got " + std::to_string(t));
  }
  counts.assign(std::size_t{1} << t, 0);
}

void PatternHistogram::merge(const PatternHistogram& other) {
  if (other.timesteps != timesteps) throw std::invalid_argument("pattern histogram: T mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  total += other.total;
}

std::size_t PatternHistogram::distinct() const {
  return static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c > 0; }));
}

PatternHistogram spike_pattern_histogram(const SpikeTensor& spikes, PatternPool pool) {
  const Shape& s = spikes.shape();
  const std::size_t T = s[0];
  if (T > kMaxPatternTimesteps) {
    throw std::invalid_argument("spike_pattern_histogram: T = " + std::to_string(T) +
                                " exceeds 16; 2^T bins are not enumerable");
  }
  PatternHistogram hist(T);
  const std::size_t sites = spikes.numel() / T;
  auto d = spikes.data();

  std::size_t channels = 1, inner = sites;
  if (!pool.all_channels) {
    if (s.size() < 3 || pool.channel >= s[2]) {
      throw std::invalid_argument("spike_pattern_histogram: channel " +
                                  std::to_string(pool.channel) + " not present in " + to_string(s));
    }
    channels = s[2];
    inner = numel(Shape(s.begin() + 3, s.end()));
  }
  for (std::size_t site = 0; site < sites; ++site) {
    if (!pool.all_channels && (site / inner) % channels != pool.channel) continue;
    std::size_t id = 0;
    for (std::size_t t = 0; t < T; ++t) id = (id << 1) | (d[t * sites + site] != 0.0f ? 1u : 0u);
    ++hist.counts[id];
    ++hist.total;
  }
  return hist;
}

double spike_entropy(const PatternHistogram& histogram) {
  if (histogram.total == 0) throw std::invalid_argument("spike_entropy: empty histogram");
  const double total = static_cast<double>(histogram.total);
  double h = 0.0;
  for (std::uint64_t c : histogram.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;  // avoid -0
}

std::optional<std::size_t> spike_generation_time(const SgQuery& q) {
  if (!(q.input > 0.0)) throw std::invalid_argument("spike_generation_time: I must be > 0");
  if (!(q.tau > 0.0 && q.tau < 1.0)) throw std::invalid_argument("spike_generation_time: tau must be in (0,1)");
  const double floor_drive = q.u_th * (1.0 - q.tau);
  if (q.input <= floor_drive) return std::nullopt;
  const double arg = 1.0 - floor_drive / q.input;
  const double steps = std::log(arg) / std::log(q.tau);
  const double sg = std::ceil(steps - kLogSnap);
  return static_cast<std::size_t>(std::max(1.0, sg));
}

std::optional<std::size_t> sg_brute_force(const SgQuery& q, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("sg_brute_force: horizon must be >= 1");
  const double threshold = q.u_th - kThresholdSlack * std::max(1.0, std::abs(q.u_th));
  double u = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    u = q.tau * u + q.input;
    if (u >= threshold) return t;
  }
  return std::nullopt;
}

std::vector<SgGridPoint> sg_verification_grid(const std::vector<double>& taus,
                                              const std::vector<double>& thresholds, double step,
                                              double i_max, std::size_t horizon) {
  std::vector<SgGridPoint> grid;
  for (double tau : taus) {
    for (double u_th : thresholds) {
      const double start = u_th * (1.0 - tau) + step;
      const auto count = static_cast<std::size_t>(std::floor((i_max - start) / step + 1e-9)) + 1;
      for (std::size_t i = 0; i < count; ++i) {
        SgGridPoint p;
        p.tau = tau;
        p.u_th = u_th;
        p.input = start + static_cast<double>(i) * step;
        const SgQuery q{p.input, u_th, tau};
        p.closed_form = spike_generation_time(q);
        p.brute_force = sg_brute_force(q, horizon);
        grid.push_back(p);
      }
    }
  }
  return grid;
}

SpikeTensor shuffle_spike_trains(const SpikeTensor& spikes, std::uint64_t seed) {
  const std::size_t T = spikes.shape()[0];
  if (T < 1) throw std::invalid_argument("shuffle_spike_trains: T must be >= 1");
  const std::size_t sites = spikes.numel() / T;
  auto in = spikes.data();
  std::vector<float> out(in.begin(), in.end());
  if (T > 1) {
    CounterRng rng = CounterRng(seed).derive("shuffle");
    std::vector<std::size_t> order(T);
    for (std::size_t site = 0; site < sites; ++site) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order.begin(), order.end());
      for (std::size_t t = 0; t < T; ++t) out[t * sites + site] = in[order[t] * sites + site];
    }
  }
  return SpikeTensor::trusted(Tensor::from_data(spikes.shape(), std::move(out)));
}

}  // namespace stf
