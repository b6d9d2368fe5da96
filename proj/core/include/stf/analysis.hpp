#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stf/tensor.hpp"

namespace stf {

inline constexpr std::size_t kMaxPatternTimesteps = 16;

/// Which sites of a [T, B, C, ...] spike tensor contribute patterns.
struct PatternPool {
  bool all_channels = true;
  std::size_t channel = 0;

  static PatternPool global() { return {}; }
  static PatternPool per_channel(std::size_t c) { return {false, c}; }
};

/// Counts of T-bit spike words. Pattern id puts t = 1 in the most
/// significant bit: the train (s1, ..., sT) maps to sum s_t * 2^(T - t).
struct PatternHistogram {
  std::size_t timesteps = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  explicit PatternHistogram(std::size_t t = 1);
  void merge(const PatternHistogram& other);
  std::size_t distinct() const;
};

/// Every (batch, spatial) site contributes its T-bit train once.
PatternHistogram spike_pattern_histogram(const SpikeTensor& spikes,
                                         PatternPool pool = PatternPool::global());

/// Shannon entropy in bits, -sum p_i log2 p_i; empty bins contribute 0.
double spike_entropy(const PatternHistogram& histogram);

/// Constant-input first-spike query for the recurrence U[t] = tau*U[t-1] + I.
struct SgQuery {
  double input = 0.0;
  double u_th = 1.0;
  double tau = 0.5;  // 1 - 1/tau_m

  static SgQuery from_tau_m(double input, double u_th, double tau_m) {
    return {input, u_th, 1.0 - 1.0 / tau_m};
  }
};

inline constexpr std::size_t kDefaultSgHorizon = 64;

/// ceil(log_tau(1 - u_th(1 - tau)/I)), or nullopt when I <= u_th(1 - tau)
/// (the potential's supremum I/(1 - tau) never reaches threshold).
std::optional<std::size_t> spike_generation_time(const SgQuery& q);

/// Steps the recurrence from U[0] = 0 and returns the first t with
/// U[t] >= u_th, or nullopt within the horizon.
std::optional<std::size_t> sg_brute_force(const SgQuery& q, std::size_t horizon = kDefaultSgHorizon);

struct SgGridPoint {
  double tau = 0.0;
  double u_th = 0.0;
  double input = 0.0;
  std::optional<std::size_t> closed_form;
  std::optional<std::size_t> brute_force;

  bool agree() const { return closed_form == brute_force; }
};

/// I from u_th(1 - tau) + step to i_max (inclusive, integer-stepped to avoid
/// drift) for every (tau, u_th) pair.
std::vector<SgGridPoint> sg_verification_grid(const std::vector<double>& taus,
                                              const std::vector<double>& thresholds,
                                              double step = 0.01, double i_max = 3.0,
                                              std::size_t horizon = kDefaultSgHorizon);

/// Permutes each site's T-step train with its own seeded uniform permutation.
/// Firing counts per site are preserved; the result carries no gradient.
SpikeTensor shuffle_spike_trains(const SpikeTensor& spikes, std::uint64_t seed);

}  // namespace stf
