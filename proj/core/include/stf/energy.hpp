#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stf/tensor.hpp"
#include "stf/trace.hpp"

namespace stf {

/// 45 nm per-operation energies in picojoules.
inline constexpr double kMacEnergyPj = 4.6;
inline constexpr double kAcEnergyPj = 0.9;

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t out_height = 0;
  std::size_t out_width = 0;
};

struct LinearGeometry {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
};

/// out_C * out_H * out_W * in_C * k^2
std::uint64_t count_flops(const ConvGeometry& g);
/// in * out
std::uint64_t count_flops(const LinearGeometry& g);

/// Fraction of ones.
double firing_rate(const SpikeTensor& spikes);

enum class LayerKind { mac_layer, spike_layer };

struct LayerProfile {
  std::string name;
  LayerKind kind = LayerKind::spike_layer;
  std::uint64_t flops = 0;  // per sample; per timestep for spike layers
  double firing_rate = 0.0;
  std::size_t timesteps = 1;

  void validate() const;
};

struct EnergyRow {
  std::string name;
  std::string term;  // "mac", "stf", or "block"
  double operations = 0.0;  // FLOPs for MAC, SOPs for AC
  double energy_pj = 0.0;
};

struct EnergyReport {
  double e_mac_pj = kMacEnergyPj;
  double e_ac_pj = kAcEnergyPj;
  std::vector<EnergyRow> rows;
  double total_pj = 0.0;

  /// Sum of the per-row energies, in row order.
  double recomputed_total() const;
};

/// E = E_MAC * FLOPs_first_conv + E_AC * (sum_t f_r(t) * FLOPs_STF + sum_j f_r,j * T * FLOPs_j).
/// `profiles` must contain exactly one mac_layer (the first convolution, BN
/// folded in); `stf_profiles` holds one spike-layer entry per timestep for the
/// feedback convolution. BN is folded and contributes no operations.
EnergyReport energy_total(const std::vector<LayerProfile>& profiles,
                          const std::vector<LayerProfile>& stf_profiles = {});

struct ModelProfile {
  std::vector<LayerProfile> layers;
  std::vector<LayerProfile> stf_steps;
};

/// Splits an activity trace into the two profile lists energy_total expects.
ModelProfile profile_from_trace(const ActivityTrace& trace);

struct LatencyStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t repetitions = 0;
};

/// Wall-clock timing of `run_once` (one batch-1 forward pass) after `warmup`
/// untimed calls. Sample standard deviation over repetitions.
LatencyStats measure_latency(const std::function<void()>& run_once, std::size_t warmup,
                             std::size_t repetitions);

/// 100 * (candidate - baseline) / baseline
double overhead_percent(const LatencyStats& baseline, const LatencyStats& candidate);

}  // namespace stf
