#include "stf/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace stf {

std::uint64_t count_flops(const ConvGeometry& g) {
  return static_cast<std::uint64_t>(g.out_channels) * g.out_height * g.out_width * g.in_channels *
         g.kernel * g.kernel;
}

std::uint64_t count_flops(const LinearGeometry& g) {
  return static_cast<std::uint64_t>(g.in_features) * g.out_features;
}

double firing_rate(const SpikeTensor& spikes) {
  if (spikes.numel() == 0) throw std::invalid_argument("firing_rate: empty tensor");
  return spike_rate(spikes.data());
}

void LayerProfile::validate() const {
  if (!(firing_rate >= 0.0 && firing_rate <= 1.0)) {
    throw std::invalid_argument("layer " + name + ": firing rate must be in [0,1]");
  }
  if (timesteps < 1) throw std::invalid_argument("layer " + name + ": timesteps must be >= 1");
}

double EnergyReport::recomputed_total() const {
  double total = 0.0;
  for (const auto& r : rows) total += r.energy_pj;
  return total;
}

EnergyReport energy_total(const std::vector<LayerProfile>& profiles,
                          const std::vector<LayerProfile>& stf_profiles) {
  EnergyReport report;
  std::size_t mac_layers = 0;
  for (const auto& p : profiles) {
    p.validate();
    if (p.kind == LayerKind::mac_layer) ++mac_layers;
  }
  if (mac_layers != 1) {
    throw std::invalid_argument("energy_total: expected exactly one first-convolution (MAC) layer, got " +
                                std::to_string(mac_layers));
  }
  for (const auto& p : profiles) {
    EnergyRow row{p.name, "block", 0.0, 0.0};
    if (p.kind == LayerKind::mac_layer) {
      row.term = "mac";
      row.operations = static_cast<double>(p.flops);
      row.energy_pj = report.e_mac_pj * row.operations;
    } else {
      row.operations = p.firing_rate * static_cast<double>(p.timesteps) * static_cast<double>(p.flops);
      row.energy_pj = report.e_ac_pj * row.operations;
    }
    report.rows.push_back(row);
  }
  for (const auto& p : stf_profiles) {
    p.validate();
    if (p.kind == LayerKind::mac_layer) {
      throw std::invalid_argument("energy_total: feedback step " + p.name + " must be a spike layer");
    }
    EnergyRow row{p.name, "stf", p.firing_rate * static_cast<double>(p.flops), 0.0};
    row.energy_pj = report.e_ac_pj * row.operations;
    report.rows.push_back(row);
  }
  report.total_pj = report.recomputed_total();
  return report;
}

ModelProfile profile_from_trace(const ActivityTrace& trace) {
  ModelProfile profile;
  for (const auto& e : trace) {
    LayerProfile p{e.name, LayerKind::spike_layer, e.flops, e.input_rate, e.timesteps};
    switch (e.kind) {
      case TraceKind::first_conv:
        p.kind = LayerKind::mac_layer;
        p.firing_rate = 1.0;
        profile.layers.push_back(p);
        break;
      case TraceKind::feedback_step:
        profile.stf_steps.push_back(p);
        break;
      case TraceKind::block:
        profile.layers.push_back(p);
        break;
    }
  }
  return profile;
}

LatencyStats measure_latency(const std::function<void()>& run_once, std::size_t warmup,
                             std::size_t repetitions) {
  if (repetitions < 3) throw std::invalid_argument("measure_latency: repetitions must be >= 3");
  for (std::size_t i = 0; i < warmup; ++i) run_once();
  std::vector<double> ms(repetitions);
  for (auto& m : ms) {
    const auto start = std::chrono::steady_clock::now();
    run_once();
    const auto stop = std::chrono::steady_clock::now();
    m = std::chrono::duration<double, std::milli>(stop - start).count();
  }
  LatencyStats s;
  s.repetitions = repetitions;
  for (double m : ms) s.mean_ms += m;
  s.mean_ms /= static_cast<double>(repetitions);
  double sq = 0.0;
  for (double m : ms) sq += (m - s.mean_ms) * (m - s.mean_ms);
  s.std_ms = std::sqrt(sq / static_cast<double>(repetitions - 1));
  return s;
}

double overhead_percent(const LatencyStats& baseline, const LatencyStats& candidate) {
  if (!(baseline.mean_ms > 0.0)) throw std::invalid_argument("overhead_percent: baseline mean must be > 0");
  return 100.0 * (candidate.mean_ms - baseline.mean_ms) / baseline.mean_ms;
}

}  // namespace stf
