#include "stf/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <Eigen/Core>

namespace stf {

using nlohmann::json;

#ifndef STF_VERSION
#define STF_VERSION "0.0.0"
#endif

std::string version_string() { return STF_VERSION; }

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  out_.open(file, std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write " + file.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      line += '"';
      for (char c : f) {
        if (c == '"') line += '"';
        line += c;
      }
      line += '"';
    } else {
      line += f;
    }
  }
  line += '\n';
  out_ << line;
}

void write_json(const std::filesystem::path& file, const json& value) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << value.dump(2) << '\n';
}

json run_manifest(const std::string& command, const TrainConfig& config, const json& extra) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  json m = {{"command", command},
            {"config", config_to_json(config)},
            {"config_hash", hash},
            {"seed", config.seed},
            {"versions",
             {{"stf_snn", version_string()},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}}}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  return m;
}

void write_run_manifest(const std::filesystem::path& dir, const std::string& command, const TrainConfig& config,
                        const json& extra) {
  write_json(dir / "manifest.json", run_manifest(command, config, extra));
}

void write_histogram_csv(const std::filesystem::path& file, const PatternHistogram& h) {
  CsvWriter csv(file, {"pattern_id", "count", "proportion"});
  for (std::size_t id = 0; id < h.counts.size(); ++id) {
    const double p = h.total ? static_cast<double>(h.counts[id]) / static_cast<double>(h.total) : 0.0;
    csv.row({std::to_string(id), std::to_string(h.counts[id]), format_number(p)});
  }
}

json histogram_summary(const PatternHistogram& h) {
  return {{"T", h.timesteps}, {"total", h.total}, {"distinct", h.distinct()}, {"entropy_bits", spike_entropy(h)}};
}

json energy_to_json(const EnergyReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"name", r.name}, {"term", r.term}, {"operations", r.operations}, {"energy_pj", r.energy_pj}});
  }
  return {{"e_mac_pj", report.e_mac_pj}, {"e_ac_pj", report.e_ac_pj}, {"rows", rows}, {"total_pj", report.total_pj}};
}

void write_latency_csv(const std::filesystem::path& file, const std::vector<LatencyRow>& rows) {
  CsvWriter csv(file, {"config", "mean_ms", "std_ms", "overhead_pct"});
  for (const auto& r : rows) {
    csv.row({r.config, format_number(r.stats.mean_ms), format_number(r.stats.std_ms), format_number(r.overhead_pct)});
  }
}

void write_robustness_csv(const std::filesystem::path& file, const std::vector<double>& budgets,
                          const std::vector<double>& accuracy) {
  if (budgets.size() != accuracy.size()) throw std::invalid_argument("budget/accuracy length mismatch");
  CsvWriter csv(file, {"budget", "accuracy"});
  for (std::size_t i = 0; i < budgets.size(); ++i) csv.row({format_number(budgets[i]), format_number(accuracy[i])});
}

void write_sg_grid_csv(const std::filesystem::path& file, const std::vector<SgGridPoint>& grid) {
  CsvWriter csv(file, {"tau", "u_th", "input", "closed_form", "brute_force", "agree"});
  auto opt = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("none"); };
  for (const auto& p : grid) {
    csv.row({format_number(p.tau), format_number(p.u_th), format_number(p.input), opt(p.closed_form),
             opt(p.brute_force), p.agree() ? "1" : "0"});
  }
}

}  // namespace stf
