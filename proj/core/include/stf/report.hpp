#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stf/analysis.hpp"
#include "stf/config.hpp"
#include "stf/energy.hpp"

namespace stf {

std::string version_string();

/// Small CSV writer; fields containing separators or quotes are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

/// Shortest round-trip decimal form.
std::string format_number(double value);

void write_json(const std::filesystem::path& file, const nlohmann::json& value);

/// manifest.json: command, full config, config_hash (hex of fnv1a64 over the
/// canonical config), seed, library versions and any extra fields.
nlohmann::json run_manifest(const std::string& command, const TrainConfig& config,
                            const nlohmann::json& extra = nlohmann::json::object());
void write_run_manifest(const std::filesystem::path& dir, const std::string& command, const TrainConfig& config,
                        const nlohmann::json& extra = nlohmann::json::object());

/// pattern_id,count,proportion (one row per pattern, all 2^T ids).
void write_histogram_csv(const std::filesystem::path& file, const PatternHistogram& histogram);
nlohmann::json histogram_summary(const PatternHistogram& histogram);

nlohmann::json energy_to_json(const EnergyReport& report);

struct LatencyRow {
  std::string config;
  LatencyStats stats;
  double overhead_pct = 0.0;
};
void write_latency_csv(const std::filesystem::path& file, const std::vector<LatencyRow>& rows);

void write_robustness_csv(const std::filesystem::path& file, const std::vector<double>& budgets,
                          const std::vector<double>& accuracy);

void write_sg_grid_csv(const std::filesystem::path& file, const std::vector<SgGridPoint>& grid);

}  // namespace stf
