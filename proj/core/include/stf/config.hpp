#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stf/model.hpp"

namespace stf {

/// Invalid configuration; the message starts with the offending field name.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Flat run configuration. Every key of the JSON schema maps to one field;
/// see README for the documented schema.
struct TrainConfig {
  std::size_t timesteps = 4;
  std::string variant = "stf4";  // direct | stf1 | stf2 | stf3 | stf4
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t warmup_epochs = 1;
  std::uint64_t seed = 0;

  std::string dataset = "synthetic";  // synthetic | cifar10
  std::string generator = "bars";     // synthetic only
  std::string dataset_path;           // cifar10 only: directory of binary batches
  std::uint64_t data_seed = 1234;
  std::size_t train_size = 512;       // 0 = everything available (cifar10)
  std::size_t test_size = 256;
  std::size_t image_size = 16;        // synthetic only; cifar10 is 32
  std::vector<double> mean;           // per channel, empty = no normalization
  std::vector<double> std;

  std::size_t encoder_channels = 16;
  std::size_t embed_dim = 64;
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t merge = 4;
  std::size_t mlp_ratio = 2;

  double tau_m = 2.0;
  double u_th = 1.0;
  double u_reset = 0.0;
  std::string integration = "leaky_input";  // leaky_input | reduced
  double surrogate_alpha = 2.0;
  bool use_tspe = true;
  bool use_tf = true;
  bool tf_zero_init = false;

  void validate() const;
  std::size_t num_classes() const;
  std::size_t image_extent() const;
};

TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig load_config(const std::filesystem::path& file);

/// Canonical serialization (sorted keys, compact) used for hashing.
std::string canonical_config(const TrainConfig& config);
std::uint64_t config_hash(const TrainConfig& config);

ModelConfig make_model_config(const TrainConfig& config);

}  // namespace stf
