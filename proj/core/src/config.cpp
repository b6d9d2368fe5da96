#include "stf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "stf/data.hpp"
#include "stf/rng.hpp"

namespace stf {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "timesteps",  "variant",      "epochs",     "batch_size",     "learning_rate",
      "weight_decay", "warmup_epochs", "seed",    "dataset",        "generator",
      "dataset_path", "data_seed",  "train_size", "test_size",      "image_size",
      "mean",       "std",          "encoder_channels", "embed_dim", "depth",
      "heads",      "merge",        "mlp_ratio",  "tau_m",          "u_th",
      "u_reset",    "integration",  "surrogate_alpha", "use_tspe",  "use_tf",
      "tf_zero_init"};
  return keys;
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<V, std::size_t> || std::is_same_v<V, std::uint64_t>) {
      if (it->is_number_integer() && it->template get<long long>() < 0) {
        throw ConfigError(key, "must be a non-negative integer");
      }
      if (!it->is_number_integer()) throw ConfigError(key, "must be a non-negative integer");
    } else if constexpr (std::is_same_v<V, double>) {
      if (!it->is_number()) throw ConfigError(key, "must be a number");
    } else if constexpr (std::is_same_v<V, bool>) {
      if (!it->is_boolean()) throw ConfigError(key, "must be true or false");
    } else if constexpr (std::is_same_v<V, std::string>) {
      if (!it->is_string()) throw ConfigError(key, "must be a string");
    }
    out = it->template get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::size_t TrainConfig::num_classes() const {
  if (dataset == "cifar10") return 10;
  auto g = parse_generator(generator);
  return g ? generator_classes(*g) : 0;
}

std::size_t TrainConfig::image_extent() const { return dataset == "cifar10" ? 32 : image_size; }

void TrainConfig::validate() const {
  if (timesteps < 1) throw ConfigError("timesteps", "must satisfy T >= 1");
  if (timesteps > 16) throw ConfigError("timesteps", "must satisfy T <= 16");
  if (variant != "direct" && !parse_stf_variant(variant)) {
    throw ConfigError("variant", "must be one of direct, stf1, stf2, stf3, stf4 (got '" + variant + "')");
  }
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!(std::isfinite(learning_rate) && learning_rate >= 0.0)) {
    throw ConfigError("learning_rate", "must be finite and >= 0");
  }
  if (!(std::isfinite(weight_decay) && weight_decay >= 0.0)) {
    throw ConfigError("weight_decay", "must be finite and >= 0");
  }
  if (dataset == "synthetic") {
    auto g = parse_generator(generator);
    if (!g) throw ConfigError("generator", "must be 'bars', 'noisy_bars' or 'blobs' (got '" + generator + "')");
    if (train_size < 2 * generator_classes(*g)) throw ConfigError("train_size", "need at least 2 samples per class");
    if (test_size < 2 * generator_classes(*g)) throw ConfigError("test_size", "need at least 2 samples per class");
    if (image_size != 8 && image_size != 16) throw ConfigError("image_size", "must be 8 or 16");
  } else if (dataset == "cifar10") {
    if (dataset_path.empty()) throw ConfigError("dataset_path", "required for the cifar10 dataset");
  } else {
    throw ConfigError("dataset", "must be 'synthetic' or 'cifar10' (got '" + dataset + "')");
  }
  if (mean.size() != std.size()) throw ConfigError("std", "must have as many entries as mean");
  if (!mean.empty() && mean.size() != 3) throw ConfigError("mean", "must be empty or have 3 entries");
  for (double s : std) {
    if (!positive_finite(s)) throw ConfigError("std", "entries must be finite and > 0");
  }
  if (encoder_channels < 1) throw ConfigError("encoder_channels", "must be >= 1");
  if (embed_dim < 1) throw ConfigError("embed_dim", "must be >= 1");
  if (heads < 1 || embed_dim % heads != 0) throw ConfigError("heads", "must divide embed_dim");
  if (depth < 1) throw ConfigError("depth", "must be >= 1");
  if (merge < 1 || (merge & (merge - 1)) != 0) throw ConfigError("merge", "must be a power of two");
  if (image_extent() % merge != 0) throw ConfigError("merge", "must divide the image size");
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio", "must be >= 1");
  if (!(std::isfinite(tau_m) && tau_m > 1.0)) throw ConfigError("tau_m", "must satisfy tau_m > 1");
  if (!std::isfinite(u_th) || !std::isfinite(u_reset) || !(u_th > u_reset)) {
    throw ConfigError("u_th", "must be finite and above u_reset");
  }
  if (integration != "leaky_input" && integration != "reduced") {
    throw ConfigError("integration", "must be 'leaky_input' or 'reduced'");
  }
  if (!positive_finite(surrogate_alpha)) throw ConfigError("surrogate_alpha", "must be finite and > 0");
  if (variant != "direct" && use_tspe && encoder_channels < 3) {
    throw ConfigError("encoder_channels", "must be >= 3 when the position embedding is enabled");
  }
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known_keys().contains(it.key())) throw ConfigError(it.key(), "unknown configuration key");
  }
  TrainConfig c;
  read(j, "timesteps", c.timesteps);
  read(j, "variant", c.variant);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "warmup_epochs", c.warmup_epochs);
  read(j, "seed", c.seed);
  read(j, "dataset", c.dataset);
  read(j, "generator", c.generator);
  read(j, "dataset_path", c.dataset_path);
  read(j, "data_seed", c.data_seed);
  read(j, "train_size", c.train_size);
  read(j, "test_size", c.test_size);
  read(j, "image_size", c.image_size);
  for (const char* key : {"mean", "std"}) {
    auto it = j.find(key);
    if (it == j.end()) continue;
    if (!it->is_array()) throw ConfigError(key, "must be an array of numbers");
    std::vector<double> v;
    for (const auto& e : *it) {
      if (!e.is_number()) throw ConfigError(key, "must be an array of numbers");
      v.push_back(e.get<double>());
    }
    (std::string(key) == "mean" ? c.mean : c.std) = std::move(v);
  }
  read(j, "encoder_channels", c.encoder_channels);
  read(j, "embed_dim", c.embed_dim);
  read(j, "depth", c.depth);
  read(j, "heads", c.heads);
  read(j, "merge", c.merge);
  read(j, "mlp_ratio", c.mlp_ratio);
  read(j, "tau_m", c.tau_m);
  read(j, "u_th", c.u_th);
  read(j, "u_reset", c.u_reset);
  read(j, "integration", c.integration);
  read(j, "surrogate_alpha", c.surrogate_alpha);
  read(j, "use_tspe", c.use_tspe);
  read(j, "use_tf", c.use_tf);
  read(j, "tf_zero_init", c.tf_zero_init);
  return c;
}

json config_to_json(const TrainConfig& c) {
  return json{{"timesteps", c.timesteps},
              {"variant", c.variant},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"warmup_epochs", c.warmup_epochs},
              {"seed", c.seed},
              {"dataset", c.dataset},
              {"generator", c.generator},
              {"dataset_path", c.dataset_path},
              {"data_seed", c.data_seed},
              {"train_size", c.train_size},
              {"test_size", c.test_size},
              {"image_size", c.image_size},
              {"mean", c.mean},
              {"std", c.std},
              {"encoder_channels", c.encoder_channels},
              {"embed_dim", c.embed_dim},
              {"depth", c.depth},
              {"heads", c.heads},
              {"merge", c.merge},
              {"mlp_ratio", c.mlp_ratio},
              {"tau_m", c.tau_m},
              {"u_th", c.u_th},
              {"u_reset", c.u_reset},
              {"integration", c.integration},
              {"surrogate_alpha", c.surrogate_alpha},
              {"use_tspe", c.use_tspe},
              {"use_tf", c.use_tf},
              {"tf_zero_init", c.tf_zero_init}};
}

TrainConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config", "cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string canonical_config(const TrainConfig& config) { return config_to_json(config).dump(); }

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a64(canonical_config(config)); }

ModelConfig make_model_config(const TrainConfig& c) {
  c.validate();
  ModelConfig m;
  LifParams lif;
  lif.tau_m = c.tau_m;
  lif.u_th = c.u_th;
  lif.u_reset = c.u_reset;
  lif.form = c.integration == "reduced" ? IntegrationForm::reduced : IntegrationForm::leaky_input;
  lif.surrogate.alpha = c.surrogate_alpha;

  EncoderConfig& e = m.encoder;
  e.scheme = c.variant == "direct" ? EncodingScheme::direct : EncodingScheme::stf;
  if (auto v = parse_stf_variant(c.variant)) e.stf.variant = *v;
  e.stf.timesteps = c.timesteps;
  e.in_channels = 3;
  e.out_channels = c.encoder_channels;
  e.height = e.width = c.image_extent();
  e.use_tspe = c.use_tspe;
  e.use_tf = c.use_tf;
  e.tf_zero_init = c.tf_zero_init;
  e.lif = lif;

  BackboneConfig& b = m.backbone;
  b.depth = c.depth;
  b.embed_dim = c.embed_dim;
  b.heads = c.heads;
  b.merge = c.merge;
  b.mlp_ratio = c.mlp_ratio;
  b.num_classes = c.num_classes();
  b.timesteps = c.timesteps;
  b.in_channels = c.encoder_channels;
  b.lif = lif;

  m.input_mean.assign(c.mean.begin(), c.mean.end());
  m.input_std.assign(c.std.begin(), c.std.end());
  m.validate();
  return m;
}

}  // namespace stf
