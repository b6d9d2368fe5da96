#include "stf/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "stf/analysis.hpp"
#include "stf/checkpoint.hpp"
#include "stf/ops.hpp"
#include "stf/rng.hpp"

namespace stf {

namespace {

std::vector<std::size_t> range_indices(std::size_t begin, std::size_t count) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), begin);
  return idx;
}

bool all_finite(const ParameterSet& params) {
  for (const auto& e : params.entries()) {
    for (float v : e.tensor.data()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<std::vector<float>> snapshot(const ParameterSet& params) {
  std::vector<std::vector<float>> s;
  for (const auto& e : params.entries()) s.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
  return s;
}

void rollback(ParameterSet& params, const std::vector<std::vector<float>>& s) {
  auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::copy(s[i].begin(), s[i].end(), entries[i].tensor.mutable_data().begin());
  }
}

int argmax_row(std::span<const float> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

std::pair<Dataset, Dataset> load_datasets(const TrainConfig& config) {
  config.validate();
  if (config.dataset == "cifar10") {
    const std::filesystem::path dir(config.dataset_path);
    std::vector<std::filesystem::path> train_files;
    for (int i = 1; i <= 5; ++i) train_files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    Dataset train = load_cifar10_binary(train_files);
    Dataset test = load_cifar10_binary(dir / "test_batch.bin");
    if (config.train_size > 0) train = train.slice(0, std::min(config.train_size, train.size()));
    if (config.test_size > 0) test = test.slice(0, std::min(config.test_size, test.size()));
    return {std::move(train), std::move(test)};
  }
  const auto generator = *parse_generator(config.generator);
  // Train and test draw from disjoint seeds of the data stream.
  const CounterRng data_rng = CounterRng(config.data_seed).derive("dataset");
  return {synthetic_dataset(generator, config.train_size, data_rng.derive("train").next_u64(), config.image_size),
          synthetic_dataset(generator, config.test_size, data_rng.derive("test").next_u64(), config.image_size)};
}

double train_step(Model& model, AdamW& optimizer, const Tensor& images, std::span<const int> labels,
                  double learning_rate) {
  model.parameters().zero_grad();
  Tensor loss = cross_entropy(model.forward(images, Phase::train), labels);
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  loss.backward();
  optimizer.step(learning_rate);
  return value;
}

std::vector<int> predict(Model& model, const Tensor& images, const SpikeTransform& transform) {
  NoGradGuard no_grad;
  Tensor logits = model.forward(images, Phase::eval, transform);
  const std::size_t b = logits.shape()[0], k = logits.shape()[1];
  std::vector<int> out(b);
  for (std::size_t i = 0; i < b; ++i) out[i] = argmax_row(logits.data().subspan(i * k, k));
  return out;
}

double accuracy(Model& model, const Dataset& data, std::size_t batch_size, const SpikeTransform& transform) {
  if (data.size() == 0) throw std::invalid_argument("accuracy of an empty dataset");
  const auto& cfg = model.config().encoder;
  if (data.channels != cfg.in_channels || data.height != cfg.height || data.width != cfg.width) {
    throw ShapeError("dataset images are " + std::to_string(data.channels) + "x" + std::to_string(data.height) +
                     "x" + std::to_string(data.width) + " but the model expects " +
                     std::to_string(cfg.in_channels) + "x" + std::to_string(cfg.height) + "x" +
                     std::to_string(cfg.width));
  }
  batch_size = std::max<std::size_t>(1, batch_size);
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const auto idx = range_indices(begin, std::min(batch_size, data.size() - begin));
    const auto pred = predict(model, data.batch_images(idx), transform);
    for (std::size_t i = 0; i < idx.size(); ++i) correct += pred[i] == data.labels[idx[i]] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

ShuffleEvaluation evaluate_shuffled(Model& model, const Dataset& data, std::uint64_t seed,
                                    std::size_t batch_size) {
  ShuffleEvaluation r;
  r.clean = accuracy(model, data, batch_size);
  const CounterRng root = CounterRng(seed).derive("shuffle-eval");
  std::uint64_t batch = 0;
  SpikeTransform shuffle = [&](const SpikeTensor& s) {
    return shuffle_spike_trains(s, root.derive(batch++).next_u64());
  };
  r.shuffled = accuracy(model, data, batch_size, shuffle);
  r.delta = r.shuffled - r.clean;
  return r;
}

TrainResult train_model(Model& model, const Dataset& train, const Dataset& test, const TrainConfig& config,
                        const TrainHooks& hooks) {
  config.validate();
  AdamWOptions opt;
  opt.learning_rate = config.learning_rate;
  opt.weight_decay = config.weight_decay;
  AdamW optimizer(model.parameters(), opt);

  const std::size_t batches = (train.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * config.epochs;
  const std::size_t warmup_steps = batches * config.warmup_epochs;
  const CounterRng order_rng = CounterRng(config.seed).derive("data");

  TrainResult result;
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng = order_rng.derive(epoch);
    rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::size_t correct = 0;
    double lr = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::span<const std::size_t> idx(order.data() + begin, std::min(config.batch_size, train.size() - begin));
      const Tensor x = train.batch_images(idx);
      const std::vector<int> y = train.batch_labels(idx);
      lr = cosine_lr(config.learning_rate, result.steps, total_steps, warmup_steps);

      const auto saved = snapshot(model.parameters());
      model.parameters().zero_grad();
      Tensor logits = model.forward(x, Phase::train);
      Tensor loss = cross_entropy(logits, std::span<const int>(y));
      const double value = loss.item();
      if (!std::isfinite(value)) {
        rollback(model.parameters(), saved);
        throw DivergenceError("non-finite loss at step " + std::to_string(result.steps), result.steps);
      }
      loss.backward();
      optimizer.step(lr);
      if (!all_finite(model.parameters())) {
        rollback(model.parameters(), saved);
        throw DivergenceError("non-finite parameters after step " + std::to_string(result.steps), result.steps);
      }

      const std::size_t k = logits.shape()[1];
      for (std::size_t i = 0; i < idx.size(); ++i) {
        correct += argmax_row(logits.data().subspan(i * k, k)) == y[i] ? 1 : 0;
      }
      loss_sum += value * static_cast<double>(idx.size());
      if (hooks.on_step) hooks.on_step(result.steps, value);
      ++result.steps;
    }

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = loss_sum / static_cast<double>(train.size());
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    m.test_accuracy = accuracy(model, test, 64);
    m.learning_rate = lr;
    result.history.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
  }
  return result;
}

nlohmann::json metrics_to_json(const TrainConfig& config, const TrainResult& result) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& m : result.history) {
    epochs.push_back({{"epoch", m.epoch},
                      {"train_loss", m.train_loss},
                      {"train_accuracy", m.train_accuracy},
                      {"test_accuracy", m.test_accuracy},
                      {"learning_rate", m.learning_rate}});
  }
  return {{"seed", config.seed}, {"config", config_to_json(config)}, {"steps", result.steps}, {"epochs", epochs}};
}

TrainArtifacts run_training(const TrainConfig& config, const std::filesystem::path& out_dir,
                            const TrainHooks& hooks) {
  const ModelConfig model_config = make_model_config(config);
  auto [train, test] = load_datasets(config);
  Model model(model_config, config.seed);

  std::filesystem::create_directories(out_dir);
  TrainArtifacts artifacts;
  artifacts.checkpoint = out_dir / "checkpoint.json";
  artifacts.metrics = out_dir / "metrics.json";
  auto write_metrics = [&](const TrainResult& r) {
    std::ofstream out(artifacts.metrics, std::ios::trunc);
    out << metrics_to_json(config, r).dump(2) << '\n';
  };

  TrainResult partial;
  TrainHooks wrapped = hooks;
  wrapped.on_epoch = [&](const EpochMetrics& m) {
    partial.history.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
  };
  try {
    artifacts.result = train_model(model, train, test, config, wrapped);
  } catch (const DivergenceError& e) {
    partial.steps = e.step();
    save_checkpoint(capture_checkpoint(model.parameters(), config_to_json(config)), artifacts.checkpoint);
    write_metrics(partial);
    throw;
  }
  save_checkpoint(capture_checkpoint(model.parameters(), config_to_json(config)), artifacts.checkpoint);
  write_metrics(artifacts.result);
  return artifacts;
}

std::pair<TrainConfig, Model> load_trained_model(const std::filesystem::path& checkpoint_manifest) {
  Checkpoint c = load_checkpoint(checkpoint_manifest);
  TrainConfig config = config_from_json(c.config);
  Model model(make_model_config(config), config.seed);
  restore_checkpoint(c, model.parameters());
  return {std::move(config), std::move(model)};
}

}  // namespace stf
