#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stf/config.hpp"
#include "stf/data.hpp"
#include "stf/model.hpp"
#include "stf/optim.hpp"

namespace stf {

/// Non-finite loss or parameters. The model has been rolled back to the last
/// finite state before this is thrown.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& message, std::size_t step)
      : std::runtime_error(message), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double learning_rate = 0.0;  // at the last step of the epoch
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  std::size_t steps = 0;
};

struct TrainHooks {
  std::function<void(std::size_t step, double loss)> on_step;
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Loads the configured train and test splits.
std::pair<Dataset, Dataset> load_datasets(const TrainConfig& config);

/// Forward over T steps in train mode, cross-entropy, BPTT, one optimizer
/// update. Returns the loss before the update.
double train_step(Model& model, AdamW& optimizer, const Tensor& images, std::span<const int> labels,
                  double learning_rate);

/// Full loop: per-epoch shuffled mini-batches (stream "data"), cosine
/// schedule with warmup, test accuracy after every epoch.
TrainResult train_model(Model& model, const Dataset& train, const Dataset& test, const TrainConfig& config,
                        const TrainHooks& hooks = {});

/// Eval-mode argmax predictions (first maximum wins).
std::vector<int> predict(Model& model, const Tensor& images, const SpikeTransform& transform = {});

double accuracy(Model& model, const Dataset& data, std::size_t batch_size = 64,
                const SpikeTransform& transform = {});

struct ShuffleEvaluation {
  double clean = 0.0;
  double shuffled = 0.0;
  double delta = 0.0;  // shuffled - clean
};

/// Clean accuracy and accuracy with the encoder's spike trains permuted in
/// time before the backbone. Batch b uses shuffle seed derived from (seed, b).
ShuffleEvaluation evaluate_shuffled(Model& model, const Dataset& data, std::uint64_t seed,
                                    std::size_t batch_size = 64);

nlohmann::json metrics_to_json(const TrainConfig& config, const TrainResult& result);

struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  TrainResult result;
};

/// train_model plus artifacts in out_dir: checkpoint.json/.bin and
/// metrics.json. On divergence the rolled-back state is still saved and the
/// DivergenceError is rethrown.
TrainArtifacts run_training(const TrainConfig& config, const std::filesystem::path& out_dir,
                            const TrainHooks& hooks = {});

/// Rebuilds a model from a checkpoint whose manifest embeds its TrainConfig.
std::pair<TrainConfig, Model> load_trained_model(const std::filesystem::path& checkpoint_manifest);

}  // namespace stf
