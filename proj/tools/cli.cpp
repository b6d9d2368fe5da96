#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stf/analysis.hpp"
#include "stf/checkpoint.hpp"
#include "stf/config.hpp"
#include "stf/energy.hpp"
#include "stf/report.hpp"
#include "stf/robustness.hpp"
#include "stf/train.hpp"

namespace stf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_file;
  std::optional<std::string> variant;
  std::optional<std::size_t> timesteps;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool checkpoint_flag) {
  cmd->add_option("--config", f.config_file, "Flat JSON run configuration");
  cmd->add_option("--variant", f.variant, "direct | stf1 | stf2 | stf3 | stf4");
  cmd->add_option("--timesteps", f.timesteps, "Number of timesteps T");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--out", f.out, "Output directory");
  if (checkpoint_flag) cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint manifest (checkpoint.json)");
}

TrainConfig resolve_config(const CommonFlags& f) {
  TrainConfig c = f.config_file.empty() ? TrainConfig{} : load_config(f.config_file);
  if (f.variant) c.variant = *f.variant;
  if (f.timesteps) c.timesteps = *f.timesteps;
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return c;
}

fs::path out_dir(const CommonFlags& f, const std::string& command) {
  fs::path dir = f.out.empty() ? fs::path("runs") / command : fs::path(f.out);
  fs::create_directories(dir);
  return dir;
}

/// A trained model when --checkpoint is given, otherwise a freshly seeded one.
struct Loaded {
  TrainConfig config;
  std::optional<Model> model;
};

Loaded load_model(const CommonFlags& f) {
  Loaded l;
  if (!f.checkpoint.empty()) {
    auto [config, model] = load_trained_model(f.checkpoint);
    l.config = std::move(config);
    l.model.emplace(std::move(model));
  } else {
    l.config = resolve_config(f);
    l.model.emplace(make_model_config(l.config), l.config.seed);
  }
  return l;
}

/// First `n` test samples: a fixed, seeded batch for analysis commands.
Tensor analysis_batch(const TrainConfig& config, std::size_t n) {
  const Dataset test = load_datasets(config).second;
  n = std::min(n, test.size());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return test.batch_images(idx);
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
  const TrainConfig config = resolve_config(f);
  const fs::path dir = out_dir(f, "train");
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics& m) {
    out << "epoch " << m.epoch << " loss " << m.train_loss << " train_acc " << m.train_accuracy << " test_acc "
        << m.test_accuracy << '\n';
  };
  const auto artifacts = run_training(config, dir, hooks);
  write_run_manifest(dir, "train", config,
                     {{"checkpoint", artifacts.checkpoint.filename().string()},
                      {"metrics", artifacts.metrics.filename().string()}});
  out << "checkpoint: " << artifacts.checkpoint.string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, std::ostream& out) {
  if (f.checkpoint.empty()) throw CLI::RequiredError("--checkpoint");
  auto l = load_model(f);
  const Dataset test = load_datasets(l.config).second;
  const double acc = accuracy(*l.model, test);
  const fs::path dir = out_dir(f, "eval");
  write_json(dir / "eval.json", {{"accuracy", acc}, {"samples", test.size()}});
  write_run_manifest(dir, "eval", l.config, {{"checkpoint", f.checkpoint}});
  out << "accuracy " << acc << '\n';
  return kExitOk;
}

int cmd_shuffle_eval(const CommonFlags& f, std::uint64_t shuffle_seed, std::ostream& out) {
  auto l = load_model(f);
  const Dataset test = load_datasets(l.config).second;
  const auto r = evaluate_shuffled(*l.model, test, shuffle_seed);
  const fs::path dir = out_dir(f, "shuffle-eval");
  write_json(dir / "shuffle.json",
             {{"clean_accuracy", r.clean}, {"shuffled_accuracy", r.shuffled}, {"delta", r.delta},
              {"shuffle_seed", shuffle_seed}});
  write_run_manifest(dir, "shuffle-eval", l.config, {{"checkpoint", f.checkpoint}});
  out << "clean " << r.clean << " shuffled " << r.shuffled << " delta " << r.delta << '\n';
  return kExitOk;
}

int cmd_entropy(const CommonFlags& f, std::size_t samples, std::optional<std::size_t> channel,
                std::ostream& out) {
  auto l = load_model(f);
  const Tensor x = analysis_batch(l.config, samples);
  SpikeTensor spikes;
  {
    NoGradGuard no_grad;
    spikes = l.model->encode(x, Phase::eval);
  }
  const PatternHistogram h =
      spike_pattern_histogram(spikes, channel ? PatternPool::per_channel(*channel) : PatternPool::global());
  const fs::path dir = out_dir(f, "analyze-entropy");
  write_histogram_csv(dir / "histogram.csv", h);
  json summary = histogram_summary(h);
  summary["variant"] = l.config.variant;
  summary["pool"] = channel ? json(*channel) : json("all_channels");
  write_json(dir / "entropy.json", summary);
  write_run_manifest(dir, "analyze-entropy", l.config, {{"checkpoint", f.checkpoint}, {"samples", x.shape()[0]}});
  out << "entropy_bits " << summary["entropy_bits"].get<double>() << '\n';
  return kExitOk;
}

int cmd_sg_verify(const CommonFlags& f, std::ostream& out) {
  const TrainConfig config = resolve_config(f);
  const auto grid = sg_verification_grid({0.25, 0.5, 0.75}, {0.5, 1.0, 2.0});
  std::size_t disagreements = 0;
  for (const auto& p : grid) disagreements += p.agree() ? 0 : 1;
  const fs::path dir = out_dir(f, "sg-verify");
  write_sg_grid_csv(dir / "sg_grid.csv", grid);
  write_json(dir / "sg_summary.json",
             {{"points", grid.size()}, {"disagreements", disagreements}, {"agree", disagreements == 0}});
  write_run_manifest(dir, "sg-verify", config);
  out << grid.size() << " grid points, " << disagreements << " disagreements\n";
  return disagreements == 0 ? kExitOk : kExitFailure;
}

int cmd_attack(const CommonFlags& f, const std::string& attack, std::vector<double> budgets, std::size_t pgd_steps,
               std::ostream& out) {
  const auto kind = parse_attack_kind(attack);
  if (!kind) throw ConfigError("attack", "must be 'fgsm' or 'pgd' (got '" + attack + "')");
  if (budgets.empty()) budgets = {0.0, 1.0 / 255, 2.0 / 255, 4.0 / 255, 8.0 / 255};
  auto l = load_model(f);
  const Dataset test = load_datasets(l.config).second;
  RobustnessOptions options;
  options.attack = *kind;
  options.pgd_steps = pgd_steps;
  const auto curve = robustness_curve(*l.model, test, budgets, options);
  const fs::path dir = out_dir(f, "attack");
  write_robustness_csv(dir / "robustness.csv", budgets, curve);
  write_run_manifest(dir, "attack", l.config,
                     {{"checkpoint", f.checkpoint}, {"attack", attack}, {"budgets", budgets}, {"pgd_steps", pgd_steps}});
  for (std::size_t i = 0; i < budgets.size(); ++i) out << "budget " << budgets[i] << " accuracy " << curve[i] << '\n';
  return kExitOk;
}

int cmd_energy(const CommonFlags& f, std::size_t samples, std::ostream& out) {
  auto l = load_model(f);
  const Tensor x = analysis_batch(l.config, samples);
  ActivityTrace trace;
  {
    NoGradGuard no_grad;
    l.model->forward(x, Phase::eval, {}, &trace);
  }
  const ModelProfile profile = profile_from_trace(trace);
  const EnergyReport report = energy_total(profile.layers, profile.stf_steps);
  const fs::path dir = out_dir(f, "energy");
  json j = energy_to_json(report);
  j["variant"] = l.config.variant;
  j["samples"] = x.shape()[0];
  write_json(dir / "energy.json", j);
  write_run_manifest(dir, "energy", l.config, {{"checkpoint", f.checkpoint}});
  out << "energy_pj " << report.total_pj << '\n';
  return kExitOk;
}

int cmd_latency(const CommonFlags& f, std::size_t warmup, std::size_t repetitions, std::ostream& out) {
  TrainConfig candidate = resolve_config(f);
  if (candidate.variant == "direct") candidate.variant = "stf4";
  TrainConfig baseline = candidate;
  baseline.variant = "direct";
  const Tensor x = analysis_batch(candidate, 1);

  auto time_config = [&](const TrainConfig& c) {
    Model model(make_model_config(c), c.seed);
    return measure_latency(
        [&] {
          NoGradGuard no_grad;
          model.forward(x, Phase::eval);
        },
        warmup, repetitions);
  };
  const LatencyStats base = time_config(baseline);
  const LatencyStats cand = time_config(candidate);
  std::vector<LatencyRow> rows = {{"direct", base, 0.0}, {candidate.variant, cand, overhead_percent(base, cand)}};
  const fs::path dir = out_dir(f, "latency");
  write_latency_csv(dir / "latency.csv", rows);
  write_run_manifest(dir, "latency", candidate, {{"warmup", warmup}, {"repetitions", repetitions}, {"batch", 1}});
  for (const auto& r : rows) {
    out << r.config << " mean_ms " << r.stats.mean_ms << " std_ms " << r.stats.std_ms << " overhead_pct "
        << r.overhead_pct << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spiking transformer lab with shallow temporal feedback encoding", "stf-snn"};
  app.require_subcommand(1);

  CommonFlags f;
  std::size_t samples = 64;
  std::optional<std::size_t> channel;
  std::uint64_t shuffle_seed = 0;
  std::string attack = "fgsm";
  std::vector<double> budgets;
  std::size_t pgd_steps = 5;
  std::size_t warmup = 3;
  std::size_t repetitions = 20;

  auto* train = app.add_subcommand("train", "Train a model and write checkpoint + metrics");
  add_common(train, f, false);
  auto* eval = app.add_subcommand("eval", "Test accuracy of a checkpoint");
  add_common(eval, f, true);
  auto* entropy = app.add_subcommand("analyze-entropy", "Spike-pattern histogram and entropy of the encoder");
  add_common(entropy, f, true);
  entropy->add_option("--samples", samples, "Images in the analysis batch");
  entropy->add_option("--channel", channel, "Pool one encoder channel instead of all");
  auto* sg = app.add_subcommand("sg-verify", "Check the spike-generation-time closed form on a grid");
  add_common(sg, f, false);
  auto* attack_cmd = app.add_subcommand("attack", "Robustness curve under FGSM or PGD");
  add_common(attack_cmd, f, true);
  attack_cmd->add_option("--attack", attack, "fgsm | pgd");
  attack_cmd->add_option("--budgets", budgets, "Comma-separated L-inf budgets")->delimiter(',');
  attack_cmd->add_option("--pgd-steps", pgd_steps, "PGD iterations");
  auto* energy = app.add_subcommand("energy", "Theoretical energy estimate from measured firing rates");
  add_common(energy, f, true);
  energy->add_option("--samples", samples, "Images in the analysis batch");
  auto* latency = app.add_subcommand("latency", "Per-sample inference latency, direct vs STF");
  add_common(latency, f, false);
  latency->add_option("--warmup", warmup, "Untimed warmup passes");
  latency->add_option("--repetitions", repetitions, "Timed passes (>= 3)");
  auto* shuffle = app.add_subcommand("shuffle-eval", "Accuracy before and after temporal spike shuffling");
  add_common(shuffle, f, true);
  shuffle->add_option("--shuffle-seed", shuffle_seed, "Seed of the shuffling permutation");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(f, out);
    if (*eval) return cmd_eval(f, out);
    if (*entropy) return cmd_entropy(f, samples, channel, out);
    if (*sg) return cmd_sg_verify(f, out);
    if (*attack_cmd) return cmd_attack(f, attack, budgets, pgd_steps, out);
    if (*energy) return cmd_energy(f, samples, out);
    if (*latency) return cmd_latency(f, warmup, repetitions, out);
    if (*shuffle) return cmd_shuffle_eval(f, shuffle_seed, out);
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kExitFailure;
  } catch (const CLI::RequiredError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stf::cli
