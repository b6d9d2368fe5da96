// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stf/analysis.hpp"
#include "stf/checkpoint.hpp"
#include "stf/config.hpp"
#include "stf/energy.hpp"
#include "stf/ops.hpp"
#include "stf/robustness.hpp"
#include "stf/train.hpp"

#ifdef STF_HAVE_CLI
#include "cli.hpp"
#endif

namespace fs = std::filesystem;
using namespace stf;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Report {
 public:
  explicit Report(std::set<int> known_red) : known_red_(std::move(known_red)) {}

  void add(int id, const std::string& title, const Outcome& o) {
    std::printf("[%s] %2d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (o.pass) {
      if (known_red_.contains(id)) recovered_.push_back(id);
    } else {
      (known_red_.contains(id) ? waived_ : failed_).push_back(id);
    }
  }

  /// Summary lines; true when every criterion not listed as known red passed.
  bool summarize() const {
    auto list = [](const std::vector<int>& ids) {
      std::string s;
      for (int id : ids) s += (s.empty() ? "" : ", ") + std::to_string(id);
      return s.empty() ? std::string("none") : s;
    };
    std::printf("failed: %s\n", list(failed_).c_str());
    std::printf("failed, known red (see decisions ledger): %s\n", list(waived_).c_str());
    if (!recovered_.empty()) std::printf("listed as known red but passed: %s\n", list(recovered_).c_str());
    return failed_.empty();
  }

 private:
  std::set<int> known_red_;
  std::vector<int> failed_, waived_, recovered_;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

/// Desk-scale task shared by the directional criteria.
TrainConfig desk_config() {
  TrainConfig c;
  c.timesteps = 4;
  c.epochs = 6;
  c.batch_size = 32;
  c.learning_rate = 1e-3;
  c.weight_decay = 0.01;
  c.warmup_epochs = 1;
  c.dataset = "synthetic";
  c.generator = "noisy_bars";
  c.train_size = 512;
  c.test_size = 256;
  c.image_size = 8;
  c.encoder_channels = 16;
  c.embed_dim = 64;
  c.depth = 2;
  c.heads = 4;
  c.merge = 2;
  return c;
}

const std::vector<double> kBudgets = {0.03, 0.06, 0.09, 0.12, 0.15, 0.18, 0.21, 0.24};

constexpr std::uint64_t kShuffleRepeats = 10;

struct DeskRun {
  double entropy_init = 0.0;
  double entropy_trained = 0.0;
  double shuffle_delta = 0.0;  // mean over kShuffleRepeats permutation seeds
  std::vector<double> robustness;
};

Tensor fixed_random_batch(std::uint64_t seed, std::size_t n, std::size_t size) {
  CounterRng rng = CounterRng(seed).derive("acceptance-batch");
  std::vector<float> v(n * 3 * size * size);
  for (auto& e : v) e = static_cast<float>(rng.uniform());
  return Tensor::from_data({n, 3, size, size}, std::move(v));
}

double encoder_entropy(Model& model, const Tensor& batch) {
  NoGradGuard guard;
  return spike_entropy(spike_pattern_histogram(model.encode(batch, Phase::eval)));
}

DeskRun desk_run(const std::string& variant, std::uint64_t seed) {
  TrainConfig c = desk_config();
  c.variant = variant;
  c.seed = seed;
  auto [train, test] = load_datasets(c);
  Model model(make_model_config(c), seed);
  const Tensor batch = fixed_random_batch(seed, 16, c.image_size);
  DeskRun r;
  r.entropy_init = encoder_entropy(model, batch);
  train_model(model, train, test, c);
  r.entropy_trained = encoder_entropy(model, batch);
  for (std::uint64_t k = 0; k < kShuffleRepeats; ++k) {
    r.shuffle_delta += evaluate_shuffled(model, test, 100 * seed + k).delta / static_cast<double>(kShuffleRepeats);
  }
  RobustnessOptions opt;
  opt.attack = AttackKind::fgsm;
  r.robustness = robustness_curve(model, test, kBudgets, opt);
  return r;
}

// --- 1 ---------------------------------------------------------------------
Outcome sg_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const auto grid = sg_verification_grid({0.25, 0.5, 0.75}, {0.5, 1.0, 2.0}, 0.01, 3.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t bad = 0;
  for (const auto& p : grid) bad += (p.agree() && p.closed_form) ? 0 : 1;
  return {bad == 0 && secs < 1.0, fmt("%zu points, %zu disagreements, %.4f s", grid.size(), bad, secs)};
}

// --- 2 ---------------------------------------------------------------------
Outcome entropy_examples() {
  auto hist = [](std::size_t t, std::vector<std::uint64_t> counts) {
    PatternHistogram h(t);
    h.counts = std::move(counts);
    for (auto v : h.counts) h.total += v;
    return h;
  };
  const double degenerate = spike_entropy(hist(4, [] {
    std::vector<std::uint64_t> c(16, 0);
    c[5] = 100;
    return c;
  }()));
  double worst_uniform = 0.0;
  for (std::size_t t = 1; t <= 10; ++t) {
    const double h = spike_entropy(hist(t, std::vector<std::uint64_t>(std::size_t{1} << t, 7)));
    worst_uniform = std::max(worst_uniform, std::abs(h - static_cast<double>(t)));
  }
  const double three = spike_entropy(hist(2, {2, 1, 1, 0}));
  const bool ok = degenerate == 0.0 && worst_uniform <= 1e-9 && std::abs(three - 1.5) <= 1e-12;
  return {ok, fmt("degenerate %.3g, uniform max err %.3g, {.5,.25,.25} -> %.15g", degenerate, worst_uniform, three)};
}

// --- 3 ---------------------------------------------------------------------
Outcome diversity(const std::vector<DeskRun>& stf, const std::vector<DeskRun>& direct) {
  int init_wins = 0, trained_wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < stf.size(); ++i) {
    init_wins += stf[i].entropy_init > direct[i].entropy_init;
    trained_wins += stf[i].entropy_trained > direct[i].entropy_trained;
    detail += fmt(" s%zu init %.3f/%.3f trained %.3f/%.3f;", i + 1, stf[i].entropy_init, direct[i].entropy_init,
                  stf[i].entropy_trained, direct[i].entropy_trained);
  }
  return {init_wins >= 4 && trained_wins >= 4,
          fmt("STF-4 > direct at init %d/5, trained %d/5 (stf/direct bits:", init_wins, trained_wins) + detail + ")"};
}

// --- 4 ---------------------------------------------------------------------
Outcome identity_reduction() {
  std::size_t mismatched = 0, compared = 0;
  for (auto variant : {StfVariant::stf1, StfVariant::stf2, StfVariant::stf3, StfVariant::stf4}) {
    EncoderConfig cfg;
    cfg.stf.variant = variant;
    cfg.out_channels = 8;
    cfg.height = cfg.width = 8;
    EncoderConfig base = cfg;
    base.scheme = EncodingScheme::direct;
    Encoder stf(cfg, CounterRng(1));
    Encoder direct(base, CounterRng(2));
    auto w = stf.conv_bn().conv().weight().data();
    std::copy(w.begin(), w.end(), direct.conv_bn().conv().weight().mutable_data().begin());
    for (auto& v : stf.position_embedding().mutable_data()) v = 0.0f;
    for (auto& v : stf.feedback().conv().weight().mutable_data()) v = 0.0f;
    for (auto& v : stf.feedback().bn().gamma().mutable_data()) v = 0.0f;
    for (auto& v : stf.feedback().bn().beta().mutable_data()) v = 0.0f;
    for (std::uint64_t i = 0; i < 100; ++i) {
      const Tensor x = fixed_random_batch(1000 + i, 1, 8);
      auto a = stf.forward(x, Phase::eval);
      auto b = direct.forward(x, Phase::eval);
      ++compared;
      mismatched += std::equal(a.data().begin(), a.data().end(), b.data().begin()) ? 0 : 1;
    }
  }
  return {mismatched == 0, fmt("%zu/%zu (variant, input) pairs bit-identical", compared - mismatched, compared)};
}

// --- 5 ---------------------------------------------------------------------
double gradcheck(const std::function<Tensor64(const std::vector<Tensor64>&)>& f, std::vector<Tensor64> in) {
  for (auto& x : in) x.set_requires_grad(true);
  f(in).backward();
  double worst = 0.0;
  const double h = 1e-6;
  for (auto& x : in) {
    const auto g = x.grad();
    auto d = x.mutable_data();
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double saved = d[j];
      double plus, minus;
      {
        NoGradGuard guard;
        d[j] = saved + h;
        plus = f(in).item();
        d[j] = saved - h;
        minus = f(in).item();
      }
      d[j] = saved;
      const double num = (plus - minus) / (2 * h);
      const double scale = std::max(std::abs(num), std::abs(g[j]));
      worst = std::max(worst, scale > 1e-6 ? std::abs(num - g[j]) / scale : std::abs(num - g[j]));
    }
  }
  return worst;
}

Tensor64 rnd(const Shape& s, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(numel(s));
  for (auto& e : v) e = rng.normal();
  return Tensor64::from_data(s, std::move(v));
}

Tensor64 wsum(const Tensor64& t) { return sum(mul(t, rnd(t.shape(), 4242))); }

Outcome gradient_integrity() {
  using In = std::vector<Tensor64>;
  const SurrogateSpec spec;
  std::vector<double> rm(3, 0.0), rv(3, 1.0);
  const std::vector<double> sc = {0.5, 2.0, -1.0}, sh = {0.1, 0.0, -0.3};
  const std::vector<int> labels = {0, 3, 1};
  struct Case {
    const char* name;
    std::function<Tensor64(const In&)> f;
    In inputs;
  };
  std::vector<Case> cases = {
      {"add", [](const In& v) { return wsum(add(v[0], v[1])); }, {rnd({2, 3, 4}, 1), rnd({2, 3, 4}, 2)}},
      {"sub", [](const In& v) { return wsum(sub(v[0], v[1])); }, {rnd({2, 3, 4}, 1), rnd({2, 3, 4}, 2)}},
      {"mul", [](const In& v) { return wsum(mul(v[0], v[1])); }, {rnd({2, 3, 4}, 1), rnd({2, 3, 4}, 2)}},
      {"scale", [](const In& v) { return wsum(scale(v[0], 1.3)); }, {rnd({8}, 3)}},
      {"add_scalar", [](const In& v) { return wsum(add_scalar(v[0], 1.3)); }, {rnd({8}, 3)}},
      {"sum", [](const In& v) { return mul(sum(v[0]), sum(v[0])); }, {rnd({8}, 3)}},
      {"mean", [](const In& v) { return mul(mean(v[0]), mean(v[0])); }, {rnd({8}, 3)}},
      {"mean_axis", [](const In& v) { return wsum(mean_axis(v[0], 1)); }, {rnd({2, 3, 4}, 4)}},
      {"reshape", [](const In& v) { return wsum(reshape(v[0], {4, 6})); }, {rnd({2, 3, 4}, 4)}},
      {"permute", [](const In& v) { return wsum(permute(v[0], {1, 2, 0})); }, {rnd({2, 3, 4}, 4)}},
      {"slice", [](const In& v) { return wsum(slice_leading(v[0], 1, 2)); }, {rnd({2, 3, 4}, 4)}},
      {"concat", [](const In& v) { return wsum(concat_leading(v)); }, {rnd({1, 3}, 5), rnd({2, 3}, 6)}},
      {"repeat", [](const In& v) { return wsum(repeat_leading(v[0], 3)); }, {rnd({2, 3}, 5)}},
      {"broadcast_add", [](const In& v) { return wsum(add_broadcast_axis1(v[0], v[1])); },
       {rnd({2, 3, 4}, 7), rnd({2, 4}, 8)}},
      {"matmul", [](const In& v) { return wsum(matmul(v[0], v[1])); }, {rnd({3, 4}, 9), rnd({4, 2}, 10)}},
      {"bmm", [](const In& v) { return wsum(bmm(v[0], v[1])); }, {rnd({2, 3, 4}, 9), rnd({2, 4, 2}, 10)}},
      {"add_bias", [](const In& v) { return wsum(add_bias(v[0], v[1])); }, {rnd({3, 4}, 11), rnd({4}, 12)}},
      {"conv2d", [](const In& v) { return wsum(conv2d(v[0], v[1], {1, 1})); },
       {rnd({2, 2, 4, 4}, 13), rnd({3, 2, 3, 3}, 14)}},
      {"max_pool2d", [](const In& v) { return wsum(max_pool2d(v[0], 2)); }, {rnd({1, 2, 4, 4}, 15)}},
      {"batch_norm", [&](const In& v) {
         auto m = rm;
         auto s = rv;
         return wsum(batch_norm(v[0], v[1], v[2], std::span<double>(m), std::span<double>(s), BatchNormOptions{}));
       },
       {rnd({4, 3, 2}, 16), rnd({3}, 17), rnd({3}, 18)}},
      {"channel_affine", [&](const In& v) {
         return wsum(channel_affine(v[0], std::span<const double>(sc), std::span<const double>(sh)));
       },
       {rnd({2, 3, 2}, 19)}},
      {"cross_entropy", [&](const In& v) { return cross_entropy(v[0], std::span<const int>(labels)); },
       {rnd({3, 4}, 20)}},
      {"arctan_sigmoid", [&](const In& v) { return wsum(arctan_sigmoid(v[0], spec)); }, {rnd({6}, 21)}},
      {"spike_or", [](const In& v) { return wsum(spike_or(v[0], v[1])); }, {rnd({6}, 22), rnd({6}, 23)}},
      {"lif_charge", [](const In& v) { return wsum(lif_charge(v[0], v[1], 2.0, 0.0, IntegrationForm::leaky_input)); },
       {rnd({6}, 24), rnd({6}, 25)}},
      {"lif_charge_reduced",
       [](const In& v) { return wsum(lif_charge(v[0], v[1], 2.0, 0.1, IntegrationForm::reduced)); },
       {rnd({6}, 24), rnd({6}, 25)}},
      {"lif_reset", [](const In& v) { return wsum(lif_reset(v[0], v[1], 0.0)); }, {rnd({6}, 26), rnd({6}, 27)}},
  };
  double worst = 0.0;
  std::string worst_name;
  for (auto& c : cases) {
    const double e = gradcheck(c.f, c.inputs);
    if (e >= worst) {
      worst = e;
      worst_name = c.name;
    }
  }

  // End-to-end: 2-class toy, one batch, at most 200 steps.
  TrainConfig tc = desk_config();
  tc.generator = "blobs";
  tc.timesteps = 4;
  tc.encoder_channels = 8;
  tc.embed_dim = 32;
  tc.heads = 2;
  tc.depth = 1;
  Model model(make_model_config(tc), 7);
  const Dataset toy = synthetic_dataset(SyntheticGenerator::blobs, 8, 99, 8);
  AdamWOptions opt;
  opt.learning_rate = 1e-2;
  opt.weight_decay = 0.0;
  AdamW adam(model.parameters(), opt);
  std::vector<std::size_t> idx(toy.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Tensor x = toy.batch_images(idx);
  std::size_t steps = 0;
  double acc = accuracy(model, toy, 8);
  while (steps < 200 && acc < 1.0) {
    train_step(model, adam, x, toy.labels, opt.learning_rate);
    ++steps;
    acc = accuracy(model, toy, 8);
  }
  const bool ok = worst <= 1e-4 && acc == 1.0;
  return {ok, fmt("%zu ops, worst FD rel err %.2e (%s); toy accuracy %.3f after %zu steps", cases.size(), worst,
                  worst_name.c_str(), acc, steps)};
}

// --- 6 ---------------------------------------------------------------------
Outcome energy_arithmetic() {
  const LayerProfile first{"conv", LayerKind::mac_layer, 1000, 1.0, 1};
  const double mac_only = energy_total({first}).total_pj;
  const auto with_block = energy_total({first, LayerProfile{"block", LayerKind::spike_layer, 1000, 0.2, 4}});
  const double ac = with_block.rows.back().energy_pj;
  CounterRng rng(5);
  int linear = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<LayerProfile> layers = {{"conv", LayerKind::mac_layer, 1 + rng.below(10000), 1.0, 1}};
    std::vector<LayerProfile> tf;
    for (int j = 0; j < 5; ++j) {
      layers.push_back({"b", LayerKind::spike_layer, 1 + rng.below(1000000), rng.uniform(0, 0.5), 4});
      tf.push_back({"tf", LayerKind::spike_layer, 1 + rng.below(10000), rng.uniform(0, 0.5), 1});
    }
    auto ac_term = [](const EnergyReport& r) {
      double s = 0.0;
      for (const auto& row : r.rows) s += row.term == "mac" ? 0.0 : row.energy_pj;
      return s;
    };
    const double base = ac_term(energy_total(layers, tf));
    for (auto& l : layers) {
      if (l.kind == LayerKind::spike_layer) l.firing_rate *= 2;
    }
    for (auto& l : tf) l.firing_rate *= 2;
    linear += ac_term(energy_total(layers, tf)) == 2 * base;
  }
  return {mac_only == 4600.0 && ac == 720.0 && linear == 10,
          fmt("MAC-only %.17g pJ, AC term %.17g pJ, exact doubling %d/10", mac_only, ac, linear)};
}

// --- 7 ---------------------------------------------------------------------
Outcome shuffle_contract(const std::vector<DeskRun>& stf, const std::vector<DeskRun>& direct) {
  CounterRng rng(17);
  std::size_t count_violations = 0, identity_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t t = 1 + rng.below(8), sites = 1 + rng.below(32);
    std::vector<float> v(t * sites);
    const double p = rng.uniform();
    for (auto& e : v) e = rng.uniform() < p ? 1.0f : 0.0f;
    const auto s = SpikeTensor::from_data({t, sites}, v);
    const auto out = shuffle_spike_trains(s, rng.next_u64());
    for (std::size_t k = 0; k < sites; ++k) {
      float a = 0, b = 0;
      for (std::size_t i = 0; i < t; ++i) {
        a += s.data()[i * sites + k];
        b += out.data()[i * sites + k];
      }
      count_violations += a != b;
    }
    if (t == 1) identity_violations += !std::equal(v.begin(), v.end(), out.data().begin());
  }
  int wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < stf.size(); ++i) {
    wins += std::abs(stf[i].shuffle_delta) > std::abs(direct[i].shuffle_delta);
    detail += fmt(" s%zu %+.4f/%+.4f;", i + 1, stf[i].shuffle_delta, direct[i].shuffle_delta);
  }
  return {count_violations == 0 && identity_violations == 0 && wins >= 4,
          fmt("count violations %zu, T=1 non-identity %zu; |mean delta| STF-4 > direct in %d/5 (stf/direct:",
              count_violations, identity_violations, wins) +
              detail + ")"};
}

// --- 8 ---------------------------------------------------------------------
Outcome attack_contracts(const std::vector<DeskRun>& stf, const std::vector<DeskRun>& direct) {
  // Linear toy J(x) = sum((w.x - y)^2), w = (1, -2).
  auto toy = [](const Tensor& x) {
    auto r = add_scalar(matmul(x, Tensor::from_data({2, 1}, {1.0f, -2.0f})), 1.0f);
    return sum(mul(r, r));
  };
  std::size_t pgd_mismatch = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Tensor x = fixed_random_batch(s, 1, 1).detach();
    const Tensor x2 = Tensor::from_data({3, 2}, {x.data()[0], x.data()[1], x.data()[2], 0.1f, 0.9f, 0.5f});
    for (double eps : {0.01, 0.1, 0.4}) {
      AttackConfig cfg;
      cfg.epsilon = eps;
      cfg.eta = eps * (1.0 + static_cast<double>(s % 3));
      cfg.steps = 1;
      auto p = pgd_attack(toy, x2, cfg);
      auto f = fgsm_attack(toy, x2, eps);
      pgd_mismatch += std::equal(p.data().begin(), p.data().end(), f.data().begin()) ? 0 : 1;
    }
  }

  // Ball and range on a real model.
  TrainConfig tc = desk_config();
  tc.depth = 1;
  tc.embed_dim = 16;
  tc.heads = 2;
  Model model(make_model_config(tc), 3);
  const Tensor x = fixed_random_batch(3, 4, tc.image_size);
  const std::vector<int> y = {0, 1, 2, 3};
  auto obj = cross_entropy_objective(model, y);
  std::size_t out_of_bounds = 0;
  for (double eps : {0.0, 0.03, 0.1, 0.3}) {
    AttackConfig cfg;
    cfg.epsilon = eps;
    cfg.eta = std::max(eps / 3, 1e-3);
    cfg.steps = 4;
    for (const Tensor& adv : {fgsm_attack(obj, x, eps), pgd_attack(obj, x, cfg)}) {
      for (std::size_t i = 0; i < x.numel(); ++i) {
        const float v = adv.data()[i];
        out_of_bounds += (v < 0.0f || v > 1.0f || std::abs(v - x.data()[i]) > static_cast<float>(eps) + 1e-7f);
      }
    }
  }

  // Mean accuracy over seeds at each budget.
  std::size_t dominated = 0;
  std::string detail;
  for (std::size_t b = 0; b < kBudgets.size(); ++b) {
    double a = 0.0, d = 0.0;
    for (std::size_t i = 0; i < stf.size(); ++i) {
      a += stf[i].robustness[b] / static_cast<double>(stf.size());
      d += direct[i].robustness[b] / static_cast<double>(direct.size());
    }
    dominated += a > d;
    detail += fmt(" %.2f:%.3f/%.3f", kBudgets[b], a, d);
  }
  const bool ok = pgd_mismatch == 0 && out_of_bounds == 0 && 2 * dominated >= kBudgets.size();
  return {ok, fmt("PGD(1 step)!=FGSM %zu, out-of-bounds %zu; STF-4 mean FGSM accuracy above direct at %zu/%zu budgets "
                  "(budget:stf/direct",
                  pgd_mismatch, out_of_bounds, dominated, kBudgets.size()) +
                  detail + ")"};
}

// --- 9 ---------------------------------------------------------------------
Outcome latency_method(const fs::path& work) {
#ifdef STF_HAVE_CLI
  const fs::path cfg = work / "latency_config.json";
  {
    std::ofstream(cfg) << config_to_json(desk_config()).dump();
  }
  std::ostringstream out, err;
  const int code = cli::run({"latency", "--config", cfg.string(), "--variant", "stf4", "--repetitions", "30",
                             "--warmup", "5", "--out", (work / "latency").string()},
                            out, err);
  if (code != 0) return {false, "latency command failed: " + err.str()};
  std::ifstream csv(work / "latency" / "latency.csv");
  std::string header, direct_row, stf_row;
  std::getline(csv, header);
  std::getline(csv, direct_row);
  std::getline(csv, stf_row);
  auto fields = [](const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    return f;
  };
  const auto d = fields(direct_row), s = fields(stf_row);
  if (header != "config,mean_ms,std_ms,overhead_pct" || d.size() != 4 || s.size() != 4) {
    return {false, "malformed latency.csv"};
  }
  const double overhead = std::stod(s[3]);
  return {overhead > 0.0 && std::stod(s[2]) >= 0.0,
          fmt("direct %s +- %s ms, stf4 %s +- %s ms per sample, overhead %+.2f%%", d[1].c_str(), d[2].c_str(),
              s[1].c_str(), s[2].c_str(), overhead)};
#else
  (void)work;
  return {false, "built without the CLI"};
#endif
}

// --- 10 --------------------------------------------------------------------
Outcome determinism(const fs::path& work) {
  TrainConfig c = desk_config();
  c.epochs = 2;
  c.train_size = 128;
  c.test_size = 64;
  c.seed = 11;
#ifdef STF_HAVE_CLI
  const fs::path cfg = work / "determinism_config.json";
  {
    std::ofstream(cfg) << config_to_json(c).dump();
  }
  for (const char* run : {"a", "b"}) {
    std::ostringstream out, err;
    if (cli::run({"train", "--config", cfg.string(), "--out", (work / run).string()}, out, err) != 0) {
      return {false, "train failed: " + err.str()};
    }
  }
#else
  run_training(c, work / "a");
  run_training(c, work / "b");
#endif
  const bool blob = slurp(work / "a" / "checkpoint.bin") == slurp(work / "b" / "checkpoint.bin");
  const bool manifest = slurp(work / "a" / "checkpoint.json") == slurp(work / "b" / "checkpoint.json");
  const bool metrics = slurp(work / "a" / "metrics.json") == slurp(work / "b" / "metrics.json");
  return {blob && manifest && metrics,
          fmt("checkpoint blob %s, manifest %s, metrics %s", blob ? "identical" : "DIFFERENT",
              manifest ? "identical" : "DIFFERENT", metrics ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> known_red;
  app.add_option("--known-red", known_red, "Criteria reported but not counted toward the exit status");
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::temp_directory_path() / "stf_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  Report report(std::set<int>(known_red.begin(), known_red.end()));
  report.add(1, "closed-form spike generation time matches the recurrence", sg_oracle());
  report.add(2, "spike entropy", entropy_examples());
  report.add(4, "identity reduction", identity_reduction());
  report.add(5, "gradient integrity", gradient_integrity());
  report.add(6, "energy arithmetic", energy_arithmetic());

  std::vector<DeskRun> stf, direct;
  const auto start = std::chrono::steady_clock::now();
  for (auto seed : kSeeds) {
    stf.push_back(desk_run("stf4", seed));
    direct.push_back(desk_run("direct", seed));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("       desk-scale runs: 5 seeds x {stf4, direct} in %.0f s\n", secs);

  report.add(3, "spike-pattern diversity direction", diversity(stf, direct));
  report.add(7, "shuffle contract", shuffle_contract(stf, direct));
  report.add(8, "attack contracts", attack_contracts(stf, direct));
  report.add(9, "latency methodology", latency_method(work));
  report.add(10, "training determinism", determinism(work));
  return report.summarize() ? 0 : 1;
}
