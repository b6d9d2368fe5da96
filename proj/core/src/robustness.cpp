#include "stf/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "stf/data.hpp"
#include "stf/model.hpp"
#include "stf/ops.hpp"
#include "stf/train.hpp"

namespace stf {

std::string_view to_string(AttackKind kind) { return kind == AttackKind::fgsm ? "fgsm" : "pgd"; }

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  if (name == "fgsm") return AttackKind::fgsm;
  if (name == "pgd") return AttackKind::pgd;
  return std::nullopt;
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("attack epsilon must be finite and >= 0");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("attack eta must be finite and > 0");
  if (steps == 0) throw std::invalid_argument("attack steps must be >= 1");
  if (loss != "cross_entropy") {
    throw std::invalid_argument("unsupported attack loss '" + std::string(loss) + "'");
  }
}

Objective cross_entropy_objective(Model& model, std::span<const int> labels) {
  std::vector<int> y(labels.begin(), labels.end());
  return [&model, y = std::move(y)](const Tensor& x) {
    return cross_entropy(model.forward(x, Phase::eval), std::span<const int>(y));
  };
}

std::vector<float> input_gradient(const Objective& objective, const Tensor& x) {
  Tensor probe = Tensor::parameter(x.shape(), std::vector<float>(x.data().begin(), x.data().end()));
  Tensor loss = objective(probe);
  loss.backward();
  return probe.grad();
}

namespace {

float sign_of(float g) { return g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f); }

// One signed-gradient ascent step from `from`, before any projection.
std::vector<float> signed_step(const Objective& objective, const Tensor& from, float step) {
  const std::vector<float> g = input_gradient(objective, from);
  std::vector<float> out(from.data().begin(), from.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += step * sign_of(g[i]);
  return out;
}

void clamp_range(std::vector<float>& v, InputRange range) {
  for (float& e : v) e = std::clamp(e, range.lo, range.hi);
}

}  // namespace

Tensor fgsm_attack(const Objective& objective, const Tensor& x, double beta, InputRange range) {
  if (!(beta >= 0.0)) throw std::invalid_argument("fgsm budget must be >= 0");
  std::vector<float> adv = signed_step(objective, x, static_cast<float>(beta));
  clamp_range(adv, range);
  return Tensor::from_data(x.shape(), std::move(adv));
}

Tensor pgd_attack(const Objective& objective, const Tensor& x, const AttackConfig& config,
                  InputRange range, const std::function<void(std::size_t, const Tensor&)>& observer) {
  config.validate();
  const auto eps = static_cast<float>(config.epsilon);
  const auto eta = static_cast<float>(config.eta);
  const auto clean = x.data();
  Tensor current = x.detach();
  for (std::size_t k = 0; k < config.steps; ++k) {
    std::vector<float> next = signed_step(objective, current, eta);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = std::clamp(next[i], clean[i] - eps, clean[i] + eps);
    }
    clamp_range(next, range);
    current = Tensor::from_data(x.shape(), std::move(next));
    if (observer) observer(k, current);
  }
  return current;
}

std::vector<double> robustness_curve(Model& model, const Dataset& data, const std::vector<double>& budgets,
                                     const RobustnessOptions& options) {
  if (options.batch_size == 0) throw std::invalid_argument("robustness batch size must be >= 1");
  if (data.size() == 0) throw std::invalid_argument("robustness curve needs a non-empty dataset");
  std::vector<double> curve;
  curve.reserve(budgets.size());
  for (double budget : budgets) {
    if (!(budget >= 0.0)) throw std::invalid_argument("attack budgets must be >= 0");
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < data.size(); begin += options.batch_size) {
      const std::size_t count = std::min(options.batch_size, data.size() - begin);
      std::vector<std::size_t> idx(count);
      std::iota(idx.begin(), idx.end(), begin);
      Tensor x = data.batch_images(idx);
      const std::vector<int> y = data.batch_labels(idx);
      if (budget > 0.0) {
        Objective obj = cross_entropy_objective(model, y);
        if (options.attack == AttackKind::fgsm) {
          x = fgsm_attack(obj, x, budget);
        } else {
          AttackConfig cfg;
          cfg.epsilon = budget;
          cfg.steps = options.pgd_steps;
          cfg.eta = options.pgd_step_factor * budget / static_cast<double>(options.pgd_steps);
          x = pgd_attack(obj, x, cfg);
        }
      }
      const std::vector<int> pred = predict(model, x);
      for (std::size_t i = 0; i < count; ++i) correct += pred[i] == y[i] ? 1 : 0;
    }
    curve.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));
  }
  return curve;
}

}  // namespace stf
