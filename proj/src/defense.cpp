#include "topoguard/defense.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "topoguard/errors.hpp"
#include "topoguard/projection.hpp"

namespace topoguard {

void validate(const DefenseConfig& config) {
  if (config.outer_iters < 0) throw ConfigError("defense: outer iterations must be >= 0");
  if (config.inner_min_steps < 0) throw ConfigError("defense: inner steps must be >= 0");
  if (!(config.weight_lr > 0.0)) throw ConfigError("defense: weight lr must be positive");
  if (!(config.attack_step.scale > 0.0)) throw ConfigError("defense: attack step must be positive");
  if (config.hidden_width == 0) throw ConfigError("defense: hidden width must be positive");
}

AttackTarget defense_target(const Graph& graph, const GcnModel& natural_model) {
  AttackTarget target{{}, predict_labels(natural_model, graph, graph.adjacency)};
  target.nodes.resize(graph.num_nodes);
  std::iota(target.nodes.begin(), target.nodes.end(), 0);
  for (int v : graph.train_nodes()) target.labels[static_cast<std::size_t>(v)] = graph.labels[static_cast<std::size_t>(v)];
  return target;
}

DefenseResult adversarial_train(const Graph& graph, const DefenseConfig& config,
                                const AttackTarget* target) {
  validate(config);
  const std::vector<int> train = target ? target->nodes : graph.train_nodes();
  if (train.empty()) throw ConfigError("adversarial_train: no labeled training node");
  const AttackObjective objective{train, target ? target->labels : graph.labels,
                                  {LossKind::ce, 0.0}};
  validate(objective, graph.num_nodes);
  const std::size_t n = pair_count(graph.num_nodes);
  const double budget = static_cast<double>(std::min(config.budget, n));

  DefenseResult result;
  result.model =
      init_model(graph.features.cols(), config.hidden_width, graph.num_classes, config.seed);
  GcnModel& w = result.model;
  const double step_scale =
      config.average_over_nodes ? 1.0 / static_cast<double>(train.size()) : 1.0;
  std::vector<double> s(n, 0.0);
  std::vector<double> a(n);
  result.loss_trace.reserve(static_cast<std::size_t>(config.outer_iters));

  for (int t = 1; t <= config.outer_iters; ++t) try {
    if (!config.warm_start) std::fill(s.begin(), s.end(), 0.0);
    if (budget > 0.0) {
      for (int j = 1; j <= config.inner_min_steps; ++j) {
        const LossAndGrads lg =
            loss_and_grads(w, graph, s, objective, {.weights = false, .perturbation = true});
        const double eta = config.attack_step.at(j) * step_scale;
        for (std::size_t k = 0; k < n; ++k) a[k] = s[k] - eta * lg.grad_s[k];
        s = project(a, budget).s;
      }
    }
    const LossAndGrads lg =
        loss_and_grads(w, graph, s, objective, {.weights = true, .perturbation = false});
    if (!std::isfinite(lg.loss))
      throw NumericError("robust training diverged at iteration " + std::to_string(t));
    result.loss_trace.push_back(lg.loss);
    auto w0 = w.w0.values();
    auto w1 = w.w1.values();
    for (std::size_t k = 0; k < w0.size(); ++k) w0[k] += config.weight_lr * lg.grad_w.w0.data()[k];
    for (std::size_t k = 0; k < w1.size(); ++k) w1[k] += config.weight_lr * lg.grad_w.w1.data()[k];
    if (!w.w0.all_finite() || !w.w1.all_finite())
      throw NumericError("robust training produced non-finite weights at iteration " +
                         std::to_string(t));
  } catch (const NumericError& e) {
    const std::string what = e.what();
    if (what.find("iteration") != std::string::npos) throw;
    throw NumericError("robust training diverged at iteration " + std::to_string(t) + ": " + what);
  }
  result.s_final = std::move(s);
  return result;
}

SaddleValues minmax_maxmin_gap(const Graph& graph, const AttackObjective& objective,
                               const GcnModel& model_a, std::span<const double> s_a,
                               const GcnModel& model_b, std::span<const double> s_b) {
  using Perturbation = std::span<const double>;
  const std::function<double(const Perturbation&, const GcnModel&)> f =
      [&](const Perturbation& s, const GcnModel& w) { return attack_loss(w, graph, s, objective); };
  return saddle_values<GcnModel, Perturbation>(f, model_a, s_a, model_b, s_b);
}

}  // namespace topoguard
