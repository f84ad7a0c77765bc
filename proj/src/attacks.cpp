#include "topoguard/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "topoguard/errors.hpp"
#include "topoguard/projection.hpp"

namespace topoguard {

double StepSchedule::at(int t) const {
  return power == 0.0 ? scale : scale / std::pow(static_cast<double>(t), power);
}

void validate(const AttackConfig& config) {
  if (config.iters < 1) throw ConfigError("attack: iters must be >= 1");
  if (config.rounding_trials < 1) throw ConfigError("attack: rounding trials must be >= 1");
  if (config.inner_steps < 0) throw ConfigError("attack: inner steps must be >= 0");
  if (!(config.step.scale > 0.0)) throw ConfigError("attack: step scale must be positive");
  if (!(config.inner_lr.scale >= 0.0)) throw ConfigError("attack: inner lr must be >= 0");
  validate(config.loss);
}

AttackTarget pseudo_label_target(const Graph& graph, const GcnModel& reference_model) {
  AttackTarget target{graph.test_nodes(), graph.labels};
  if (target.nodes.empty()) throw ConfigError("graph has no test nodes to attack");
  const std::vector<int> predicted = predict_labels(reference_model, graph, graph.adjacency);
  for (int v : target.nodes) target.labels[static_cast<std::size_t>(v)] = predicted[static_cast<std::size_t>(v)];
  return target;
}

AttackMetrics evaluate_perturbation(const GcnModel& model, const Graph& graph,
                                    std::span<const double> s_binary, std::span<const int> nodes) {
  AttackMetrics m;
  m.clean = misclassification_rate(model, graph, graph.adjacency, nodes, graph.labels);
  m.attacked = misclassification_rate(model, graph, apply_perturbation(graph.adjacency, s_binary),
                                      nodes, graph.labels);
  return m;
}

RoundingResult round_perturbation(std::span<const double> s_relaxed, std::size_t budget,
                                  int trials, std::uint64_t seed, const LossEval& loss_eval) {
  if (trials < 1) throw ConfigError("round_perturbation: trials must be >= 1");
  for (double v : s_relaxed)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("round_perturbation: s outside [0,1]");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RoundingResult best;
  bool found = false;
  std::vector<double> draw(s_relaxed.size());
  for (int k = 0; k < trials; ++k) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < s_relaxed.size(); ++i) {
      draw[i] = unit(rng) < s_relaxed[i] ? 1.0 : 0.0;
      ones += draw[i] != 0.0;
    }
    if (ones > budget) continue;
    const double loss = loss_eval(draw);
    if (!found || loss < best.loss) {
      best.s = draw;
      best.loss = loss;
      found = true;
    }
  }
  if (found) return best;

  // Every draw broke the budget: keep the largest entries.
  std::vector<std::size_t> order(s_relaxed.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s_relaxed[a] > s_relaxed[b]; });
  best.s.assign(s_relaxed.size(), 0.0);
  for (std::size_t r = 0; r < std::min(budget, order.size()) && s_relaxed[order[r]] > 0.0; ++r)
    best.s[order[r]] = 1.0;
  best.loss = loss_eval(best.s);
  best.fallback = true;
  return best;
}

namespace {

// Shared loop of the PGD and min-max attacks. `weights` is updated in place by
// the inner ascent when inner_steps > 0.
AttackResult run_relaxed_attack(const Graph& graph, GcnModel& weights,
                                const AttackObjective& objective, const AttackConfig& config,
                                int inner_steps) {
  const std::size_t n = pair_count(graph.num_nodes);
  AttackResult result;
  result.budget = config.budget;
  if (config.budget == 0) result.warnings.push_back("budget is zero; graph left unperturbed");
  const double budget = static_cast<double>(std::min(config.budget, n));

  const double step_scale =
      config.average_over_nodes ? 1.0 / static_cast<double>(objective.nodes.size()) : 1.0;
  std::vector<double> s(n, 0.0);
  std::vector<double> a(n);
  result.loss_trace.reserve(static_cast<std::size_t>(config.iters));
  for (int t = 1; t <= config.iters; ++t) {
    bool recorded = false;
    auto record = [&](double loss) {
      if (recorded) return;
      recorded = true;
      if (t == 1)
        result.initial_loss = loss;
      else
        result.loss_trace.push_back(loss);
    };

    for (int j = 1; j <= inner_steps; ++j) {
      LossAndGrads lg =
          loss_and_grads(weights, graph, s, objective, {.weights = true, .perturbation = false});
      record(lg.loss);
      const double lr = config.inner_lr.at(j);
      auto w0 = weights.w0.values();
      auto w1 = weights.w1.values();
      for (std::size_t k = 0; k < w0.size(); ++k) w0[k] += lr * lg.grad_w.w0.data()[k];
      for (std::size_t k = 0; k < w1.size(); ++k) w1[k] += lr * lg.grad_w.w1.data()[k];
    }

    const LossAndGrads lg =
        loss_and_grads(weights, graph, s, objective, {.weights = false, .perturbation = true});
    record(lg.loss);
    const double eta = config.step.at(t) * step_scale;
    for (std::size_t k = 0; k < n; ++k) a[k] = s[k] - eta * lg.grad_s[k];
    s = project(a, budget).s;
  }
  result.loss_trace.push_back(attack_loss(weights, graph, s, objective));
  result.s_relaxed = std::move(s);
  return result;
}

AttackObjective make_objective(const Graph& graph, const AttackTarget& target,
                               const AttackLoss& loss) {
  AttackObjective objective{target.nodes, target.labels, loss};
  validate(objective, graph.num_nodes);
  return objective;
}

void finish(AttackResult& result, const Graph& graph, const GcnModel& model,
            const AttackTarget& target) {
  result.a_prime = apply_perturbation(graph.adjacency, result.s_binary);
  result.metrics = evaluate_perturbation(model, graph, result.s_binary, target.nodes);
}

}  // namespace

AttackResult pgd_attack(const Graph& graph, const GcnModel& model, const AttackTarget& target,
                        const AttackConfig& config) {
  AttackConfig pgd = config;
  pgd.inner_steps = 0;
  return minmax_attack(graph, model, target, pgd);
}

AttackResult minmax_attack(const Graph& graph, const GcnModel& model, const AttackTarget& target,
                           const AttackConfig& config) {
  validate(config);
  validate(model);
  const AttackObjective objective = make_objective(graph, target, config.loss);

  GcnModel weights = model;
  AttackResult result = run_relaxed_attack(graph, weights, objective, config, config.inner_steps);

  const RoundingResult rounded = round_perturbation(
      result.s_relaxed, config.budget, config.rounding_trials, config.seed,
      [&](std::span<const double> u) { return attack_loss(model, graph, u, objective); });
  result.s_binary = rounded.s;
  result.binary_loss = rounded.loss;
  result.rounding_fallback = rounded.fallback;
  if (rounded.fallback)
    result.warnings.push_back("no rounding draw met the budget; kept the largest entries");
  finish(result, graph, model, target);

  if (config.inner_steps > 0) {
    result.metrics.attacked_retrained =
        misclassification_rate(weights, graph, result.a_prime, target.nodes, graph.labels);
    result.retrained = std::move(weights);
  }
  return result;
}

AttackResult dice_attack(const Graph& graph, std::span<const int> labels, std::size_t budget,
                         std::uint64_t seed) {
  const std::size_t n = graph.num_nodes;
  if (labels.size() != n) throw ShapeError("dice_attack: labels must cover every node");

  std::vector<std::size_t> internal;  // same-label edges, removable
  std::vector<std::size_t> external;  // cross-label non-edges, addable
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      const bool edge = graph.adjacency(i, j) != 0.0;
      const bool same = labels[i] == labels[j];
      if (edge && same) internal.push_back(k);
      if (!edge && !same) external.push_back(k);
    }

  AttackResult result;
  result.budget = budget;
  result.s_binary.assign(pair_count(n), 0.0);
  std::mt19937_64 rng(seed);
  auto take = [&](std::vector<std::size_t>& pool) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t at = pick(rng);
    result.s_binary[pool[at]] = 1.0;
    pool[at] = pool.back();
    pool.pop_back();
  };
  for (std::size_t step = 0; step < budget; ++step) {
    if (internal.empty() && external.empty()) {
      result.budget_shortfall = true;
      result.warnings.push_back("DICE ran out of candidate pairs after " + std::to_string(step) +
                                " flips");
      break;
    }
    bool remove = !internal.empty();
    if (!internal.empty() && !external.empty()) remove = std::bernoulli_distribution(0.5)(rng);
    take(remove ? internal : external);
  }
  result.a_prime = apply_perturbation(graph.adjacency, result.s_binary);
  return result;
}

AttackResult greedy_attack(const Graph& graph, const GcnModel& model, const AttackTarget& target,
                           std::size_t budget, const AttackLoss& loss) {
  validate(model);
  const AttackObjective objective = make_objective(graph, target, loss);
  const std::size_t n = pair_count(graph.num_nodes);

  AttackResult result;
  result.budget = budget;
  if (budget > n) {
    result.warnings.push_back("budget exceeds the number of node pairs; capped");
    budget = n;
  }
  std::vector<double> s(n, 0.0);
  result.initial_loss = attack_loss(model, graph, s, objective);
  for (std::size_t round = 0; round < budget; ++round) {
    const LossAndGrads lg =
        loss_and_grads(model, graph, s, objective, {.weights = false, .perturbation = true});
    std::size_t best = n;
    for (std::size_t k = 0; k < n; ++k)
      if (s[k] == 0.0 && (best == n || lg.grad_s[k] < lg.grad_s[best])) best = k;
    s[best] = 1.0;
    result.loss_trace.push_back(attack_loss(model, graph, s, objective));
  }
  result.binary_loss = result.loss_trace.empty() ? result.initial_loss : result.loss_trace.back();
  result.s_binary = std::move(s);
  finish(result, graph, model, target);
  return result;
}

}  // namespace topoguard
