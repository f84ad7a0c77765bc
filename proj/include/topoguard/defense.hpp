#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "topoguard/attacks.hpp"
#include "topoguard/gcn.hpp"
#include "topoguard/graph.hpp"

namespace topoguard {

struct DefenseConfig {
  std::size_t budget = 0;
  int outer_iters = 1000;
  double weight_lr = 0.01;
  StepSchedule attack_step{200.0, 0.5};
  // Scale the inner PGD step by 1/|train nodes|, as in AttackConfig.
  bool average_over_nodes = true;
  int inner_min_steps = 20;
  std::size_t hidden_width = 32;
  std::uint64_t seed = 0;
  // Carry s across outer iterations instead of restarting from 0.
  bool warm_start = true;
};

void validate(const DefenseConfig& config);

struct DefenseResult {
  GcnModel model;
  std::vector<double> loss_trace;  // f(s^(t), W^(t-1)) per outer iteration
  std::vector<double> s_final;
};

/// Every node: ground truth on training nodes, `natural_model`'s clean predictions elsewhere.
AttackTarget defense_target(const Graph& graph, const GcnModel& natural_model);

/// Robust training: each outer iteration runs `inner_min_steps` PGD steps on s
/// minimizing the CE-type loss over `target` (training nodes with ground truth
/// when null), then one gradient-ascent step on W. The inner step sizes follow `attack_step` indexed by inner step.
/// Weights start from a fresh Glorot init of width `hidden_width`.
DefenseResult adversarial_train(const Graph& graph, const DefenseConfig& config,
                                const AttackTarget* target = nullptr);

struct SaddleValues {
  double maxmin_value = 0.0;
  double minmax_value = 0.0;
  double gap() const { return minmax_value - maxmin_value; }
};

/// Evaluates f at the max-min candidate (a) and the min-max candidate (b).
/// The max-min inequality says maxmin_value <= minmax_value at the true optima.
template <typename Weights, typename Perturbation>
SaddleValues saddle_values(
    const std::function<double(const Perturbation&, const Weights&)>& f,
    const Weights& weights_a, const Perturbation& s_a, const Weights& weights_b,
    const Perturbation& s_b) {
  return {f(s_a, weights_a), f(s_b, weights_b)};
}

/// `model_a`/`s_a` come from adversarial_train, `model_b`/`s_b` from a min-max attack.
SaddleValues minmax_maxmin_gap(const Graph& graph, const AttackObjective& objective,
                               const GcnModel& model_a, std::span<const double> s_a,
                               const GcnModel& model_b, std::span<const double> s_b);

}  // namespace topoguard
