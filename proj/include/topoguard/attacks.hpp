#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topoguard/gcn.hpp"
#include "topoguard/graph.hpp"
#include "topoguard/losses.hpp"

namespace topoguard {

/// eta_t = scale / t^power for t = 1, 2, ...
struct StepSchedule {
  double scale = 200.0;
  double power = 0.5;

  double at(int t) const;
  static StepSchedule constant(double value) { return {value, 0.0}; }
};

struct AttackConfig {
  std::size_t budget = 0;  // edge flips
  AttackLoss loss;
  int iters = 200;
  StepSchedule step{200.0, 0.5};
  // Scale the PGD step by 1/|nodes|, i.e. descend on the node-averaged loss.
  bool average_over_nodes = true;
  int rounding_trials = 20;
  std::uint64_t seed = 0;
  int inner_steps = 20;                               // min-max only
  StepSchedule inner_lr = StepSchedule::constant(0.01);  // min-max only
};

void validate(const AttackConfig& config);

/// Nodes entering the attack loss and their reference labels (size N).
struct AttackTarget {
  std::vector<int> nodes;
  std::vector<int> labels;
};

/// Test nodes labelled by the predictions of `reference_model` on the clean graph.
AttackTarget pseudo_label_target(const Graph& graph, const GcnModel& reference_model);

/// Misclassification against the graph's ground-truth labels on the target nodes.
struct AttackMetrics {
  double clean = 0.0;
  double attacked = 0.0;
  std::optional<double> attacked_retrained;  // min-max: against the retrained weights
};

struct AttackResult {
  std::size_t budget = 0;
  std::vector<double> s_relaxed;   // empty for DICE and greedy
  std::vector<double> s_binary;
  std::vector<double> loss_trace;  // PGD/min-max: f(s^(t)) for t = 1..T; greedy: f after each flip
  double initial_loss = 0.0;
  double binary_loss = 0.0;
  Matrix a_prime;
  AttackMetrics metrics;
  std::optional<GcnModel> retrained;
  bool rounding_fallback = false;
  bool budget_shortfall = false;
  std::vector<std::string> warnings;
};

AttackMetrics evaluate_perturbation(const GcnModel& model, const Graph& graph,
                                    std::span<const double> s_binary, std::span<const int> nodes);

struct RoundingResult {
  std::vector<double> s;
  double loss = 0.0;
  bool fallback = false;
};

using LossEval = std::function<double(std::span<const double>)>;

/// Draws `trials` Bernoulli(s_i) vectors and keeps the feasible one (1^T u <= budget)
/// with the smallest loss; when no draw is feasible, keeps the `budget` largest
/// entries of s instead and sets `fallback`.
RoundingResult round_perturbation(std::span<const double> s_relaxed, std::size_t budget,
                                  int trials, std::uint64_t seed, const LossEval& loss_eval);

/// Projected gradient descent on the relaxed perturbation against fixed weights,
/// followed by randomized rounding.
AttackResult pgd_attack(const Graph& graph, const GcnModel& model, const AttackTarget& target,
                        const AttackConfig& config);

/// Alternates `inner_steps` gradient-ascent steps on W with one PGD step on s.
/// Starts from `model` and rounds against it; the retrained weights are returned too.
AttackResult minmax_attack(const Graph& graph, const GcnModel& model, const AttackTarget& target,
                           const AttackConfig& config);

/// Deletes random same-label edges and inserts random cross-label edges.
AttackResult dice_attack(const Graph& graph, std::span<const int> labels, std::size_t budget,
                         std::uint64_t seed);

/// One flip per round, picking the unflipped pair with the most negative gradient.
AttackResult greedy_attack(const Graph& graph, const GcnModel& model, const AttackTarget& target,
                           std::size_t budget, const AttackLoss& loss);

}  // namespace topoguard
