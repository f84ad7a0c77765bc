#include "topoguard/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "topoguard/errors.hpp"

namespace topoguard {

namespace {

void check_label(std::span<const double> z, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= z.size())
    throw ConfigError("label " + std::to_string(y) + " out of range for " +
                      std::to_string(z.size()) + " classes");
}

// Index of the largest entry other than y, first index on ties.
std::size_t runner_up(std::span<const double> z, int y) {
  std::size_t best = z.size();
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (static_cast<int>(c) == y) continue;
    if (best == z.size() || z[c] > z[best]) best = c;
  }
  return best;
}

}  // namespace

void validate(const AttackLoss& loss) {
  if (!(loss.kappa >= 0.0) || !std::isfinite(loss.kappa))
    throw ConfigError("CW confidence kappa must be finite and >= 0");
}

double ce_node_loss(std::span<const double> z, int y, bool* clamped) {
  check_label(z, y);
  const double p = z[static_cast<std::size_t>(y)];
  const bool below = !(p >= kProbabilityFloor);
  if (clamped) *clamped = below;
  return std::log(below ? kProbabilityFloor : p);
}

double cw_node_loss(std::span<const double> z, int y, double kappa) {
  if (z.size() < 2) throw ConfigError("CW loss needs at least two classes");
  check_label(z, y);
  const double margin = z[static_cast<std::size_t>(y)] - z[runner_up(z, y)];
  return std::max(margin, -kappa);
}

double node_loss(std::span<const double> z, int y, const AttackLoss& loss) {
  return loss.kind == LossKind::ce ? ce_node_loss(z, y) : cw_node_loss(z, y, loss.kappa);
}

void node_loss_logit_grad(std::span<const double> z, int y, const AttackLoss& loss,
                          std::span<double> grad) {
  check_label(z, y);
  const auto label = static_cast<std::size_t>(y);
  std::fill(grad.begin(), grad.end(), 0.0);
  if (loss.kind == LossKind::ce) {
    if (!(z[label] >= kProbabilityFloor)) return;
    // d log softmax_y / d logits = e_y - z
    for (std::size_t c = 0; c < z.size(); ++c) grad[c] = -z[c];
    grad[label] += 1.0;
    return;
  }

  if (z.size() < 2) throw ConfigError("CW loss needs at least two classes");
  const std::size_t other = runner_up(z, y);
  const double margin = z[label] - z[other];
  if (margin < -loss.kappa) return;  // clipped branch is flat
  // dZ_y/dlogit_c - dZ_o/dlogit_c with dZ_a/dlogit_c = Z_a (1[a==c] - Z_c)
  const double diff = z[label] - z[other];
  for (std::size_t c = 0; c < z.size(); ++c) grad[c] = -z[c] * diff;
  grad[label] += z[label];
  grad[other] -= z[other];
}

void validate_node_set(std::span<const int> nodes, std::size_t num_nodes) {
  if (nodes.empty()) throw ConfigError("node set is empty");
  std::unordered_set<int> seen;
  for (int v : nodes) {
    if (v < 0 || static_cast<std::size_t>(v) >= num_nodes)
      throw ConfigError("node id " + std::to_string(v) + " out of range");
    if (!seen.insert(v).second) throw ConfigError("node id " + std::to_string(v) + " repeated");
  }
}

double total_attack_loss(const Matrix& probabilities, std::span<const int> labels,
                         std::span<const int> nodes, const AttackLoss& loss) {
  validate_node_set(nodes, probabilities.rows());
  if (labels.size() != probabilities.rows()) throw ShapeError("labels do not cover every node");
  double total = 0.0;
  for (int v : nodes) {
    const auto i = static_cast<std::size_t>(v);
    total += node_loss(probabilities.row(i), labels[i], loss);
  }
  return total;
}

}  // namespace topoguard
