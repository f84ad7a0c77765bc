#pragma once

#include <span>
#include <vector>

#include "topoguard/matrix.hpp"

namespace topoguard {

enum class LossKind { ce, cw };

/// Per-node attack loss selection. Both kinds are quantities the attacker minimizes.
struct AttackLoss {
  LossKind kind = LossKind::ce;
  double kappa = 0.0;  // CW confidence, >= 0
};

void validate(const AttackLoss& loss);

inline constexpr double kProbabilityFloor = 1e-12;

/// log z_y, i.e. the negated cross-entropy of label y. `clamped` is set when
/// z_y fell below kProbabilityFloor.
double ce_node_loss(std::span<const double> z, int y, bool* clamped = nullptr);

/// max{ z_y - max_{c != y} z_c, -kappa }.
double cw_node_loss(std::span<const double> z, int y, double kappa);

double node_loss(std::span<const double> z, int y, const AttackLoss& loss);

/// Subgradient of node_loss with respect to the pre-softmax logits of the node.
void node_loss_logit_grad(std::span<const double> z, int y, const AttackLoss& loss,
                          std::span<double> grad);

/// Sum of per-node losses over `nodes`, which must be non-empty and duplicate-free.
double total_attack_loss(const Matrix& probabilities, std::span<const int> labels,
                         std::span<const int> nodes, const AttackLoss& loss);

void validate_node_set(std::span<const int> nodes, std::size_t num_nodes);

}  // namespace topoguard
