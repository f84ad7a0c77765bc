#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "topoguard/graph.hpp"
#include "topoguard/kernels.hpp"
#include "topoguard/losses.hpp"
#include "topoguard/matrix.hpp"

namespace topoguard {

/// Two-layer GCN: logits = A~ ReLU(A~ X W0) W1.
struct GcnModel {
  Matrix w0;  // M0 x H
  Matrix w1;  // H x num_classes

  std::size_t feature_dim() const { return w0.rows(); }
  std::size_t hidden_width() const { return w0.cols(); }
  std::size_t num_classes() const { return w1.cols(); }

  friend bool operator==(const GcnModel&, const GcnModel&) = default;
};

/// Glorot-uniform initialization, deterministic in `seed`.
GcnModel init_model(std::size_t feature_dim, std::size_t hidden_width, std::size_t num_classes,
                    std::uint64_t seed);

void validate(const GcnModel& model);

struct Prediction {
  Matrix logits;
  Matrix probabilities;  // row-wise softmax of logits

  /// Row-wise argmax, first index on ties.
  std::vector<int> labels() const;
};

/// Throws NumericError naming the layer when an intermediate is non-finite.
Prediction forward(const GcnModel& model, const Matrix& a_tilde, const Matrix& features);

/// Nodes, their reference labels (indexed by node id, size N), and the loss
/// that together define f(s, W) = sum_{i in nodes} f_i.
struct AttackObjective {
  std::vector<int> nodes;
  std::vector<int> labels;
  AttackLoss loss;
};

void validate(const AttackObjective& objective, std::size_t num_nodes);

struct GradRequest {
  bool weights = true;
  bool perturbation = true;
};

struct LossAndGrads {
  double loss = 0.0;
  GcnModel grad_w;              // empty unless requested
  std::vector<double> grad_s;   // empty unless requested
};

/// f at relaxed perturbation `s` with exact analytic gradients through
/// A' = A + C o S, the symmetric normalization, both layers and the loss.
LossAndGrads loss_and_grads(const GcnModel& model, const Graph& graph, std::span<const double> s,
                            const AttackObjective& objective, GradRequest request = {});

/// f only.
double attack_loss(const GcnModel& model, const Graph& graph, std::span<const double> s,
                   const AttackObjective& objective);

/// Same as loss_and_grads for callers that already hold A' and its normalization.
LossAndGrads loss_and_grads_at(const GcnModel& model, const Matrix& clean_adjacency,
                               const Matrix& perturbed, const kernels::Normalized& normalized,
                               const Matrix& features, const AttackObjective& objective,
                               GradRequest request);

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  std::size_t hidden_width = 16;
  std::uint64_t seed = 0;
};

/// Full-batch Adam on the mean cross-entropy of the training nodes.
/// `loss_trace`, when given, receives the loss before each epoch's update.
GcnModel train_natural(const Graph& graph, const TrainConfig& config,
                       std::vector<double>* loss_trace = nullptr);

/// Predicted labels of every node on the (unnormalized) adjacency `a_prime`.
std::vector<int> predict_labels(const GcnModel& model, const Graph& graph, const Matrix& a_prime);

/// Fraction of `nodes` whose prediction on `a_prime` differs from the reference label.
double misclassification_rate(const GcnModel& model, const Graph& graph, const Matrix& a_prime,
                              std::span<const int> nodes, std::span<const int> reference_labels);

}  // namespace topoguard
