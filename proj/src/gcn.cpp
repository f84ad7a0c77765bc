#include "topoguard/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "topoguard/errors.hpp"
#include "topoguard/optim.hpp"

namespace topoguard {

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

void require_finite(const Matrix& m, int layer, const char* what) {
  if (!m.all_finite())
    throw NumericError(std::string("non-finite ") + what + " in GCN layer " +
                       std::to_string(layer));
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix z(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto out = z.row(i);
    const double top = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - top);
      sum += out[c];
    }
    for (double& v : out) v /= sum;
  }
  return z;
}

// Cached intermediates of one forward pass.
struct Activations {
  Matrix xw0;      // X W0
  Matrix pre;      // A~ X W0
  Matrix hidden;   // ReLU(pre)
  Matrix hw1;      // hidden W1
  Prediction out;
};

Activations run_forward(const GcnModel& model, const Matrix& a_tilde, const Matrix& features) {
  if (features.cols() != model.feature_dim())
    throw ShapeError("forward: feature width " + std::to_string(features.cols()) +
                     " != model input width " + std::to_string(model.feature_dim()));
  if (a_tilde.rows() != features.rows() || a_tilde.cols() != features.rows())
    throw ShapeError("forward: adjacency and features disagree on N");
  Activations act;
  act.xw0 = kernels::matmul(features, model.w0);
  act.pre = kernels::matmul(a_tilde, act.xw0);
  require_finite(act.pre, 1, "pre-activation");
  act.hidden = relu(act.pre);
  act.hw1 = kernels::matmul(act.hidden, model.w1);
  act.out.logits = kernels::matmul(a_tilde, act.hw1);
  require_finite(act.out.logits, 2, "logits");
  act.out.probabilities = softmax_rows(act.out.logits);
  return act;
}

}  // namespace

GcnModel init_model(std::size_t feature_dim, std::size_t hidden_width, std::size_t num_classes,
                    std::uint64_t seed) {
  if (feature_dim == 0 || hidden_width == 0 || num_classes == 0)
    throw ConfigError("init_model: dimensions must be positive");
  std::mt19937_64 rng(seed);
  GcnModel model;
  model.w0 = glorot(feature_dim, hidden_width, rng);
  model.w1 = glorot(hidden_width, num_classes, rng);
  return model;
}

void validate(const GcnModel& model) {
  if (model.w0.empty() || model.w1.empty()) throw ConfigError("model has empty weights");
  if (model.w0.cols() != model.w1.rows())
    throw ShapeError("model hidden widths disagree between layers");
  if (!model.w0.all_finite() || !model.w1.all_finite())
    throw NumericError("model has non-finite weights");
}

std::vector<int> Prediction::labels() const {
  std::vector<int> out(probabilities.rows());
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    const auto row = probabilities.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Prediction forward(const GcnModel& model, const Matrix& a_tilde, const Matrix& features) {
  return run_forward(model, a_tilde, features).out;
}

void validate(const AttackObjective& objective, std::size_t num_nodes) {
  validate_node_set(objective.nodes, num_nodes);
  validate(objective.loss);
  if (objective.labels.size() != num_nodes)
    throw ShapeError("objective labels must cover every node");
}

LossAndGrads loss_and_grads_at(const GcnModel& model, const Matrix& clean_adjacency,
                               const Matrix& perturbed, const kernels::Normalized& normalized,
                               const Matrix& features, const AttackObjective& objective,
                               GradRequest request) {
  const Matrix& a_tilde = normalized.a_tilde;
  const Activations act = run_forward(model, a_tilde, features);
  const Matrix& z = act.out.probabilities;

  LossAndGrads result;
  result.loss = total_attack_loss(z, objective.labels, objective.nodes, objective.loss);
  if (!std::isfinite(result.loss)) throw NumericError("attack loss is not finite");
  if (!request.weights && !request.perturbation) return result;

  Matrix grad_logits(z.rows(), z.cols());
  for (int v : objective.nodes) {
    const auto i = static_cast<std::size_t>(v);
    node_loss_logit_grad(z.row(i), objective.labels[i], objective.loss, grad_logits.row(i));
  }

  // Layer 2: logits = A~ (H W1)
  const Matrix grad_hw1 = kernels::matmul_tn(a_tilde, grad_logits);
  Matrix grad_pre = kernels::matmul_nt(grad_hw1, model.w1);
  for (std::size_t k = 0; k < grad_pre.size(); ++k)
    if (!(act.pre.data()[k] > 0.0)) grad_pre.data()[k] = 0.0;

  if (request.weights) {
    result.grad_w.w1 = kernels::matmul_tn(act.hidden, grad_hw1);
    const Matrix grad_xw0 = kernels::matmul_tn(a_tilde, grad_pre);
    result.grad_w.w0 = kernels::matmul_tn(features, grad_xw0);
  }

  if (request.perturbation) {
    // A~ enters both layers.
    Matrix grad_a_tilde = kernels::matmul_nt(grad_logits, act.hw1);
    const Matrix from_layer1 = kernels::matmul_nt(grad_pre, act.xw0);
    for (std::size_t k = 0; k < grad_a_tilde.size(); ++k)
      grad_a_tilde.data()[k] += from_layer1.data()[k];
    const Matrix grad_a_hat =
        kernels::normalize_backward(grad_a_tilde, perturbed, normalized.inv_sqrt_degree);
    result.grad_s = kernels::pair_gradient(grad_a_hat, clean_adjacency);
  }
  return result;
}

LossAndGrads loss_and_grads(const GcnModel& model, const Graph& graph, std::span<const double> s,
                            const AttackObjective& objective, GradRequest request) {
  validate(objective, graph.num_nodes);
  const Matrix perturbed = apply_perturbation(graph.adjacency, s);
  const kernels::Normalized normalized = kernels::normalize(perturbed);
  return loss_and_grads_at(model, graph.adjacency, perturbed, normalized, graph.features,
                           objective, request);
}

double attack_loss(const GcnModel& model, const Graph& graph, std::span<const double> s,
                   const AttackObjective& objective) {
  return loss_and_grads(model, graph, s, objective, {.weights = false, .perturbation = false})
      .loss;
}

GcnModel train_natural(const Graph& graph, const TrainConfig& config,
                       std::vector<double>* loss_trace) {
  const std::vector<int> train = graph.train_nodes();
  if (train.empty()) throw ConfigError("train_natural: no labeled training node");
  if (config.epochs < 0) throw ConfigError("train_natural: epochs must be >= 0");
  if (!(config.lr > 0.0)) throw ConfigError("train_natural: learning rate must be positive");

  GcnModel model = init_model(graph.features.cols(), config.hidden_width, graph.num_classes,
                              config.seed);
  const AttackObjective objective{train, graph.labels, {LossKind::ce, 0.0}};
  const kernels::Normalized normalized = kernels::normalize(graph.adjacency);
  const double scale = 1.0 / static_cast<double>(train.size());

  Adam adam_w0(model.w0.size(), config.lr);
  Adam adam_w1(model.w1.size(), config.lr);
  if (loss_trace) loss_trace->clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LossAndGrads lg = loss_and_grads_at(model, graph.adjacency, graph.adjacency, normalized,
                                        graph.features, objective,
                                        {.weights = true, .perturbation = false});
    // f is the summed log-likelihood; descend on the mean cross-entropy -f/|train|.
    if (loss_trace) loss_trace->push_back(-lg.loss * scale);
    for (double& g : lg.grad_w.w0.values()) g *= -scale;
    for (double& g : lg.grad_w.w1.values()) g *= -scale;
    adam_w0.step(model.w0.values(), lg.grad_w.w0.values());
    adam_w1.step(model.w1.values(), lg.grad_w.w1.values());
  }
  return model;
}

std::vector<int> predict_labels(const GcnModel& model, const Graph& graph, const Matrix& a_prime) {
  return forward(model, normalize_adjacency(a_prime), graph.features).labels();
}

double misclassification_rate(const GcnModel& model, const Graph& graph, const Matrix& a_prime,
                              std::span<const int> nodes, std::span<const int> reference_labels) {
  validate_node_set(nodes, graph.num_nodes);
  if (reference_labels.size() != graph.num_nodes)
    throw ShapeError("reference labels must cover every node");
  const std::vector<int> predicted = predict_labels(model, graph, a_prime);
  std::size_t wrong = 0;
  for (int v : nodes)
    if (predicted[static_cast<std::size_t>(v)] != reference_labels[static_cast<std::size_t>(v)])
      ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(nodes.size());
}

}  // namespace topoguard
