#include "topoguard/graph.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "topoguard/errors.hpp"
#include "topoguard/kernels.hpp"

namespace topoguard {

namespace {

std::vector<int> mask_nodes(const std::vector<bool>& mask) {
  std::vector<int> nodes;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) nodes.push_back(static_cast<int>(i));
  return nodes;
}

}  // namespace

std::vector<int> Graph::train_nodes() const { return mask_nodes(train_mask); }
std::vector<int> Graph::test_nodes() const { return mask_nodes(test_mask); }

std::size_t Graph::edge_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t j = i + 1; j < num_nodes; ++j)
      if (adjacency(i, j) != 0.0) ++count;
  return count;
}

void validate(const Graph& graph) {
  const std::size_t n = graph.num_nodes;
  if (n == 0) throw DataError("graph has no nodes");
  if (graph.adjacency.rows() != n || graph.adjacency.cols() != n)
    throw DataError("adjacency is not " + std::to_string(n) + "x" + std::to_string(n));
  if (graph.features.rows() != n) throw DataError("feature matrix row count differs from N");
  if (!graph.features.all_finite()) throw DataError("feature matrix has non-finite entries");
  if (graph.labels.size() != n || graph.train_mask.size() != n || graph.test_mask.size() != n)
    throw DataError("labels or masks do not cover every node");
  if (graph.num_classes == 0) throw DataError("graph has no classes");
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.adjacency(i, i) != 0.0)
      throw DataError("self-loop at node " + std::to_string(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = graph.adjacency(i, j);
      if (v != 0.0 && v != 1.0)
        throw DataError("non-binary adjacency entry at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      if (graph.adjacency(j, i) != v)
        throw DataError("asymmetric adjacency at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
    }
    if (graph.train_mask[i] && graph.test_mask[i])
      throw DataError("node " + std::to_string(i) + " is in both train and test sets");
    if (graph.labels[i] < 0 || static_cast<std::size_t>(graph.labels[i]) >= graph.num_classes)
      throw DataError("label of node " + std::to_string(i) + " out of range");
  }
}

std::size_t pair_count(std::size_t num_nodes) {
  return num_nodes < 2 ? 0 : num_nodes * (num_nodes - 1) / 2;
}

std::size_t sym_index(std::size_t i, std::size_t j, std::size_t num_nodes) {
  if (i >= j || j >= num_nodes)
    throw std::out_of_range("sym_index: need 0 <= i < j < N, got (" + std::to_string(i) + "," +
                            std::to_string(j) + ") with N=" + std::to_string(num_nodes));
  return i * num_nodes - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<std::size_t, std::size_t> pair_of(std::size_t k, std::size_t num_nodes) {
  if (k >= pair_count(num_nodes))
    throw std::out_of_range("pair_of: index " + std::to_string(k) + " out of range");
  std::size_t i = 0;
  std::size_t row_len = num_nodes - 1;
  while (k >= row_len) {
    k -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + k};
}

PerturbationVector::PerturbationVector(std::vector<double> values, PerturbationMode mode)
    : values_(std::move(values)), mode_(mode) {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double v = values_[k];
    const bool ok = mode_ == PerturbationMode::binary ? (v == 0.0 || v == 1.0)
                                                      : (v >= 0.0 && v <= 1.0);
    if (!ok) throw ConfigError("perturbation entry " + std::to_string(k) + " out of domain");
  }
}

PerturbationVector PerturbationVector::zeros(std::size_t num_nodes, PerturbationMode mode) {
  return {std::vector<double>(pair_count(num_nodes), 0.0), mode};
}

double PerturbationVector::sum() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

Matrix complement_direction(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) c(i, j) = 1.0 - 2.0 * adjacency(i, j);
  return c;
}

Matrix apply_perturbation(const Matrix& adjacency, std::span<const double> s) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("apply_perturbation: adjacency must be square");
  if (s.size() != pair_count(n))
    throw ShapeError("apply_perturbation: perturbation length " + std::to_string(s.size()) +
                     " != N(N-1)/2 = " + std::to_string(pair_count(n)));
  Matrix out = adjacency;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      if (s[k] == 0.0) continue;
      const double v = adjacency(i, j) + (1.0 - 2.0 * adjacency(i, j)) * s[k];
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

Matrix normalize_adjacency(const Matrix& perturbed) {
  return kernels::normalize(perturbed).a_tilde;
}

std::size_t edge_budget(std::size_t edge_count, double ratio) {
  if (edge_count == 0) throw DataError("edge_budget: graph has no edges");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("edge_budget: ratio must be in (0, 1]");
  const auto budget = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(edge_count) + 1e-9));
  return budget < 1 ? 1 : budget;
}

std::vector<std::pair<std::size_t, std::size_t>> toggled_pairs(std::span<const double> s,
                                                               std::size_t num_nodes) {
  if (s.size() != pair_count(num_nodes)) throw ShapeError("toggled_pairs: length mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t k = 0;
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t j = i + 1; j < num_nodes; ++j, ++k)
      if (s[k] != 0.0) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace topoguard
