#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "topoguard/matrix.hpp"

namespace topoguard {

/// One undirected, unweighted attributed graph with a transductive split.
struct Graph {
  std::size_t num_nodes = 0;
  std::size_t num_classes = 0;
  Matrix adjacency;  // N x N, symmetric, {0,1}, zero diagonal
  Matrix features;   // N x M0
  std::vector<int> labels;
  std::vector<bool> train_mask;
  std::vector<bool> test_mask;

  std::vector<int> train_nodes() const;
  std::vector<int> test_nodes() const;
  std::size_t edge_count() const;
};

/// Throws DataError when any Graph invariant is violated.
void validate(const Graph& graph);

// Upper-triangle row-major indexing of unordered node pairs.
std::size_t pair_count(std::size_t num_nodes);
std::size_t sym_index(std::size_t i, std::size_t j, std::size_t num_nodes);
std::pair<std::size_t, std::size_t> pair_of(std::size_t k, std::size_t num_nodes);

/// Entries of a perturbation vector s: relaxed in [0,1], or binary in {0,1}.
enum class PerturbationMode { relaxed, binary };

class PerturbationVector {
 public:
  PerturbationVector() = default;
  PerturbationVector(std::vector<double> values, PerturbationMode mode);
  static PerturbationVector zeros(std::size_t num_nodes, PerturbationMode mode);

  PerturbationMode mode() const { return mode_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double sum() const;

 private:
  std::vector<double> values_;
  PerturbationMode mode_ = PerturbationMode::relaxed;
};

/// C = (11^T - I) - 2A: +1 where an edge may be added, -1 where one may be removed.
Matrix complement_direction(const Matrix& adjacency);

/// A' = A + C o S for the symmetric S encoded by `s`.
Matrix apply_perturbation(const Matrix& adjacency, std::span<const double> s);

/// D^{-1/2} (A' + I) D^{-1/2}.
Matrix normalize_adjacency(const Matrix& perturbed);

/// Number of perturbable edges: max(1, floor(ratio * edge_count)).
std::size_t edge_budget(std::size_t edge_count, double ratio);

/// Node pairs toggled by a binary perturbation, in index order.
std::vector<std::pair<std::size_t, std::size_t>> toggled_pairs(std::span<const double> s,
                                                               std::size_t num_nodes);

}  // namespace topoguard
