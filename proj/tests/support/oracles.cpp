#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace topoguard::testing {

std::vector<double> project_oracle(std::span<const double> a, double budget) {
  if (a.size() > 64) throw std::length_error("project_oracle is limited to 64 entries");
  auto clip = [](double v) { return std::clamp(v, 0.0, 1.0); };
  std::vector<double> s(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (s[i] = clip(a[i]));
  if (sum <= budget) return s;

  // g(mu) = sum_i clip(a_i - mu) is linear between consecutive breakpoints
  // {a_i - 1, a_i}. Scan them in increasing order until g drops to the budget.
  std::vector<double> knots;
  for (double v : a) {
    knots.push_back(v - 1.0);
    knots.push_back(v);
  }
  std::sort(knots.begin(), knots.end());
  auto g = [&](double mu) {
    double total = 0.0;
    for (double v : a) total += clip(v - mu);
    return total;
  };
  double lo = 0.0;  // g(0) > budget
  for (double knot : knots) {
    if (knot <= lo) continue;
    const double g_lo = g(lo), g_hi = g(knot);
    if (g_hi <= budget) {
      const double mu = g_lo == g_hi ? knot : lo + (g_lo - budget) * (knot - lo) / (g_lo - g_hi);
      for (std::size_t i = 0; i < a.size(); ++i) s[i] = clip(a[i] - mu);
      return s;
    }
    lo = knot;
  }
  std::fill(s.begin(), s.end(), 0.0);
  return s;
}

Graph random_graph(std::size_t num_nodes, std::size_t num_classes, std::size_t feature_dim,
                   double edge_prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(edge_prob);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(num_classes) - 1);
  std::uniform_int_distribution<int> role(0, 2);

  Graph g;
  g.num_nodes = num_nodes;
  g.num_classes = num_classes;
  g.adjacency = Matrix(num_nodes, num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t j = i + 1; j < num_nodes; ++j)
      if (edge(rng)) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  g.features = Matrix(num_nodes, feature_dim);
  for (double& v : g.features.values()) v = gauss(rng);
  g.labels.resize(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i)
    g.labels[i] = i < num_classes ? static_cast<int>(i) : cls(rng);
  g.train_mask.assign(num_nodes, false);
  g.test_mask.assign(num_nodes, false);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const int r = role(rng);
    if (r == 0) g.train_mask[i] = true;
    if (r == 1) g.test_mask[i] = true;
  }
  // at least one of each
  g.train_mask[0] = true;
  g.test_mask[0] = false;
  if (num_nodes > 1) {
    g.test_mask[num_nodes - 1] = true;
    g.train_mask[num_nodes - 1] = false;
  }
  return g;
}

std::vector<double> fd_grad_s(const GcnModel& model, const Graph& graph, std::span<const double> s,
                              const AttackObjective& objective, double step) {
  std::vector<double> x(s.begin(), s.end()), out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    x[k] = s[k] + step;
    const double up = attack_loss(model, graph, x, objective);
    x[k] = s[k] - step;
    const double down = attack_loss(model, graph, x, objective);
    x[k] = s[k];
    out[k] = (up - down) / (2.0 * step);
  }
  return out;
}

GcnModel fd_grad_w(const GcnModel& model, const Graph& graph, std::span<const double> s,
                   const AttackObjective& objective, double step) {
  GcnModel probe = model;
  GcnModel out{Matrix(model.w0.rows(), model.w0.cols()), Matrix(model.w1.rows(), model.w1.cols())};
  auto sweep = [&](std::span<double> param, std::span<double> grad) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      const double keep = param[k];
      param[k] = keep + step;
      const double up = attack_loss(probe, graph, s, objective);
      param[k] = keep - step;
      const double down = attack_loss(probe, graph, s, objective);
      param[k] = keep;
      grad[k] = (up - down) / (2.0 * step);
    }
  };
  sweep(probe.w0.values(), out.w0.values());
  sweep(probe.w1.values(), out.w1.values());
  return out;
}

double max_rel_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_rel_error: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::fabs(a[k]), std::fabs(b[k]), floor});
    worst = std::max(worst, std::fabs(a[k] - b[k]) / scale);
  }
  return worst;
}

BruteForce brute_force_min(const GcnModel& model, const Graph& graph,
                           const AttackObjective& objective, std::size_t budget) {
  if (budget > 3) throw std::length_error("brute_force_min: budget above 3");
  const std::size_t n = pair_count(graph.num_nodes);
  std::vector<double> s(n, 0.0);
  BruteForce best{s, attack_loss(model, graph, s, objective)};
  // Recursive enumeration of index sets of size 1..budget.
  auto visit = [&](auto&& self, std::size_t from, std::size_t left) -> void {
    for (std::size_t k = from; k < n; ++k) {
      s[k] = 1.0;
      const double f = attack_loss(model, graph, s, objective);
      if (f < best.loss) best = {s, f};
      if (left > 1) self(self, k + 1, left - 1);
      s[k] = 0.0;
    }
  };
  if (budget > 0) visit(visit, 0, budget);
  return best;
}

}  // namespace topoguard::testing
