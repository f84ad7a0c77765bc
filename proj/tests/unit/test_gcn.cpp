#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "topoguard/data_io.hpp"
#include "topoguard/errors.hpp"
#include "topoguard/gcn.hpp"

using namespace topoguard;

namespace {

AttackObjective objective_for(const Graph& g, LossKind kind, double kappa = 0.0) {
  return {g.test_nodes(), g.labels, {kind, kappa}};
}

std::vector<double> random_s(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<double> s(pair_count(n));
  for (double& v : s) v = u(rng);
  return s;
}

}  // namespace

TEST_SUITE("gcn") {

TEST_CASE("zero first layer gives uniform probabilities") {
  GcnModel m{Matrix(1, 4), Matrix(4, 3, 0.7)};
  const Prediction p = forward(m, Matrix::identity(1), Matrix(1, 1, 1.0));
  for (std::size_t c = 0; c < 3; ++c) CHECK(p.probabilities(0, c) == doctest::Approx(1.0 / 3));
}

TEST_CASE("single node with identity propagation is a plain matrix product") {
  GcnModel m{Matrix(2, 2), Matrix(2, 2)};
  m.w0(0, 0) = 1.0;
  m.w0(0, 1) = -1.0;
  m.w0(1, 0) = 0.5;
  m.w0(1, 1) = 0.5;
  m.w1(0, 0) = 1.0;
  m.w1(0, 1) = 2.0;
  m.w1(1, 0) = 3.0;
  m.w1(1, 1) = 4.0;
  Matrix x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  // X W0 = [2, 0]; ReLU keeps it; times W1 = [2, 4]
  const Prediction p = forward(m, Matrix::identity(1), x);
  CHECK(p.logits(0, 0) == doctest::Approx(2.0));
  CHECK(p.logits(0, 1) == doctest::Approx(4.0));
  CHECK(p.labels() == std::vector<int>{1});
}

TEST_CASE("softmax rows sum to one and node permutations commute") {
  const Graph g = testing::random_graph(11, 3, 4, 0.3, 8);
  const GcnModel m = init_model(4, 6, 3, 1);
  const Matrix at = normalize_adjacency(g.adjacency);
  const Prediction p = forward(m, at, g.features);
  for (std::size_t i = 0; i < 11; ++i) {
    double t = 0;
    for (std::size_t c = 0; c < 3; ++c) t += p.probabilities(i, c);
    CHECK(std::fabs(t - 1.0) <= 1e-9);
  }
  std::vector<std::size_t> perm(11);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(2));
  Matrix at_p(11, 11), x_p(11, 4);
  for (std::size_t i = 0; i < 11; ++i) {
    for (std::size_t j = 0; j < 11; ++j) at_p(i, j) = at(perm[i], perm[j]);
    for (std::size_t d = 0; d < 4; ++d) x_p(i, d) = g.features(perm[i], d);
  }
  const Prediction q = forward(m, at_p, x_p);
  for (std::size_t i = 0; i < 11; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(q.probabilities(i, c) == doctest::Approx(p.probabilities(perm[i], c)).epsilon(1e-12));
}

TEST_CASE("non-finite intermediates name the layer") {
  GcnModel m = init_model(2, 3, 2, 0);
  m.w0(0, 0) = INFINITY;
  const Graph g = testing::random_graph(4, 2, 2, 0.5, 1);
  try {
    forward(m, normalize_adjacency(g.adjacency), g.features);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Graph g = testing::random_graph(12, 3, 3, 0.3, seed);
    const GcnModel m = init_model(3, 5, 3, seed + 10);
    const std::vector<double> s = random_s(12, seed);
    for (const LossKind kind : {LossKind::ce, LossKind::cw}) {
      const AttackObjective obj = objective_for(g, kind);
      const LossAndGrads lg = loss_and_grads(m, g, s, obj);
      CHECK(lg.loss == doctest::Approx(attack_loss(m, g, s, obj)).epsilon(1e-14));
      const auto fd_s = testing::fd_grad_s(m, g, s, obj, 1e-5);
      CHECK(testing::max_rel_error(lg.grad_s, fd_s, 1e-4) < 1e-4);
      const GcnModel fd_w = testing::fd_grad_w(m, g, s, obj, 1e-5);
      CHECK(testing::max_rel_error(lg.grad_w.w0.values(), fd_w.w0.values(), 1e-4) < 1e-4);
      CHECK(testing::max_rel_error(lg.grad_w.w1.values(), fd_w.w1.values(), 1e-4) < 1e-4);
    }
  }
}

TEST_CASE("pairs farther than two hops from every target have zero gradient") {
  // path 0-1-2-3-4-5-6, only node 0 in the objective
  Graph g = testing::random_graph(7, 2, 2, 0.0, 3);
  for (std::size_t i = 0; i + 1 < 7; ++i) g.adjacency(i, i + 1) = g.adjacency(i + 1, i) = 1.0;
  const GcnModel m = init_model(2, 4, 2, 5);
  const AttackObjective obj{{0}, g.labels, {LossKind::ce, 0.0}};
  const std::vector<double> s(pair_count(7), 0.0);
  const LossAndGrads lg = loss_and_grads(m, g, s, obj);
  CHECK(lg.grad_s[sym_index(4, 6, 7)] == 0.0);
  CHECK(lg.grad_s[sym_index(3, 5, 7)] == 0.0);
  CHECK(lg.grad_s[sym_index(0, 2, 7)] != 0.0);
}

TEST_CASE("toggling twice leaves predictions unchanged") {
  const Graph g = testing::random_graph(10, 2, 3, 0.3, 4);
  const GcnModel m = init_model(3, 4, 2, 2);
  std::vector<double> s(pair_count(10), 0.0);
  s[3] = s[17] = s[30] = 1.0;
  const Matrix twice = apply_perturbation(apply_perturbation(g.adjacency, s), s);
  CHECK(forward(m, normalize_adjacency(twice), g.features).probabilities ==
        forward(m, normalize_adjacency(g.adjacency), g.features).probabilities);
}

TEST_CASE("request flags skip unrequested gradients") {
  const Graph g = testing::random_graph(6, 2, 2, 0.4, 1);
  const GcnModel m = init_model(2, 3, 2, 1);
  const std::vector<double> s(pair_count(6), 0.0);
  const AttackObjective obj = objective_for(g, LossKind::ce);
  const LossAndGrads only_s = loss_and_grads(m, g, s, obj, {.weights = false, .perturbation = true});
  CHECK(only_s.grad_w.w0.empty());
  CHECK(only_s.grad_s.size() == s.size());
  const LossAndGrads only_w = loss_and_grads(m, g, s, obj, {.weights = true, .perturbation = false});
  CHECK(only_w.grad_s.empty());
  CHECK(only_w.grad_w.w0.same_shape(m.w0));
}

TEST_CASE("natural training") {
  SbmSpec spec;
  double mean_miss = 0.0;
  std::size_t rising = 0, steps = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    spec.seed = seed;
    const Graph g = generate_sbm(spec);
    std::vector<double> trace;
    const GcnModel m = train_natural(g, {200, 0.01, 16, seed}, &trace);
    CHECK(trace.size() == 200);
    for (std::size_t t = 1; t < trace.size(); ++t, ++steps) rising += trace[t] > trace[t - 1];
    mean_miss += misclassification_rate(m, g, g.adjacency, g.test_nodes(), g.labels) / 5.0;
  }
  CHECK(mean_miss < 0.15);
  CHECK(static_cast<double>(rising) <= 0.05 * static_cast<double>(steps));
}

TEST_CASE("natural training is deterministic and epochs=0 returns the init") {
  const Graph g = generate_sbm(SbmSpec{});
  CHECK(train_natural(g, {50, 0.01, 16, 3}) == train_natural(g, {50, 0.01, 16, 3}));
  CHECK(train_natural(g, {0, 0.01, 16, 3}) == init_model(g.features.cols(), 16, g.num_classes, 3));
  Graph unlabeled = g;
  unlabeled.train_mask.assign(g.num_nodes, false);
  CHECK_THROWS_AS(train_natural(unlabeled, {}), ConfigError);
}

TEST_CASE("misclassification_rate reference cases") {
  const Graph g = testing::random_graph(8, 2, 2, 0.4, 2);
  const GcnModel m = init_model(2, 3, 2, 4);
  const std::vector<int> pred = predict_labels(m, g, g.adjacency);
  std::vector<int> nodes(8);
  std::iota(nodes.begin(), nodes.end(), 0);
  CHECK(misclassification_rate(m, g, g.adjacency, nodes, pred) == 0.0);
  std::vector<int> shifted = pred;
  for (int& y : shifted) y = (y + 1) % 2;
  CHECK(misclassification_rate(m, g, g.adjacency, nodes, shifted) == 1.0);
  CHECK_THROWS_AS(misclassification_rate(m, g, g.adjacency, std::vector<int>{}, pred), ConfigError);
}

}
