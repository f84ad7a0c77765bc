#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "topoguard/data_io.hpp"
#include "topoguard/defense.hpp"
#include "topoguard/errors.hpp"

using namespace topoguard;

TEST_SUITE("defense") {

TEST_CASE("config validation") {
  DefenseConfig c;
  c.weight_lr = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.hidden_width = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.inner_min_steps = -1;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("zero budget is plain gradient ascent on the clean graph") {
  const Graph g = generate_sbm(SbmSpec{});
  DefenseConfig cfg;
  cfg.outer_iters = 15;
  cfg.seed = 3;
  const DefenseResult r = adversarial_train(g, cfg);
  CHECK(r.loss_trace.size() == 15);
  for (double v : r.s_final) CHECK(v == 0.0);

  GcnModel w = init_model(g.features.cols(), cfg.hidden_width, g.num_classes, cfg.seed);
  const AttackObjective obj{g.train_nodes(), g.labels, {}};
  const std::vector<double> zero(pair_count(g.num_nodes), 0.0);
  for (int t = 0; t < 15; ++t) {
    const LossAndGrads lg = loss_and_grads(w, g, zero, obj, {.weights = true, .perturbation = false});
    CHECK(r.loss_trace[static_cast<std::size_t>(t)] == lg.loss);
    for (std::size_t k = 0; k < w.w0.size(); ++k) w.w0.data()[k] += 0.01 * lg.grad_w.w0.data()[k];
    for (std::size_t k = 0; k < w.w1.size(); ++k) w.w1.data()[k] += 0.01 * lg.grad_w.w1.data()[k];
  }
  CHECK(r.model == w);
}

TEST_CASE("short robust run: feasible s, untouched graph, deterministic") {
  const Graph g = generate_sbm(SbmSpec{});
  const Graph before = g;
  DefenseConfig cfg;
  cfg.budget = edge_budget(g.edge_count(), 0.05);
  cfg.outer_iters = 25;
  const GcnModel natural = train_natural(g, {});
  const AttackTarget target = defense_target(g, natural);
  const DefenseResult a = adversarial_train(g, cfg, &target);
  const DefenseResult b = adversarial_train(g, cfg, &target);
  CHECK(a.model == b.model);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.model.hidden_width() == 32);
  double total = 0;
  for (double v : a.s_final) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    total += v;
  }
  CHECK(total <= static_cast<double>(cfg.budget) + 1e-6);
  CHECK(g.adjacency == before.adjacency);
  for (double v : a.loss_trace) CHECK(std::isfinite(v));
}

TEST_CASE("defense target mixes ground truth and predictions") {
  const Graph g = generate_sbm(SbmSpec{});
  const GcnModel natural = train_natural(g, {});
  const AttackTarget t = defense_target(g, natural);
  CHECK(t.nodes.size() == g.num_nodes);
  const std::vector<int> pred = predict_labels(natural, g, g.adjacency);
  for (std::size_t v = 0; v < g.num_nodes; ++v)
    CHECK(t.labels[v] == (g.train_mask[v] ? g.labels[v] : pred[v]));
}

TEST_CASE("divergence reports the iteration") {
  const Graph g = generate_sbm(SbmSpec{});
  DefenseConfig cfg;
  cfg.weight_lr = 1e200;
  cfg.outer_iters = 10;
  try {
    adversarial_train(g, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("saddle values") {
  // f(s, w) = s w on [-1,1]^2 has its saddle at the origin
  const std::function<double(const double&, const double&)> f = [](const double& s, const double& w) { return s * w; };
  const SaddleValues at_saddle = saddle_values<double, double>(f, 0.0, 0.0, 0.0, 0.0);
  CHECK(at_saddle.gap() == 0.0);
  const SaddleValues same = saddle_values<double, double>(f, 0.4, -0.3, 0.4, -0.3);
  CHECK(same.gap() == 0.0);

  const Graph g = testing::random_graph(8, 2, 2, 0.3, 1);
  const GcnModel m = init_model(2, 3, 2, 1);
  const std::vector<double> s(pair_count(8), 0.2);
  const AttackObjective obj{g.train_nodes(), g.labels, {}};
  const SaddleValues v = minmax_maxmin_gap(g, obj, m, s, m, s);
  CHECK(v.gap() == 0.0);
  CHECK(v.maxmin_value == doctest::Approx(attack_loss(m, g, s, obj)));
}

}
