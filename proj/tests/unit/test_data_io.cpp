#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "topoguard/attacks.hpp"
#include "topoguard/data_io.hpp"
#include "topoguard/errors.hpp"

using namespace topoguard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("topoguard_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  GraphFiles files() const {
    return {path / "edges.tsv", path / "features.txt", path / "labels.tsv", path / "split.tsv"};
  }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
  }
};

// Minimal valid 3-node graph on disk.
void write_tiny(const TempDir& d) {
  d.write("edges.tsv", "0\t1\n1\t2\n");
  d.write("features.txt", "3 2\n1 0\n0 1\n0.5 0.5\n");
  d.write("labels.tsv", "0\t0\n1\t1\n2\t0\n");
  d.write("split.tsv", "0\ttrain\n1\ttest\n2\tnone\n");
}

std::string data_error(const GraphFiles& f) {
  try {
    load_graph(f);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("tiny graph loads") {
  TempDir d("tiny");
  write_tiny(d);
  const Graph g = load_graph(d.files());
  CHECK(g.num_nodes == 3);
  CHECK(g.num_classes == 2);
  CHECK(g.edge_count() == 2);
  CHECK(g.adjacency(1, 0) == 1.0);
  CHECK(g.features(2, 1) == 0.5);
  CHECK(g.train_nodes() == std::vector<int>{0});
  CHECK(g.test_nodes() == std::vector<int>{1});
}

TEST_CASE("malformed inputs are rejected with file and line") {
  TempDir d("bad");
  auto expect = [&](const std::string& file, const std::string& text, const std::string& where) {
    write_tiny(d);
    d.write(file, text);
    const std::string msg = data_error(d.files());
    CHECK_MESSAGE(msg.find(where) != std::string::npos, msg);
  };
  expect("edges.tsv", "0\t1\n2\t2\n", "edges.tsv:2");           // self-loop
  expect("edges.tsv", "0\t1\n1\t0\n", "edges.tsv:2");           // duplicate
  expect("edges.tsv", "0\t7\n", "edges.tsv:1");                 // out of range
  expect("edges.tsv", "0 x\n", "edges.tsv:1");                  // garbage
  expect("features.txt", "3 2\n1 0\n0 1\n", "features.txt");    // missing row
  expect("features.txt", "3 2\n1 0\n0 nan?\n0 0\n", "features.txt:3");
  expect("labels.tsv", "0\t0\n1\t1\n", "labels.tsv");           // node 2 missing
  expect("labels.tsv", "0\t0\n0\t1\n2\t0\n", "labels.tsv:2");   // duplicate
  expect("split.tsv", "0\ttrain\n0\ttest\n", "split.tsv:2");    // overlap
  expect("split.tsv", "0\tvalid\n", "split.tsv:1");
  write_tiny(d);
  fs::remove(d.path / "labels.tsv");
  CHECK(data_error(d.files()).find("labels.tsv") != std::string::npos);
}

TEST_CASE("write_graph then load_graph round-trips") {
  TempDir d("roundtrip");
  const Graph g = generate_sbm(SbmSpec{});
  write_graph(g, d.files());
  const Graph h = load_graph(d.files());
  CHECK(h.adjacency == g.adjacency);
  CHECK(h.features == g.features);
  CHECK(h.labels == g.labels);
  CHECK(h.train_mask == g.train_mask);
  CHECK(h.test_mask == g.test_mask);
}

TEST_CASE("SBM extremes, determinism and split") {
  SbmSpec spec;
  spec.nodes_per_block = 3;
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  const Graph g = generate_sbm(spec);
  CHECK(g.edge_count() == 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) CHECK(g.adjacency(i, j) == (g.labels[i] == g.labels[j] ? 1.0 : 0.0));

  const Graph a = generate_sbm(SbmSpec{}), b = generate_sbm(SbmSpec{});
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.features == b.features);
  CHECK(a.train_mask == b.train_mask);
  CHECK(a.train_nodes().size() == 10);
  CHECK(a.test_nodes().size() == 50);
  CHECK_NOTHROW(validate(a));
}

TEST_CASE("SBM edge count lies within three sigma of its expectation") {
  // 2 blocks x 50: 2*C(50,2) in-block pairs, 50*50 cross pairs
  const double pin = 0.2, pout = 0.02;
  const double in_pairs = 2 * 1225, out_pairs = 2500;
  const double mean = in_pairs * pin + out_pairs * pout;
  const double sd = std::sqrt(in_pairs * pin * (1 - pin) + out_pairs * pout * (1 - pout));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SbmSpec spec;
    spec.seed = seed;
    const double m = static_cast<double>(generate_sbm(spec).edge_count());
    CHECK(std::fabs(m - mean) <= 3 * sd);
  }
}

TEST_CASE("SBM spec validation and empty draws") {
  SbmSpec bad;
  bad.p_in = 0.01;
  bad.p_out = 0.02;
  CHECK_THROWS_AS(validate(bad), ConfigError);

  SbmSpec empty;
  empty.p_in = 1e-9;
  empty.p_out = 0.0;
  empty.nodes_per_block = 3;
  std::vector<std::string> warnings;
  CHECK_THROWS(generate_sbm(empty, &warnings));
  CHECK(warnings.size() >= 9);
}

TEST_CASE("models round-trip bit for bit") {
  TempDir d("model");
  const GcnModel m = init_model(5, 4, 3, 9);
  save_model(m, d.path / "m.txt");
  CHECK(load_model(d.path / "m.txt") == m);
}

TEST_CASE("attack results round-trip") {
  TempDir d("result");
  const Graph g = generate_sbm(SbmSpec{});
  const GcnModel m = train_natural(g, {20, 0.01, 16, 0});
  AttackConfig cfg;
  cfg.budget = 10;
  cfg.iters = 200;
  cfg.inner_steps = 2;
  const AttackResult r = minmax_attack(g, m, AttackTarget{g.test_nodes(), g.labels}, cfg);
  save_attack_result(r, g.num_nodes, d.path / "r.txt");
  const AttackResult back = load_attack_result(d.path / "r.txt", &g);
  CHECK(back.s_binary == r.s_binary);
  CHECK(back.s_relaxed == r.s_relaxed);
  CHECK(back.loss_trace.size() == 200);
  CHECK(back.loss_trace == r.loss_trace);
  CHECK(back.initial_loss == r.initial_loss);
  CHECK(back.binary_loss == r.binary_loss);
  CHECK(back.a_prime == r.a_prime);
  CHECK(back.metrics.attacked == r.metrics.attacked);
  CHECK(back.metrics.attacked_retrained == r.metrics.attacked_retrained);
  CHECK(back.retrained == r.retrained);
  CHECK(back.warnings == r.warnings);

  AttackResult empty;
  empty.s_binary.assign(pair_count(4), 0.0);
  empty.warnings = {"budget is zero; graph left unperturbed"};
  save_attack_result(empty, 4, d.path / "e.txt");
  const AttackResult e = load_attack_result(d.path / "e.txt");
  CHECK(e.s_binary == empty.s_binary);
  CHECK(e.warnings == empty.warnings);
  CHECK(e.loss_trace.empty());
}

TEST_CASE("version tag mismatch is a data error") {
  TempDir d("version");
  save_model(init_model(2, 2, 2, 0), d.path / "m.txt");
  std::ifstream in(d.path / "m.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  text.replace(0, std::string(kFormatTag).size(), "topoguard/v0");
  d.write("m.txt", text);
  CHECK_THROWS_AS(load_model(d.path / "m.txt"), DataError);
}

TEST_CASE("doubles print in shortest round-trip form") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = g(rng);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x"), DataError);
}

}
