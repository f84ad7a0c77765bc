#include "topoguard/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <system_error>

#include "topoguard/errors.hpp"

namespace topoguard {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw DataError("not a number: '" + text + "'");
  return value;
}

namespace {

long long parse_int(const std::string& text) {
  long long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw DataError("not an integer: '" + text + "'");
  return value;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Line-oriented reader that prefixes diagnostics with file:line.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      line = strip_cr(line);
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

  template <typename Fn>
  auto guarded(Fn&& fn) const {
    try {
      return fn();
    } catch (const DataError& e) {
      fail(e.what());
    }
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::size_t parse_node(const LineReader& reader, const std::string& text, std::size_t n) {
  const long long v = reader.guarded([&] { return parse_int(text); });
  if (v < 0 || static_cast<std::size_t>(v) >= n)
    reader.fail("node id " + text + " out of range [0," + std::to_string(n) + ")");
  return static_cast<std::size_t>(v);
}

}  // namespace

void validate(const SbmSpec& spec) {
  if (spec.blocks < 1 || spec.nodes_per_block < 1) throw ConfigError("sbm: empty block layout");
  if (spec.feature_dim < 1) throw ConfigError("sbm: feature_dim must be >= 1");
  if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0))
    throw ConfigError("sbm: need 0 <= p_out < p_in <= 1");
  if (!(spec.train_fraction >= 0.0 && spec.test_fraction >= 0.0 &&
        spec.train_fraction + spec.test_fraction <= 1.0))
    throw ConfigError("sbm: train/test fractions must be >= 0 and sum to <= 1");
  if (!std::isfinite(spec.feature_signal)) throw ConfigError("sbm: feature_signal not finite");
}

Graph generate_sbm(const SbmSpec& spec, std::vector<std::string>* warnings) {
  validate(spec);
  const std::size_t n = spec.blocks * spec.nodes_per_block;
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Graph g;
    g.num_nodes = n;
    g.num_classes = spec.blocks;
    g.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.labels[i] = static_cast<int>(i / spec.nodes_per_block);

    g.adjacency = Matrix(n, n);
    std::size_t edges = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double p = g.labels[i] == g.labels[j] ? spec.p_in : spec.p_out;
        if (unit(rng) < p) {
          g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
          ++edges;
        }
      }

    g.features = Matrix(n, spec.feature_dim);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < spec.feature_dim; ++d) {
        const bool owned = d % spec.blocks == static_cast<std::size_t>(g.labels[i]);
        g.features(i, d) = (owned ? spec.feature_signal : 0.0) + noise(rng);
      }

    g.train_mask.assign(n, false);
    g.test_mask.assign(n, false);
    const auto per_block = static_cast<double>(spec.nodes_per_block);
    const auto n_train = static_cast<std::size_t>(std::lround(spec.train_fraction * per_block));
    const auto n_test = std::min(static_cast<std::size_t>(std::lround(spec.test_fraction * per_block)),
                                 spec.nodes_per_block - n_train);
    std::vector<std::size_t> order(spec.nodes_per_block);
    for (std::size_t b = 0; b < spec.blocks; ++b) {
      std::iota(order.begin(), order.end(), b * spec.nodes_per_block);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t r = 0; r < n_train; ++r) g.train_mask[order[r]] = true;
      for (std::size_t r = n_train; r < n_train + n_test; ++r) g.test_mask[order[r]] = true;
    }

    if (edges > 0) {
      validate(g);
      return g;
    }
    if (warnings)
      warnings->push_back("sbm draw with seed " + std::to_string(spec.seed + attempt) +
                          " has no edges; regenerating");
  }
  throw DataError("sbm: no edges after " + std::to_string(kAttempts) + " attempts");
}

Graph load_graph(const GraphFiles& files) {
  Graph g;
  std::string line;

  {
    LineReader reader(files.features);
    if (!reader.next(line)) reader.fail("missing 'N M0' header");
    const auto head = split_ws(line);
    if (head.size() != 2) reader.fail("header must be 'N M0'");
    const long long n = reader.guarded([&] { return parse_int(head[0]); });
    const long long m = reader.guarded([&] { return parse_int(head[1]); });
    if (n < 1 || m < 1) reader.fail("N and M0 must be positive");
    g.num_nodes = static_cast<std::size_t>(n);
    g.features = Matrix(g.num_nodes, static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      if (!reader.next(line)) reader.fail("expected " + std::to_string(n) + " feature rows");
      const auto toks = split_ws(line);
      if (toks.size() != g.features.cols())
        reader.fail("expected " + std::to_string(m) + " values, got " + std::to_string(toks.size()));
      for (std::size_t d = 0; d < toks.size(); ++d)
        g.features(i, d) = reader.guarded([&] { return parse_double(toks[d]); });
    }
    if (reader.next(line)) reader.fail("trailing content after feature rows");
  }
  const std::size_t n = g.num_nodes;

  {
    LineReader reader(files.edges);
    g.adjacency = Matrix(n, n);
    while (reader.next(line)) {
      const auto toks = split_tab(line);
      if (toks.size() != 2) reader.fail("expected 'i<TAB>j'");
      const std::size_t i = parse_node(reader, toks[0], n);
      const std::size_t j = parse_node(reader, toks[1], n);
      if (i == j) reader.fail("self-loop on node " + toks[0]);
      if (g.adjacency(i, j) != 0.0)
        reader.fail("edge (" + toks[0] + "," + toks[1] + ") listed twice");
      g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
    }
  }

  {
    LineReader reader(files.labels);
    g.labels.assign(n, -1);
    int max_class = -1;
    while (reader.next(line)) {
      const auto toks = split_tab(line);
      if (toks.size() != 2) reader.fail("expected 'node<TAB>class'");
      const std::size_t v = parse_node(reader, toks[0], n);
      const long long c = reader.guarded([&] { return parse_int(toks[1]); });
      if (c < 0) reader.fail("negative class id");
      if (g.labels[v] != -1) reader.fail("node " + toks[0] + " labelled twice");
      g.labels[v] = static_cast<int>(c);
      max_class = std::max(max_class, static_cast<int>(c));
    }
    for (std::size_t v = 0; v < n; ++v)
      if (g.labels[v] == -1)
        throw DataError(files.labels.string() + ": node " + std::to_string(v) + " has no label");
    g.num_classes = static_cast<std::size_t>(max_class + 1);
  }

  {
    LineReader reader(files.split);
    g.train_mask.assign(n, false);
    g.test_mask.assign(n, false);
    std::vector<bool> seen(n, false);
    while (reader.next(line)) {
      const auto toks = split_tab(line);
      if (toks.size() != 2) reader.fail("expected 'node<TAB>{train|test|none}'");
      const std::size_t v = parse_node(reader, toks[0], n);
      if (toks[1] != "train" && toks[1] != "test" && toks[1] != "none")
        reader.fail("unknown split '" + toks[1] + "'");
      if (seen[v]) {
        const bool overlap = (toks[1] == "train" && g.test_mask[v]) ||
                             (toks[1] == "test" && g.train_mask[v]);
        reader.fail(overlap ? "node " + toks[0] + " is in both train and test"
                            : "node " + toks[0] + " listed twice");
      }
      seen[v] = true;
      g.train_mask[v] = toks[1] == "train";
      g.test_mask[v] = toks[1] == "test";
    }
  }

  validate(g);
  return g;
}

void write_graph(const Graph& graph, const GraphFiles& files) {
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(files.edges);
    for (std::size_t i = 0; i < graph.num_nodes; ++i)
      for (std::size_t j = i + 1; j < graph.num_nodes; ++j)
        if (graph.adjacency(i, j) != 0.0) out << i << '\t' << j << '\n';
  }
  {
    auto out = open(files.features);
    out << graph.num_nodes << ' ' << graph.features.cols() << '\n';
    for (std::size_t i = 0; i < graph.num_nodes; ++i) {
      const auto row = graph.features.row(i);
      for (std::size_t d = 0; d < row.size(); ++d) out << (d ? " " : "") << format_double(row[d]);
      out << '\n';
    }
  }
  {
    auto out = open(files.labels);
    for (std::size_t i = 0; i < graph.num_nodes; ++i) out << i << '\t' << graph.labels[i] << '\n';
  }
  {
    auto out = open(files.split);
    for (std::size_t i = 0; i < graph.num_nodes; ++i)
      out << i << '\t' << (graph.train_mask[i] ? "train" : graph.test_mask[i] ? "test" : "none")
          << '\n';
  }
}

namespace {

class ResultWriter {
 public:
  ResultWriter(const std::filesystem::path& path, const char* kind) : out_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
    out_ << kFormatTag << '\n' << "kind " << kind << '\n';
  }

  void scalar(const std::string& key, double v) { out_ << key << ' ' << format_double(v) << '\n'; }
  void integer(const std::string& key, long long v) { out_ << key << ' ' << v << '\n'; }
  void text(const std::string& key, const std::string& v) { out_ << key << ' ' << v << '\n'; }

  void array(const std::string& key, std::span<const double> values) {
    out_ << key << ' ' << values.size() << '\n';
    write_values(values);
  }

  void matrix(const std::string& key, const Matrix& m) {
    out_ << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
    write_values(m.values());
  }

  std::ostream& raw() { return out_; }

 private:
  void write_values(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i)
      out_ << format_double(values[i]) << ((i + 1) % 8 == 0 || i + 1 == values.size() ? '\n' : ' ');
  }

  std::ofstream out_;
};

class ResultReader {
 public:
  ResultReader(const std::filesystem::path& path, const std::string& kind) : reader_(path) {
    std::string line;
    if (!reader_.next(line) || line != kFormatTag)
      reader_.fail("version tag mismatch: expected '" + std::string(kFormatTag) + "'");
    const auto head = expect("kind", 1);
    if (head[1] != kind) reader_.fail("expected kind '" + kind + "', found '" + head[1] + "'");
  }

  // Next line, split on whitespace; fails unless it starts with `key` and has `args` more tokens.
  std::vector<std::string> expect(const std::string& key, std::size_t args) {
    std::string line;
    if (!reader_.next(line)) reader_.fail("unexpected end of file, wanted '" + key + "'");
    auto toks = split_ws(line);
    if (toks.empty() || toks[0] != key) reader_.fail("expected key '" + key + "'");
    if (toks.size() != args + 1) reader_.fail("malformed '" + key + "' line");
    return toks;
  }

  // Like expect, for keys with a free-text remainder.
  std::string expect_text(const std::string& key) {
    std::string line;
    if (!reader_.next(line)) reader_.fail("unexpected end of file, wanted '" + key + "'");
    if (line.rfind(key + " ", 0) != 0) reader_.fail("expected key '" + key + "'");
    return line.substr(key.size() + 1);
  }

  double scalar(const std::string& key) {
    const auto toks = expect(key, 1);
    return reader_.guarded([&] { return parse_double(toks[1]); });
  }

  long long integer(const std::string& key) {
    const auto toks = expect(key, 1);
    return reader_.guarded([&] { return parse_int(toks[1]); });
  }

  std::vector<double> array(const std::string& key) {
    const auto toks = expect(key, 1);
    const long long count = reader_.guarded([&] { return parse_int(toks[1]); });
    if (count < 0) reader_.fail("negative length for '" + key + "'");
    return values(static_cast<std::size_t>(count));
  }

  Matrix matrix(const std::string& key) {
    const auto toks = expect(key, 2);
    const long long rows = reader_.guarded([&] { return parse_int(toks[1]); });
    const long long cols = reader_.guarded([&] { return parse_int(toks[2]); });
    if (rows < 0 || cols < 0) reader_.fail("negative shape for '" + key + "'");
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    const auto v = values(m.size());
    std::copy(v.begin(), v.end(), m.data());
    return m;
  }

  std::vector<std::string> next_tokens() {
    std::string line;
    if (!reader_.next(line)) reader_.fail("unexpected end of file");
    return split_ws(line);
  }

  void expect_end() {
    std::string line;
    if (reader_.next(line)) reader_.fail("trailing content");
  }

  [[noreturn]] void fail(const std::string& what) const { reader_.fail(what); }

 private:
  std::vector<double> values(std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
      const auto toks = next_tokens();
      if (toks.empty() || out.size() + toks.size() > count) reader_.fail("value count mismatch");
      for (const auto& t : toks) out.push_back(reader_.guarded([&] { return parse_double(t); }));
    }
    return out;
  }

  LineReader reader_;
};

}  // namespace

void save_model(const GcnModel& model, const std::filesystem::path& path) {
  ResultWriter w(path, "model");
  w.matrix("w0", model.w0);
  w.matrix("w1", model.w1);
}

GcnModel load_model(const std::filesystem::path& path) {
  ResultReader r(path, "model");
  GcnModel model;
  model.w0 = r.matrix("w0");
  model.w1 = r.matrix("w1");
  r.expect_end();
  if (model.w0.cols() != model.w1.rows())
    throw DataError(path.string() + ": layer widths disagree");
  return model;
}

void save_attack_result(const AttackResult& result, std::size_t num_nodes,
                        const std::filesystem::path& path) {
  if (result.s_binary.size() != pair_count(num_nodes))
    throw ShapeError("save_attack_result: perturbation length does not match N");
  ResultWriter w(path, "attack");
  w.integer("num_nodes", static_cast<long long>(num_nodes));
  w.integer("budget", static_cast<long long>(result.budget));
  w.scalar("initial_loss", result.initial_loss);
  w.scalar("binary_loss", result.binary_loss);
  w.scalar("metrics.clean", result.metrics.clean);
  w.scalar("metrics.attacked", result.metrics.attacked);
  w.text("metrics.attacked_retrained",
         result.metrics.attacked_retrained ? format_double(*result.metrics.attacked_retrained)
                                           : "none");
  w.integer("rounding_fallback", result.rounding_fallback ? 1 : 0);
  w.integer("budget_shortfall", result.budget_shortfall ? 1 : 0);

  const auto pairs = toggled_pairs(result.s_binary, num_nodes);
  w.integer("toggles", static_cast<long long>(pairs.size()));
  for (const auto& [i, j] : pairs) {
    const bool present = !result.a_prime.empty() && result.a_prime(i, j) != 0.0;
    w.raw() << i << ' ' << j << ' ' << (present ? "add" : "remove") << '\n';
  }
  w.array("s_relaxed", result.s_relaxed);
  w.array("loss_trace", result.loss_trace);
  w.integer("retrained", result.retrained ? 1 : 0);
  if (result.retrained) {
    w.matrix("retrained.w0", result.retrained->w0);
    w.matrix("retrained.w1", result.retrained->w1);
  }
  w.integer("warnings", static_cast<long long>(result.warnings.size()));
  for (const auto& msg : result.warnings) w.text("warning", msg);
}

AttackResult load_attack_result(const std::filesystem::path& path, const Graph* graph) {
  ResultReader r(path, "attack");
  AttackResult result;
  const long long n_nodes = r.integer("num_nodes");
  if (n_nodes < 1) r.fail("num_nodes must be positive");
  const auto n = static_cast<std::size_t>(n_nodes);
  if (graph && graph->num_nodes != n) r.fail("result was saved for a graph of another size");
  const long long budget = r.integer("budget");
  if (budget < 0) r.fail("negative budget");
  result.budget = static_cast<std::size_t>(budget);
  result.initial_loss = r.scalar("initial_loss");
  result.binary_loss = r.scalar("binary_loss");
  result.metrics.clean = r.scalar("metrics.clean");
  result.metrics.attacked = r.scalar("metrics.attacked");
  const auto retrained_metric = r.expect("metrics.attacked_retrained", 1);
  if (retrained_metric[1] != "none")
    result.metrics.attacked_retrained = parse_double(retrained_metric[1]);
  result.rounding_fallback = r.integer("rounding_fallback") != 0;
  result.budget_shortfall = r.integer("budget_shortfall") != 0;

  const long long toggles = r.integer("toggles");
  if (toggles < 0) r.fail("negative toggle count");
  result.s_binary.assign(pair_count(n), 0.0);
  for (long long t = 0; t < toggles; ++t) {
    const auto toks = r.next_tokens();
    if (toks.size() != 3 || (toks[2] != "add" && toks[2] != "remove"))
      r.fail("expected 'i j add|remove'");
    const long long i = parse_int(toks[0]);
    const long long j = parse_int(toks[1]);
    if (i < 0 || j <= i || static_cast<std::size_t>(j) >= n) r.fail("bad toggle pair");
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    if (graph && (graph->adjacency(ui, uj) != 0.0) != (toks[2] == "remove"))
      r.fail("toggle " + toks[0] + " " + toks[1] + " " + toks[2] + " contradicts the graph");
    result.s_binary[sym_index(ui, uj, n)] = 1.0;
  }
  result.s_relaxed = r.array("s_relaxed");
  result.loss_trace = r.array("loss_trace");
  if (r.integer("retrained") != 0) {
    GcnModel m;
    m.w0 = r.matrix("retrained.w0");
    m.w1 = r.matrix("retrained.w1");
    result.retrained = std::move(m);
  }
  const long long warnings = r.integer("warnings");
  for (long long k = 0; k < warnings; ++k) result.warnings.push_back(r.expect_text("warning"));
  r.expect_end();
  if (graph) result.a_prime = apply_perturbation(graph->adjacency, result.s_binary);
  return result;
}

}  // namespace topoguard
