#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "topoguard/attacks.hpp"
#include "topoguard/data_io.hpp"
#include "topoguard/defense.hpp"
#include "topoguard/errors.hpp"
#include "topoguard/gcn.hpp"
#include "topoguard/graph.hpp"

namespace topoguard::cli {

namespace fs = std::filesystem;

namespace {

// Pseudo-labels come from a second natural model trained with this seed offset.
constexpr std::uint64_t kReferenceSeedOffset = 1000;

struct Common {
  std::string edge_file, feature_file, label_file, split_file;
  double sbm_signal = SbmSpec{}.feature_signal;
  std::size_t sbm_nodes_per_block = SbmSpec{}.nodes_per_block;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string out_dir = "topoguard-out";
  std::size_t hidden = TrainConfig{}.hidden_width;
  int epochs = TrainConfig{}.epochs;
  double lr = TrainConfig{}.lr;

  bool from_files() const {
    return !edge_file.empty() || !feature_file.empty() || !label_file.empty() ||
           !split_file.empty();
  }

  // SBM graphs are regenerated per seed; file graphs are shared by all seeds.
  Graph graph(std::uint64_t seed) const {
    if (from_files()) {
      if (edge_file.empty() || feature_file.empty() || label_file.empty() || split_file.empty())
        throw ConfigError(
            "--edge-file, --feature-file, --label-file and --split-file go together");
      return load_graph({edge_file, feature_file, label_file, split_file});
    }
    SbmSpec spec;
    spec.feature_signal = sbm_signal;
    spec.nodes_per_block = sbm_nodes_per_block;
    spec.seed = seed;
    return generate_sbm(spec);
  }

  TrainConfig train_config(std::uint64_t seed) const { return {epochs, lr, hidden, seed}; }
};

void add_common(CLI::App* app, Common& c, bool seeds = true) {
  app->add_option("--edge-file", c.edge_file, "edge list, one 'i<TAB>j' per line");
  app->add_option("--feature-file", c.feature_file, "dense features, header 'N M0'");
  app->add_option("--label-file", c.label_file, "'node<TAB>class' per line");
  app->add_option("--split-file", c.split_file, "'node<TAB>train|test|none' per line");
  app->add_option("--sbm-signal", c.sbm_signal, "feature signal of the built-in SBM")
      ->capture_default_str();
  app->add_option("--sbm-nodes-per-block", c.sbm_nodes_per_block)->capture_default_str();
  if (seeds)
    app->add_option("--seeds", c.seeds, "comma-separated seeds")
        ->delimiter(',')
        ->capture_default_str();
  app->add_option("--out-dir", c.out_dir)->capture_default_str();
  app->add_option("--hidden", c.hidden, "hidden width of natural models")->capture_default_str();
  app->add_option("--epochs", c.epochs, "natural training epochs")->capture_default_str();
  app->add_option("--lr", c.lr, "natural training learning rate")->capture_default_str();
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return fixed(mean, 4) + " (single seed)";
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return fixed(mean, 4) + " +/- " + fixed(std::sqrt(var), 4);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_trace(const fs::path& path, double initial, const std::vector<double>& trace) {
  std::ofstream out = open_out(path);
  out << 0 << '\t' << format_double(initial) << '\n';
  for (std::size_t t = 0; t < trace.size(); ++t)
    out << t + 1 << '\t' << format_double(trace[t]) << '\n';
}

int thread_cap() {
  const char* env = std::getenv("TOPOGUARD_THREADS");
  if (!env || !*env) return omp_get_max_threads();
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("TOPOGUARD_THREADS must be a positive integer");
  return static_cast<int>(n);
}

// Runs fn(i) for every seed index, fanned out over threads. Results land in
// seed order regardless of scheduling; the first failure (by seed order) is rethrown.
template <typename R>
std::vector<R> for_seeds(std::size_t count, const std::function<R(std::size_t)>& fn) {
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  const int threads = std::max(1, std::min(thread_cap(), static_cast<int>(count)));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    try {
      slots[static_cast<std::size_t>(i)].emplace(fn(static_cast<std::size_t>(i)));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

void write_timing(const fs::path& dir, const std::vector<std::uint64_t>& seeds,
                  const std::vector<double>& seconds) {
  std::ofstream out = open_out(dir / "timing.txt");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    out << "seed " << seeds[i] << '\t' << fixed(seconds[i], 3) << " s\n";
}

std::size_t budget_for(const Graph& g, double pct) {
  if (pct == 0.0) return 0;
  return edge_budget(g.edge_count(), pct / 100.0);
}

void check_pct(double pct, const char* what) {
  if (!(pct >= 0.0 && pct <= 100.0))
    throw ConfigError(std::string(what) + " must lie in [0, 100]");
}

std::string pct_label(double pct) { return format_double(pct); }

// ---- gen-sbm ---------------------------------------------------------------

struct GenOptions {
  SbmSpec spec;
  std::string out_dir = "sbm";
};

int cmd_gen_sbm(const GenOptions& o, std::ostream& out) {
  std::vector<std::string> warnings;
  const Graph g = generate_sbm(o.spec, &warnings);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_graph(g, {dir / "edges.tsv", dir / "features.txt", dir / "labels.tsv", dir / "split.tsv"});
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  out << "wrote " << g.num_nodes << " nodes, " << g.edge_count() << " edges to " << dir.string()
      << '\n';
  return kOk;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const Common& c, std::ostream& out) {
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  struct Row {
    double final_loss, clean;
    double seconds;
  };
  const auto rows = for_seeds<Row>(c.seeds.size(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = c.seeds[i];
    const Graph g = c.graph(seed);
    std::vector<double> trace;
    const GcnModel model = train_natural(g, c.train_config(seed), &trace);
    save_model(model, dir / ("model_seed" + std::to_string(seed) + ".txt"));
    std::ofstream tr = open_out(dir / ("train_loss_seed" + std::to_string(seed) + ".tsv"));
    for (std::size_t t = 0; t < trace.size(); ++t) tr << t << '\t' << format_double(trace[t]) << '\n';
    const std::vector<int> test = g.test_nodes();
    const double clean =
        test.empty() ? 0.0 : misclassification_rate(model, g, g.adjacency, test, g.labels);
    return Row{trace.empty() ? 0.0 : trace.back(), clean, elapsed(start)};
  });

  std::ofstream csv = open_out(dir / "train_report.csv");
  csv << "seed,epochs,hidden,final_train_loss,clean_misclassification\n";
  std::vector<double> clean, seconds;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv << c.seeds[i] << ',' << c.epochs << ',' << c.hidden << ',' << fixed(rows[i].final_loss)
        << ',' << fixed(rows[i].clean) << '\n';
    clean.push_back(rows[i].clean);
    seconds.push_back(rows[i].seconds);
  }
  std::ofstream sum = open_out(dir / "summary.txt");
  sum << "command train epochs " << c.epochs << " lr " << format_double(c.lr) << " hidden "
      << c.hidden << " seeds " << c.seeds.size() << '\n'
      << "clean misclassification " << mean_std(clean) << '\n';
  write_timing(dir, c.seeds, seconds);
  out << "clean misclassification " << mean_std(clean) << '\n';
  return kOk;
}

// ---- attack ----------------------------------------------------------------

struct AttackOptions {
  std::string method;
  std::vector<std::string> extra;  // [ce|cw] [budget%]
  std::string loss = "ce";
  double budget_pct = 5.0;
  double kappa = 0.0;
  int iters = AttackConfig{}.iters;
  int inner_steps = AttackConfig{}.inner_steps;
  std::string model_file;
};

LossKind parse_loss(const std::string& s) {
  if (s == "ce") return LossKind::ce;
  if (s == "cw") return LossKind::cw;
  throw ConfigError("unknown loss '" + s + "' (expected ce or cw)");
}

void resolve_positionals(AttackOptions& o) {
  if (o.method != "pgd" && o.method != "minmax" && o.method != "dice" && o.method != "greedy")
    throw ConfigError("unknown attack method '" + o.method + "' (pgd, minmax, dice, greedy)");
  for (const auto& tok : o.extra) {
    if (tok == "ce" || tok == "cw") {
      o.loss = tok;
      continue;
    }
    try {
      std::size_t used = 0;
      o.budget_pct = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw ConfigError("unexpected argument '" + tok + "' (expected ce, cw or a budget %)");
    }
  }
  check_pct(o.budget_pct, "budget");
  parse_loss(o.loss);
}

int cmd_attack(const Common& c, AttackOptions o, std::ostream& out) {
  resolve_positionals(o);
  const AttackLoss loss{parse_loss(o.loss), o.kappa};
  validate(loss);
  std::optional<GcnModel> fixed_model;
  if (!o.model_file.empty()) fixed_model = load_model(o.model_file);

  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  const std::string tag = o.method + (o.method == "dice" ? "" : "_" + o.loss);

  struct Row {
    std::size_t budget;
    AttackResult result;
    double seconds;
  };
  const auto rows = for_seeds<Row>(c.seeds.size(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = c.seeds[i];
    const Graph g = c.graph(seed);
    const GcnModel model = fixed_model ? *fixed_model : train_natural(g, c.train_config(seed));
    if (model.feature_dim() != g.features.cols() || model.num_classes() != g.num_classes)
      throw ConfigError("model shape does not match the graph");
    const GcnModel reference =
        train_natural(g, {c.epochs, c.lr, TrainConfig{}.hidden_width, seed + kReferenceSeedOffset});
    const AttackTarget target = pseudo_label_target(g, reference);
    const std::size_t budget = budget_for(g, o.budget_pct);

    AttackResult r;
    if (o.method == "dice") {
      r = dice_attack(g, g.labels, budget, seed);
      r.metrics = evaluate_perturbation(model, g, r.s_binary, target.nodes);
    } else if (o.method == "greedy") {
      r = greedy_attack(g, model, target, budget, loss);
    } else {
      AttackConfig cfg;
      cfg.budget = budget;
      cfg.loss = loss;
      cfg.iters = o.iters;
      cfg.inner_steps = o.inner_steps;
      cfg.seed = seed;
      r = o.method == "pgd" ? pgd_attack(g, model, target, cfg) : minmax_attack(g, model, target, cfg);
    }
    const std::string stem = tag + "_seed" + std::to_string(seed);
    save_attack_result(r, g.num_nodes, dir / ("perturbation_" + stem + ".txt"));
    if (o.method != "dice") write_trace(dir / ("trace_" + stem + ".tsv"), r.initial_loss, r.loss_trace);
    return Row{budget, std::move(r), elapsed(start)};
  });

  std::ofstream csv = open_out(dir / "attack_report.csv");
  csv << "seed,method,loss,budget_pct,budget_edges,clean,attacked,attacked_retrained,"
         "initial_loss,binary_loss,flips,rounding_fallback\n";
  std::vector<double> clean, attacked, retrained, seconds;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const AttackResult& r = rows[i].result;
    std::size_t flips = 0;
    for (double v : r.s_binary) flips += v != 0.0;
    csv << c.seeds[i] << ',' << o.method << ',' << (o.method == "dice" ? "-" : o.loss) << ','
        << pct_label(o.budget_pct) << ',' << rows[i].budget << ',' << fixed(r.metrics.clean) << ','
        << fixed(r.metrics.attacked) << ','
        << (r.metrics.attacked_retrained ? fixed(*r.metrics.attacked_retrained) : "") << ','
        << (o.method == "dice" ? "" : format_double(r.initial_loss)) << ','
        << (o.method == "dice" ? "" : format_double(r.binary_loss)) << ',' << flips << ','
        << (r.rounding_fallback ? 1 : 0) << '\n';
    clean.push_back(r.metrics.clean);
    attacked.push_back(r.metrics.attacked);
    if (r.metrics.attacked_retrained) retrained.push_back(*r.metrics.attacked_retrained);
    seconds.push_back(rows[i].seconds);
  }

  std::ostringstream summary;
  summary << "command attack " << tag << " budget_pct " << pct_label(o.budget_pct) << " seeds "
          << c.seeds.size() << '\n'
          << "clean misclassification " << mean_std(clean) << '\n'
          << "attacked misclassification " << mean_std(attacked) << '\n';
  if (!retrained.empty())
    summary << "attacked misclassification (retrained model) " << mean_std(retrained) << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& w : rows[i].result.warnings)
      summary << "warning seed " << c.seeds[i] << ": " << w << '\n';
  open_out(dir / "summary.txt") << summary.str();
  write_timing(dir, c.seeds, seconds);
  out << summary.str();
  return kOk;
}

// ---- defend / grid ---------------------------------------------------------

struct DefendOptions {
  double budget_pct = 5.0;
  int outer_iters = DefenseConfig{}.outer_iters;
  int inner_steps = DefenseConfig{}.inner_min_steps;
  std::size_t robust_hidden = DefenseConfig{}.hidden_width;
  std::string objective = "all";
  int attack_iters = AttackConfig{}.iters;
};

// Everything one seed needs: graph, natural model, attack target, defense target.
struct Setup {
  Graph graph;
  GcnModel natural;
  AttackTarget target;
  AttackTarget defense;
};

Setup make_setup(const Common& c, std::uint64_t seed) {
  Setup s{c.graph(seed), {}, {}, {}};
  s.natural = train_natural(s.graph, c.train_config(seed));
  const GcnModel reference = train_natural(
      s.graph, {c.epochs, c.lr, TrainConfig{}.hidden_width, seed + kReferenceSeedOffset});
  s.target = pseudo_label_target(s.graph, reference);
  s.defense = defense_target(s.graph, s.natural);
  return s;
}

DefenseResult robust_model(const Setup& s, const DefendOptions& o, std::size_t budget,
                           std::uint64_t seed) {
  DefenseConfig cfg;
  cfg.budget = budget;
  cfg.outer_iters = o.outer_iters;
  cfg.inner_min_steps = o.inner_steps;
  cfg.hidden_width = o.robust_hidden;
  cfg.seed = seed;
  return adversarial_train(s.graph, cfg, o.objective == "all" ? &s.defense : nullptr);
}

double attacked_rate(const Setup& s, const GcnModel& model, std::size_t budget, int iters,
                     std::uint64_t seed) {
  if (budget == 0)
    return misclassification_rate(model, s.graph, s.graph.adjacency, s.target.nodes, s.graph.labels);
  AttackConfig cfg;
  cfg.budget = budget;
  cfg.iters = iters;
  cfg.seed = seed;
  return pgd_attack(s.graph, model, s.target, cfg).metrics.attacked;
}

void check_defend(const DefendOptions& o) {
  if (o.objective != "all" && o.objective != "train")
    throw ConfigError("--objective must be 'all' or 'train'");
}

int cmd_defend(const Common& c, const DefendOptions& o, std::ostream& out) {
  check_defend(o);
  check_pct(o.budget_pct, "budget");
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  struct Row {
    std::size_t budget;
    double nat_clean, nat_attacked, rob_clean, rob_attacked;
    double seconds;
  };
  const auto rows = for_seeds<Row>(c.seeds.size(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = c.seeds[i];
    const Setup s = make_setup(c, seed);
    const std::size_t budget = budget_for(s.graph, o.budget_pct);
    const DefenseResult robust = robust_model(s, o, budget, seed);
    const std::string stem = "seed" + std::to_string(seed);
    save_model(robust.model, dir / ("robust_model_" + stem + ".txt"));
    {
      std::ofstream tr = open_out(dir / ("robust_trace_" + stem + ".tsv"));
      for (std::size_t t = 0; t < robust.loss_trace.size(); ++t)
        tr << t + 1 << '\t' << format_double(robust.loss_trace[t]) << '\n';
    }
    Row row{budget, 0, 0, 0, 0, 0};
    row.nat_clean = attacked_rate(s, s.natural, 0, o.attack_iters, seed);
    row.nat_attacked = attacked_rate(s, s.natural, budget, o.attack_iters, seed);
    row.rob_clean = attacked_rate(s, robust.model, 0, o.attack_iters, seed);
    row.rob_attacked = attacked_rate(s, robust.model, budget, o.attack_iters, seed);
    row.seconds = elapsed(start);
    return row;
  });

  std::ofstream csv = open_out(dir / "defend_report.csv");
  csv << "seed,budget_pct,budget_edges,natural_clean,natural_attacked,robust_clean,"
         "robust_attacked\n";
  std::vector<double> nc, na, rc, ra, seconds;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    csv << c.seeds[i] << ',' << pct_label(o.budget_pct) << ',' << r.budget << ','
        << fixed(r.nat_clean) << ',' << fixed(r.nat_attacked) << ',' << fixed(r.rob_clean) << ','
        << fixed(r.rob_attacked) << '\n';
    nc.push_back(r.nat_clean);
    na.push_back(r.nat_attacked);
    rc.push_back(r.rob_clean);
    ra.push_back(r.rob_attacked);
    seconds.push_back(r.seconds);
  }
  std::ostringstream summary;
  summary << "command defend budget_pct " << pct_label(o.budget_pct) << " objective "
          << o.objective << " outer_iters " << o.outer_iters << " seeds " << c.seeds.size() << '\n'
          << "A/natural " << mean_std(nc) << '\n'
          << "A'/natural " << mean_std(na) << '\n'
          << "A/robust " << mean_std(rc) << '\n'
          << "A'/robust " << mean_std(ra) << '\n';
  open_out(dir / "summary.txt") << summary.str();
  write_timing(dir, c.seeds, seconds);
  out << summary.str();
  return kOk;
}

struct GridOptions {
  DefendOptions defend;
  std::vector<double> train_pcts{0, 5, 10};
  std::vector<double> attack_pcts{0, 5, 10};
};

int cmd_grid(const Common& c, const GridOptions& o, std::ostream& out) {
  check_defend(o.defend);
  for (double p : o.train_pcts) check_pct(p, "training budget");
  for (double p : o.attack_pcts) check_pct(p, "attack budget");
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  const std::size_t R = o.train_pcts.size(), C = o.attack_pcts.size();
  struct Cells {
    std::vector<double> v;
    double seconds;
  };
  const auto rows = for_seeds<Cells>(c.seeds.size(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = c.seeds[i];
    const Setup s = make_setup(c, seed);
    Cells cells{std::vector<double>(R * C), 0.0};
    for (std::size_t r = 0; r < R; ++r) {
      const std::size_t train_budget = budget_for(s.graph, o.train_pcts[r]);
      // A zero training budget means the natural model.
      const GcnModel model =
          train_budget == 0 ? s.natural : robust_model(s, o.defend, train_budget, seed).model;
      for (std::size_t col = 0; col < C; ++col)
        cells.v[r * C + col] = attacked_rate(s, model, budget_for(s.graph, o.attack_pcts[col]),
                                             o.defend.attack_iters, seed);
    }
    cells.seconds = elapsed(start);
    return cells;
  });

  std::ofstream longform = open_out(dir / "grid_seeds.csv");
  longform << "seed,train_pct,attack_pct,misclassification\n";
  std::vector<double> seconds;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t col = 0; col < C; ++col)
        longform << c.seeds[i] << ',' << pct_label(o.train_pcts[r]) << ','
                 << pct_label(o.attack_pcts[col]) << ',' << fixed(rows[i].v[r * C + col]) << '\n';
    seconds.push_back(rows[i].seconds);
  }

  std::ostringstream grid;
  grid << "train_pct\\attack_pct";
  for (double p : o.attack_pcts) grid << ',' << pct_label(p);
  grid << '\n';
  for (std::size_t r = 0; r < R; ++r) {
    grid << pct_label(o.train_pcts[r]);
    for (std::size_t col = 0; col < C; ++col) {
      double mean = 0.0;
      for (const auto& row : rows) mean += row.v[r * C + col];
      grid << ',' << fixed(mean / static_cast<double>(rows.size()));
    }
    grid << '\n';
  }
  open_out(dir / "grid.csv") << grid.str();
  write_timing(dir, c.seeds, seconds);
  out << grid.str();
  return kOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalOptions {
  std::string model_file;
  std::string perturbation_file;
};

int cmd_eval(const Common& c, const EvalOptions& o, std::ostream& out) {
  const GcnModel model = load_model(o.model_file);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "seed,clean,perturbed\n";
  for (std::uint64_t seed : c.seeds) {
    const Graph g = c.graph(seed);
    if (model.feature_dim() != g.features.cols() || model.num_classes() != g.num_classes)
      throw ConfigError("model shape does not match the graph");
    const std::vector<int> test = g.test_nodes();
    if (test.empty()) throw ConfigError("graph has no test nodes");
    csv << seed << ',' << fixed(misclassification_rate(model, g, g.adjacency, test, g.labels))
        << ',';
    if (!o.perturbation_file.empty()) {
      const AttackResult r = load_attack_result(o.perturbation_file, &g);
      csv << fixed(misclassification_rate(model, g, r.a_prime, test, g.labels));
    }
    csv << '\n';
  }
  open_out(dir / "eval_report.csv") << csv.str();
  out << csv.str();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology attacks and robust training for graph convolutional networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kFormatTag);

  Common common;
  GenOptions gen;
  AttackOptions attack;
  GridOptions grid;
  DefendOptions& defend = grid.defend;
  EvalOptions eval;

  CLI::App* gen_cmd = app.add_subcommand("gen-sbm", "write a stochastic block model graph");
  gen_cmd->add_option("--seed", gen.spec.seed)->capture_default_str();
  gen_cmd->add_option("--blocks", gen.spec.blocks)->capture_default_str();
  gen_cmd->add_option("--nodes-per-block", gen.spec.nodes_per_block)->capture_default_str();
  gen_cmd->add_option("--p-in", gen.spec.p_in)->capture_default_str();
  gen_cmd->add_option("--p-out", gen.spec.p_out)->capture_default_str();
  gen_cmd->add_option("--feature-dim", gen.spec.feature_dim)->capture_default_str();
  gen_cmd->add_option("--signal", gen.spec.feature_signal)->capture_default_str();
  gen_cmd->add_option("--train-fraction", gen.spec.train_fraction)->capture_default_str();
  gen_cmd->add_option("--test-fraction", gen.spec.test_fraction)->capture_default_str();
  gen_cmd->add_option("--out-dir", gen.out_dir)->capture_default_str();

  CLI::App* train_cmd = app.add_subcommand("train", "train natural GCNs, one per seed");
  add_common(train_cmd, common);

  CLI::App* attack_cmd = app.add_subcommand("attack", "attack natural GCNs: attack <method> [ce|cw] [budget%]");
  add_common(attack_cmd, common);
  attack_cmd->add_option("method", attack.method, "pgd, minmax, dice or greedy")->required();
  attack_cmd->add_option("extra", attack.extra, "[ce|cw] [budget%]");
  attack_cmd->add_option("--loss", attack.loss, "ce or cw")->capture_default_str();
  attack_cmd->add_option("--budget-pct", attack.budget_pct, "edge budget, % of edges")
      ->capture_default_str();
  attack_cmd->add_option("--kappa", attack.kappa, "CW confidence")->capture_default_str();
  attack_cmd->add_option("--iters", attack.iters, "PGD / min-max iterations")
      ->capture_default_str();
  attack_cmd->add_option("--inner-steps", attack.inner_steps, "min-max weight steps per iteration")
      ->capture_default_str();
  attack_cmd->add_option("--model", attack.model_file, "attack this model instead of training one");

  auto add_defend = [&](CLI::App* cmd, bool budget) {
    add_common(cmd, common);
    if (budget)
      cmd->add_option("--budget-pct", defend.budget_pct, "training and attack budget, % of edges")
          ->capture_default_str();
    cmd->add_option("--iters", defend.outer_iters, "robust training iterations")
        ->capture_default_str();
    cmd->add_option("--inner-steps", defend.inner_steps, "inner PGD steps per iteration")
        ->capture_default_str();
    cmd->add_option("--robust-hidden", defend.robust_hidden)->capture_default_str();
    cmd->add_option("--objective", defend.objective,
                    "all: every node (pseudo-labels off the training set); train: training nodes")
        ->capture_default_str();
    cmd->add_option("--attack-iters", defend.attack_iters)->capture_default_str();
  };
  CLI::App* defend_cmd = app.add_subcommand("defend", "robust training versus natural training");
  add_defend(defend_cmd, true);
  CLI::App* grid_cmd = app.add_subcommand("grid", "training budget x attack budget matrix");
  add_defend(grid_cmd, false);
  grid_cmd->add_option("--train-pcts", grid.train_pcts)->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--attack-pcts", grid.attack_pcts)->delimiter(',')->capture_default_str();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved model, optionally on a saved perturbation");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--model", eval.model_file)->required();
  eval_cmd->add_option("--perturbation", eval.perturbation_file);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen_cmd) return cmd_gen_sbm(gen, out);
    if (common.seeds.empty()) throw ConfigError("--seeds must list at least one seed");
    if (*train_cmd) return cmd_train(common, out);
    if (*attack_cmd) return cmd_attack(common, attack, out);
    if (*defend_cmd) return cmd_defend(common, defend, out);
    if (*grid_cmd) return cmd_grid(common, grid, out);
    if (*eval_cmd) return cmd_eval(common, eval, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace topoguard::cli
