#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "topoguard/attacks.hpp"
#include "topoguard/gcn.hpp"
#include "topoguard/graph.hpp"

namespace topoguard {

inline constexpr const char* kFormatTag = "topoguard/v1";

/// Homophilous stochastic block model with Gaussian class-mean features.
struct SbmSpec {
  std::size_t blocks = 2;
  std::size_t nodes_per_block = 50;
  double p_in = 0.2;
  double p_out = 0.02;
  std::size_t feature_dim = 16;
  double feature_signal = 0.02;  // class-mean offset on the block's feature coordinates
  double train_fraction = 0.1;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
};

void validate(const SbmSpec& spec);

/// Block b owns feature coordinates d with d % blocks == b; node features are
/// `feature_signal` on those coordinates plus unit Gaussian noise everywhere.
/// Train/test nodes are drawn per block. An edgeless draw is retried with the
/// next seed (up to 10 attempts), with a note appended to `warnings`.
Graph generate_sbm(const SbmSpec& spec, std::vector<std::string>* warnings = nullptr);

struct GraphFiles {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path split;
};

/// Parses the text formats below; every failure is a DataError naming file and line.
///   edges:    "i<TAB>j" per line, 0-based, i != j, each undirected edge once
///   features: header "N M0", then N lines of M0 space-separated decimals
///   labels:   N lines "node<TAB>class"
///   split:    lines "node<TAB>{train|test|none}"; unlisted nodes are "none"
Graph load_graph(const GraphFiles& files);

void write_graph(const Graph& graph, const GraphFiles& files);

// Versioned key-value result files; doubles are written in shortest
// round-trip form so loading reproduces them bit for bit.
void save_model(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_model(const std::filesystem::path& path);

/// Perturbations are stored as an edge-toggle list "i j add|remove"; the
/// direction is taken from result.a_prime.
void save_attack_result(const AttackResult& result, std::size_t num_nodes,
                        const std::filesystem::path& path);

/// When `graph` is given, the toggles are checked against it and a_prime is rebuilt.
AttackResult load_attack_result(const std::filesystem::path& path,
                                const Graph* graph = nullptr);

std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace topoguard
