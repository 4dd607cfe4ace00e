#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgsp/multigraph.hpp"

namespace mgsp {

enum class EdgeModelKind { erdos_renyi, ring_plus_random, geometric, planted_partition };

// Undirected, unit-weight edge models. Textual form:
//   er:<p>   ring:<k>:<p>   geo:<radius>   sbm:<p_in>:<p_out>[:div<k>|:mod<k>]
// planted_partition splits the nodes into `communities` contiguous blocks;
// div<k> merges blocks c with equal c / k, mod<k> those with equal c % k.
struct EdgeModel {
  EdgeModelKind kind = EdgeModelKind::erdos_renyi;
  double p = 0.3;
  int k = 2;
  double radius = 0.4;
  double p_in = 0.5;
  double p_out = 0.05;
  int merge_div = 1;
  int merge_mod = 0;  // 0: no modular merge

  std::string to_string() const;
  static EdgeModel parse(std::string_view text);
  bool operator==(const EdgeModel&) const = default;
};

struct GraphSpec {
  int num_nodes = 10;
  std::vector<EdgeModel> layers{EdgeModel{}};
  std::uint64_t seed = 1;
  int communities = 4;
  bool require_connected = false;
  int max_retries = 100;
  ShiftKind shift = ShiftKind::normalized_adjacency;
  // Replace layer 2 by layer 1 plus a sparse perturbation tuned so that the
  // measured commutator norm of the two normalized shifts is just below this.
  std::optional<double> near_commuting_epsilon;

  void validate() const;
};

nlohmann::json to_json(const GraphSpec& spec);
GraphSpec graph_spec_from_json(const nlohmann::json& j);

// Community of node i under planted_partition.
int community_of(int node, int num_nodes, int communities);

std::vector<Triplet> sample_edges(const EdgeModel& model, int num_nodes, int communities,
                                  std::mt19937_64& rng);
bool is_connected(int num_nodes, const std::vector<Triplet>& edges);

// Deterministic in spec.seed. Throws NumericalError when connectivity is
// requested and not reached within max_retries redraws.
Multigraph generate_multigraph(const GraphSpec& spec, const NormOptions& options = {});

// Second shift close to `base` (normalized) with commutator norm <= epsilon,
// as large as bisection on the perturbation scale allows.
SparseShift near_commuting_partner(const SparseShift& base, double epsilon, std::mt19937_64& rng,
                                   const NormOptions& options = {});

}  // namespace mgsp
