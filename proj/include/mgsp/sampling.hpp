#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "mgsp/multigraph.hpp"

namespace mgsp {

enum class Centrality { degree, pagerank };
enum class Aggregation { mean, median, max };

std::string_view to_string(Centrality c);
std::string_view to_string(Aggregation a);
Centrality centrality_from_string(std::string_view name);
Aggregation aggregation_from_string(std::string_view name);

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-9;
  int max_iterations = 10000;
};

// degree: sum over layers and neighbors of |S_g[i, j]|.
// pagerank: power iteration on the layer average of the column-normalized
// off-diagonal |S_g|; columns without edges jump uniformly.
std::vector<double> compute_centrality(const Multigraph& g, Centrality method,
                                       const PageRankOptions& options = {});

// Wide binary matrix with a single 1 per row, at column selected()[r].
class SelectionMatrix {
 public:
  SelectionMatrix() = default;
  SelectionMatrix(int cols, std::vector<int> selected);

  int rows() const { return static_cast<int>(selected_.size()); }
  int cols() const { return cols_; }
  const std::vector<int>& selected() const { return selected_; }
  Matrix to_dense() const;

 private:
  int cols_ = 0;
  std::vector<int> selected_;
};

// Nested node selection for L layers. selected[l] holds the ORIGINAL labels
// of V_l in rank order, so after relabeling V_l is {0, ..., N_l - 1}.
// radii[l - 1] is the pooling radius of layer l.
struct SamplingPlan {
  std::vector<int> node_counts;
  std::vector<std::vector<int>> selected;
  std::vector<int> radii;
  Centrality method = Centrality::degree;
  Aggregation aggregation = Aggregation::max;

  int num_layers() const { return static_cast<int>(node_counts.size()) - 1; }
  bool operator==(const SamplingPlan&) const = default;
};

// d[l - 1] is D_l (N_l x N_{l-1}) for l = 1..L; e[l] is E_l (N_l x N) for
// l = 0..L, with E_0 the full relabeling.
struct SamplingMatrices {
  std::vector<SelectionMatrix> d;
  std::vector<SelectionMatrix> e;
};

struct PlanBuild {
  SamplingPlan plan;
  SamplingMatrices matrices;
  Permutation relabeling;  // P^T x puts the signal in rank order
};

// Ranks nodes once by centrality (ties to the lower original index) and
// keeps the top N_l at layer l.
PlanBuild build_plan(const Multigraph& g, std::vector<int> node_counts, std::vector<int> radii,
                     Centrality method, Aggregation aggregation);

SamplingMatrices sampling_matrices(const SamplingPlan& plan, int num_nodes);
Permutation plan_relabeling(const SamplingPlan& plan);
void validate_plan(const SamplingPlan& plan, int num_nodes);

// D_l S D_l^T, i.e. the principal submatrix on the rows D_l selects.
SparseShift sample_shift(const SamplingMatrices& m, int layer, const SparseShift& previous);
// D_l x.
Signal sample_signal(const SamplingMatrices& m, int layer, const Signal& x);

using NodeSets = std::vector<std::vector<int>>;

// For each node of V_l, the positions j in V_{l-1} with
// [E_l S_g^k E_{l-1}^T]_{ij} != 0 for some k in 0..radius, found by BFS on
// the nonzero pattern of the original S_g. Sets are sorted ascending.
NodeSets neighborhoods(const Multigraph& g, const SamplingMatrices& m, int layer, int graph,
                       int radius);

// Per-node union over graphs.
NodeSets multigraph_neighborhood(std::span<const NodeSets> per_graph);

// Aggregates each feature over every node's set. Median of an even count is
// the mean of the two middle values.
Signal pool(const Signal& x, const NodeSets& sets, Aggregation aggregation);

// Routes grad_out back to the rows of x: mean splits uniformly, max sends
// everything to the lowest-index maximizer, median to its middle element(s).
Signal pool_backward(const Signal& x, const NodeSets& sets, Aggregation aggregation,
                     const Signal& grad_out);

}  // namespace mgsp
