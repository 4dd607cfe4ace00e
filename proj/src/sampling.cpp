#include "mgsp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mgsp/errors.hpp"

namespace mgsp {

std::string_view to_string(Centrality c) { return c == Centrality::degree ? "degree" : "pagerank"; }

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::mean: return "mean";
    case Aggregation::median: return "median";
    case Aggregation::max: return "max";
  }
  return "max";
}

Centrality centrality_from_string(std::string_view name) {
  if (name == "degree") return Centrality::degree;
  if (name == "pagerank") return Centrality::pagerank;
  throw ValidationError("unknown centrality '" + std::string(name) + "'");
}

Aggregation aggregation_from_string(std::string_view name) {
  for (auto a : {Aggregation::mean, Aggregation::median, Aggregation::max})
    if (to_string(a) == name) return a;
  throw ValidationError("unknown aggregation '" + std::string(name) + "'");
}

std::vector<double> compute_centrality(const Multigraph& g, Centrality method,
                                       const PageRankOptions& options) {
  const int n = g.num_nodes();
  if (n <= 0) throw ValidationError("compute_centrality: empty multigraph");
  std::vector<double> score(static_cast<std::size_t>(n), 0.0);
  if (method == Centrality::degree) {
    for (const auto& s : g.shifts())
      for (const auto& t : s.triplets()) score[t.row] += std::abs(t.weight);
    return score;
  }

  // Column-stochastic transition per layer, averaged. M[i][j] = prob j -> i.
  const double m = g.num_shifts();
  std::vector<std::vector<Triplet>> columns(static_cast<std::size_t>(g.num_shifts()));
  std::vector<std::vector<double>> column_sum(static_cast<std::size_t>(g.num_shifts()),
                                              std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int k = 0; k < g.num_shifts(); ++k) {
    for (const auto& t : g.shift(k).triplets()) {
      if (t.row == t.col) continue;
      columns[k].push_back({t.row, t.col, std::abs(t.weight)});
      column_sum[k][t.col] += std::abs(t.weight);
    }
  }
  Vector r = Vector::Constant(n, 1.0 / n);
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector next = Vector::Zero(n);
    for (int k = 0; k < g.num_shifts(); ++k) {
      double dangling = 0.0;
      for (int j = 0; j < n; ++j)
        if (column_sum[k][j] == 0.0) dangling += r[j];
      for (const auto& t : columns[k]) next[t.row] += t.weight / column_sum[k][t.col] * r[t.col];
      next.array() += dangling / n;
    }
    next = options.damping * next / m;
    next.array() += (1.0 - options.damping) / n;
    const double change = (next - r).lpNorm<1>();
    r = next;
    if (change < options.tolerance) {
      for (int i = 0; i < n; ++i) score[i] = r[i];
      return score;
    }
  }
  throw NumericalError("pagerank did not converge within the iteration cap");
}

SelectionMatrix::SelectionMatrix(int cols, std::vector<int> selected)
    : cols_(cols), selected_(std::move(selected)) {
  std::vector<char> seen(static_cast<std::size_t>(std::max(cols_, 0)), 0);
  for (int c : selected_) {
    if (c < 0 || c >= cols_ || seen[c]) throw ValidationError("selection matrix column invalid");
    seen[c] = 1;
  }
}

Matrix SelectionMatrix::to_dense() const {
  Matrix d = Matrix::Zero(rows(), cols_);
  for (int r = 0; r < rows(); ++r) d(r, selected_[r]) = 1.0;
  return d;
}

void validate_plan(const SamplingPlan& plan, int num_nodes) {
  const auto& counts = plan.node_counts;
  if (counts.empty() || counts.front() != num_nodes)
    throw ValidationError("node_counts must start with the node count N");
  for (std::size_t l = 1; l < counts.size(); ++l) {
    if (counts[l] <= 0) throw ValidationError("node_counts must be positive");
    if (counts[l] > counts[l - 1]) {
      std::ostringstream msg;
      msg << "node_counts must be non-increasing (N_" << l << " = " << counts[l] << " > N_" << l - 1
          << " = " << counts[l - 1] << ")";
      throw ValidationError(msg.str());
    }
  }
  if (plan.radii.size() + 1 != counts.size())
    throw ValidationError("one pooling radius per sampled layer required");
  for (int a : plan.radii)
    if (a < 0) throw ValidationError("pooling radius must be nonnegative");
  if (plan.selected.size() != counts.size()) throw ValidationError("one selection per layer required");
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (static_cast<int>(plan.selected[l].size()) != counts[l])
      throw ValidationError("selection size disagrees with node_counts");
    if (l > 0 && !std::equal(plan.selected[l].begin(), plan.selected[l].end(),
                             plan.selected[l - 1].begin()))
      throw ValidationError("selections must be nested prefixes of the ranking");
  }
  Permutation(plan.selected.front());  // validates the bijection
}

PlanBuild build_plan(const Multigraph& g, std::vector<int> node_counts, std::vector<int> radii,
                     Centrality method, Aggregation aggregation) {
  const int n = g.num_nodes();
  const std::vector<double> score = compute_centrality(g, method);
  std::vector<int> rank(static_cast<std::size_t>(n));
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return score[a] > score[b]; });

  SamplingPlan plan;
  plan.node_counts = std::move(node_counts);
  plan.radii = std::move(radii);
  plan.method = method;
  plan.aggregation = aggregation;
  if (plan.node_counts.empty() || plan.node_counts.front() != n)
    throw ValidationError("node_counts must start with the node count N");
  for (int count : plan.node_counts) {
    if (count <= 0 || count > n) throw ValidationError("node_counts entries must lie in [1, N]");
    plan.selected.emplace_back(rank.begin(), rank.begin() + count);
  }
  validate_plan(plan, n);

  PlanBuild build;
  build.matrices = sampling_matrices(plan, n);
  build.relabeling = Permutation(rank);
  build.plan = std::move(plan);
  return build;
}

SamplingMatrices sampling_matrices(const SamplingPlan& plan, int num_nodes) {
  validate_plan(plan, num_nodes);
  SamplingMatrices m;
  for (std::size_t l = 0; l < plan.node_counts.size(); ++l) {
    m.e.emplace_back(num_nodes, plan.selected[l]);
    if (l > 0) {
      std::vector<int> diag(static_cast<std::size_t>(plan.node_counts[l]));
      std::iota(diag.begin(), diag.end(), 0);
      m.d.emplace_back(plan.node_counts[l - 1], std::move(diag));
    }
  }
  return m;
}

Permutation plan_relabeling(const SamplingPlan& plan) { return Permutation(plan.selected.front()); }

namespace {

const SelectionMatrix& d_matrix(const SamplingMatrices& m, int layer) {
  if (layer < 1 || layer > static_cast<int>(m.d.size()))
    throw ValidationError("sampling layer index out of range");
  return m.d[static_cast<std::size_t>(layer - 1)];
}

}  // namespace

SparseShift sample_shift(const SamplingMatrices& m, int layer, const SparseShift& previous) {
  const SelectionMatrix& d = d_matrix(m, layer);
  if (previous.dimension() != d.cols()) {
    std::ostringstream msg;
    msg << "sample_shift: layer " << layer << " expects " << d.cols() << " nodes, shift has "
        << previous.dimension();
    throw ValidationError(msg.str());
  }
  return previous.submatrix(d.selected());
}

Signal sample_signal(const SamplingMatrices& m, int layer, const Signal& x) {
  const SelectionMatrix& d = d_matrix(m, layer);
  if (x.rows() != d.cols()) {
    std::ostringstream msg;
    msg << "sample_signal: layer " << layer << " expects " << d.cols() << " rows, signal has "
        << x.rows();
    throw ValidationError(msg.str());
  }
  Signal y(d.rows(), x.cols());
  for (int r = 0; r < d.rows(); ++r) y.row(r) = x.row(d.selected()[r]);
  return y;
}

NodeSets neighborhoods(const Multigraph& g, const SamplingMatrices& m, int layer, int graph,
                       int radius) {
  if (layer < 1 || layer >= static_cast<int>(m.e.size()))
    throw ValidationError("neighborhoods: layer index out of range");
  if (graph < 0 || graph >= g.num_shifts())
    throw ValidationError("neighborhoods: graph index out of range");
  if (radius < 0) throw ValidationError("neighborhoods: radius must be nonnegative");
  const int n = g.num_nodes();
  const SelectionMatrix& rows = m.e[static_cast<std::size_t>(layer)];
  const SelectionMatrix& cols = m.e[static_cast<std::size_t>(layer - 1)];
  if (rows.cols() != n || cols.cols() != n)
    throw ValidationError("neighborhoods: plan and multigraph disagree on N");

  std::vector<int> candidate(static_cast<std::size_t>(n), -1);
  for (int p = 0; p < cols.rows(); ++p) candidate[cols.selected()[p]] = p;

  const SparseShift& s = g.shift(graph);
  NodeSets out(static_cast<std::size_t>(rows.rows()));
  std::vector<int> depth(static_cast<std::size_t>(n), -1);
  std::vector<int> frontier;
  std::vector<int> next;
  for (int r = 0; r < rows.rows(); ++r) {
    std::fill(depth.begin(), depth.end(), -1);
    const int source = rows.selected()[r];
    depth[source] = 0;
    frontier.assign(1, source);
    std::vector<int> reached{source};
    for (int k = 1; k <= radius && !frontier.empty(); ++k) {
      next.clear();
      for (int u : frontier)
        for (int v : s.row_columns(u))
          if (depth[v] < 0) {
            depth[v] = k;
            next.push_back(v);
            reached.push_back(v);
          }
      frontier.swap(next);
    }
    auto& set = out[static_cast<std::size_t>(r)];
    for (int v : reached)
      if (candidate[v] >= 0) set.push_back(candidate[v]);
    std::sort(set.begin(), set.end());
  }
  return out;
}

NodeSets multigraph_neighborhood(std::span<const NodeSets> per_graph) {
  if (per_graph.empty()) return {};
  NodeSets out(per_graph.front().size());
  for (const auto& sets : per_graph) {
    if (sets.size() != out.size())
      throw ValidationError("multigraph_neighborhood: graphs disagree on the node count");
    for (std::size_t i = 0; i < sets.size(); ++i)
      out[i].insert(out[i].end(), sets[i].begin(), sets[i].end());
  }
  for (auto& s : out) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return out;
}

namespace {

// Positions within `set` ordered by (value, node index).
std::vector<int> order_by_value(const Signal& x, const std::vector<int>& set, int feature) {
  std::vector<int> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return x(set[a], feature) < x(set[b], feature); });
  return order;
}

void check_sets(const Signal& x, const NodeSets& sets) {
  for (const auto& s : sets) {
    if (s.empty()) throw Error("pool: empty neighborhood");
    for (int v : s)
      if (v < 0 || v >= x.rows()) throw ValidationError("pool: neighborhood index out of range");
  }
}

}  // namespace

Signal pool(const Signal& x, const NodeSets& sets, Aggregation aggregation) {
  check_sets(x, sets);
  Signal y(static_cast<Eigen::Index>(sets.size()), x.cols());
  for (std::size_t r = 0; r < sets.size(); ++r) {
    const auto& set = sets[r];
    for (int f = 0; f < x.cols(); ++f) {
      double value = 0.0;
      switch (aggregation) {
        case Aggregation::mean:
          for (int v : set) value += x(v, f);
          value /= static_cast<double>(set.size());
          break;
        case Aggregation::max:
          value = x(set[0], f);
          for (int v : set) value = std::max(value, x(v, f));
          break;
        case Aggregation::median: {
          const auto order = order_by_value(x, set, f);
          const std::size_t h = set.size() / 2;
          value = set.size() % 2 ? x(set[order[h]], f)
                                 : 0.5 * (x(set[order[h - 1]], f) + x(set[order[h]], f));
          break;
        }
      }
      y(static_cast<Eigen::Index>(r), f) = value;
    }
  }
  return y;
}

Signal pool_backward(const Signal& x, const NodeSets& sets, Aggregation aggregation,
                     const Signal& grad_out) {
  check_sets(x, sets);
  if (grad_out.rows() != static_cast<Eigen::Index>(sets.size()) || grad_out.cols() != x.cols())
    throw ValidationError("pool_backward: gradient shape mismatch");
  Signal g = Signal::Zero(x.rows(), x.cols());
  for (std::size_t r = 0; r < sets.size(); ++r) {
    const auto& set = sets[r];
    const auto row = static_cast<Eigen::Index>(r);
    for (int f = 0; f < x.cols(); ++f) {
      const double d = grad_out(row, f);
      switch (aggregation) {
        case Aggregation::mean:
          for (int v : set) g(v, f) += d / static_cast<double>(set.size());
          break;
        case Aggregation::max: {
          int best = set[0];
          for (int v : set)
            if (x(v, f) > x(best, f)) best = v;
          g(best, f) += d;
          break;
        }
        case Aggregation::median: {
          const auto order = order_by_value(x, set, f);
          const std::size_t h = set.size() / 2;
          if (set.size() % 2) {
            g(set[order[h]], f) += d;
          } else {
            g(set[order[h - 1]], f) += 0.5 * d;
            g(set[order[h]], f) += 0.5 * d;
          }
          break;
        }
      }
    }
  }
  return g;
}

}  // namespace mgsp
