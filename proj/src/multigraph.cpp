#include "mgsp/multigraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mgsp/errors.hpp"

namespace mgsp {

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::adjacency: return "adjacency";
    case ShiftKind::normalized_adjacency: return "normalized_adjacency";
    case ShiftKind::laplacian: return "laplacian";
    case ShiftKind::normalized_laplacian: return "normalized_laplacian";
  }
  return "adjacency";
}

ShiftKind shift_kind_from_string(std::string_view name) {
  for (auto kind : {ShiftKind::adjacency, ShiftKind::normalized_adjacency, ShiftKind::laplacian,
                    ShiftKind::normalized_laplacian})
    if (to_string(kind) == name) return kind;
  throw ValidationError("unknown shift kind '" + std::string(name) + "'");
}

Multigraph::Multigraph(std::vector<SparseShift> shifts, std::vector<std::string> names)
    : shifts_(std::move(shifts)), names_(std::move(names)) {
  if (shifts_.empty()) throw ValidationError("multigraph needs at least one shift operator");
  num_nodes_ = shifts_.front().dimension();
  if (num_nodes_ <= 0) throw ValidationError("multigraph needs at least one node");
  for (const auto& s : shifts_)
    if (s.dimension() != num_nodes_)
      throw ValidationError("all shift operators must share the node set");
  if (names_.empty()) {
    for (std::size_t g = 0; g < shifts_.size(); ++g) names_.push_back("layer" + std::to_string(g + 1));
  }
  if (names_.size() != shifts_.size()) throw ValidationError("one name per shift operator");
}

Multigraph Multigraph::restrict_to(std::span<const int> generators) const {
  std::vector<SparseShift> s;
  std::vector<std::string> n;
  for (int g : generators) {
    if (g < 0 || g >= num_shifts()) throw ValidationError("restrict_to: generator out of range");
    s.push_back(shifts_[static_cast<std::size_t>(g)]);
    n.push_back(names_[static_cast<std::size_t>(g)]);
  }
  return Multigraph(std::move(s), std::move(n));
}

SparseShift make_shift(int num_nodes, std::span<const Triplet> edges, ShiftKind kind,
                       const NormOptions& options) {
  SparseShift adjacency = SparseShift::from_triplets(num_nodes, edges);
  if (kind == ShiftKind::adjacency) return adjacency;
  if (kind == ShiftKind::normalized_adjacency) return normalize_shift(adjacency, options);

  // L = diag(row sums of off-diagonal weights) - W.
  std::vector<Triplet> lap;
  std::vector<double> degree(static_cast<std::size_t>(num_nodes), 0.0);
  for (const auto& t : adjacency.triplets()) {
    if (t.row == t.col) continue;
    degree[t.row] += t.weight;
    lap.push_back({t.row, t.col, -t.weight});
  }
  for (int i = 0; i < num_nodes; ++i) lap.push_back({i, i, degree[i]});
  SparseShift laplacian = SparseShift::from_triplets(num_nodes, lap);
  if (kind == ShiftKind::laplacian) return laplacian;
  return normalize_shift(laplacian, options);
}

Multigraph build_multigraph(int num_nodes, std::span<const EdgeList> layers,
                            const NormOptions& options) {
  if (layers.empty()) throw ValidationError("build_multigraph: empty shift list");
  if (num_nodes <= 0) throw ValidationError("build_multigraph: num_nodes must be positive");
  std::vector<SparseShift> shifts;
  std::vector<std::string> names;
  for (std::size_t g = 0; g < layers.size(); ++g) {
    try {
      shifts.push_back(make_shift(num_nodes, layers[g].edges, layers[g].kind, options));
    } catch (const ValidationError& e) {
      throw ValidationError("layer " + std::to_string(g + 1) + ": " + e.what());
    }
    names.push_back(layers[g].name.empty() ? "layer" + std::to_string(g + 1) : layers[g].name);
  }
  return Multigraph(std::move(shifts), std::move(names));
}

Permutation::Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
  std::vector<char> seen(mapping_.size(), 0);
  for (int v : mapping_) {
    if (v < 0 || v >= static_cast<int>(mapping_.size()) || seen[v])
      throw ValidationError("permutation mapping is not a bijection");
    seen[v] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  return Permutation(std::move(m));
}

Permutation Permutation::random(int n, std::mt19937_64& rng) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  // Fisher-Yates with an explicit draw so the result does not depend on the
  // standard library's shuffle implementation.
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(m[static_cast<std::size_t>(i)], m[static_cast<std::size_t>(pick(rng))]);
  }
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) inv[static_cast<std::size_t>(mapping_[i])] = static_cast<int>(i);
  return Permutation(std::move(inv));
}

Signal permute_signal(const Permutation& p, const Signal& x) {
  if (p.size() != x.rows()) throw ValidationError("permute_signal: permutation size mismatch");
  Signal y(x.rows(), x.cols());
  for (int i = 0; i < p.size(); ++i) y.row(i) = x.row(p[i]);
  return y;
}

SparseShift permute_shift(const Permutation& p, const SparseShift& s) {
  if (p.size() != s.dimension()) throw ValidationError("permute_shift: permutation size mismatch");
  const Permutation inv = p.inverse();
  std::vector<Triplet> t = s.triplets();
  for (auto& e : t) {
    e.row = inv[e.row];
    e.col = inv[e.col];
  }
  return SparseShift::from_triplets(s.dimension(), t);
}

Multigraph permute_multigraph(const Permutation& p, const Multigraph& g) {
  if (p.size() != g.num_nodes()) throw ValidationError("permute_multigraph: permutation size mismatch");
  std::vector<SparseShift> shifts;
  for (const auto& s : g.shifts()) shifts.push_back(permute_shift(p, s));
  return Multigraph(std::move(shifts), g.names());
}

nlohmann::json multigraph_to_json(const Multigraph& g) {
  nlohmann::json layers = nlohmann::json::array();
  for (int k = 0; k < g.num_shifts(); ++k) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& t : g.shift(k).triplets()) edges.push_back({t.row, t.col, t.weight});
    layers.push_back({{"name", g.names()[static_cast<std::size_t>(k)]},
                      {"shift", to_string(ShiftKind::adjacency)},
                      {"edges", std::move(edges)}});
  }
  return {{"version", kMultigraphFormatVersion}, {"num_nodes", g.num_nodes()}, {"layers", layers}};
}

Multigraph multigraph_from_json(const nlohmann::json& doc, const NormOptions& options) {
  try {
    const int version = doc.at("version").get<int>();
    if (version != kMultigraphFormatVersion)
      throw ValidationError("unsupported multigraph format version " + std::to_string(version));
    const int n = doc.at("num_nodes").get<int>();
    std::vector<EdgeList> layers;
    for (const auto& layer : doc.at("layers")) {
      EdgeList e;
      e.name = layer.value("name", "");
      if (layer.contains("shift")) e.kind = shift_kind_from_string(layer.at("shift").get<std::string>());
      for (const auto& edge : layer.at("edges")) {
        if (!edge.is_array() || edge.size() != 3) throw ValidationError("edge must be [u, v, w]");
        e.edges.push_back({edge[0].get<int>(), edge[1].get<int>(), edge[2].get<double>()});
      }
      layers.push_back(std::move(e));
    }
    return build_multigraph(n, layers, options);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed multigraph document: ") + e.what());
  }
}

void save_multigraph(const Multigraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << multigraph_to_json(g).dump(1) << '\n';
}

Multigraph load_multigraph(const std::string& path, const NormOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return multigraph_from_json(doc, options);
}

}  // namespace mgsp
