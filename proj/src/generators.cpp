#include "mgsp/generators.hpp"

#include <cmath>
#include <sstream>

#include "mgsp/errors.hpp"

namespace mgsp {

std::string EdgeModel::to_string() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind) {
    case EdgeModelKind::erdos_renyi: out << "er:" << p; break;
    case EdgeModelKind::ring_plus_random: out << "ring:" << k << ':' << p; break;
    case EdgeModelKind::geometric: out << "geo:" << radius; break;
    case EdgeModelKind::planted_partition:
      out << "sbm:" << p_in << ':' << p_out;
      if (merge_mod > 0) {
        out << ":mod" << merge_mod;
      } else if (merge_div > 1) {
        out << ":div" << merge_div;
      }
      break;
  }
  return out.str();
}

EdgeModel EdgeModel::parse(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  auto number = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      double v = std::stod(parts.at(i), &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ValidationError("bad edge model '" + std::string(text) + "'");
    }
  };
  EdgeModel m;
  const std::string& name = parts[0];
  if (name == "er" && parts.size() == 2) {
    m.kind = EdgeModelKind::erdos_renyi;
    m.p = number(1);
  } else if (name == "ring" && parts.size() == 3) {
    m.kind = EdgeModelKind::ring_plus_random;
    m.k = static_cast<int>(number(1));
    m.p = number(2);
  } else if (name == "geo" && parts.size() == 2) {
    m.kind = EdgeModelKind::geometric;
    m.radius = number(1);
  } else if (name == "sbm" && (parts.size() == 3 || parts.size() == 4)) {
    m.kind = EdgeModelKind::planted_partition;
    m.p_in = number(1);
    m.p_out = number(2);
    if (parts.size() == 4) {
      const std::string& merge = parts[3];
      const bool div = merge.starts_with("div");
      if (!div && !merge.starts_with("mod")) throw ValidationError("bad community merge in '" + std::string(text) + "'");
      parts[3] = merge.substr(3);
      const double k = number(3);
      if (k < 1 || k != std::floor(k)) throw ValidationError("bad community merge in '" + std::string(text) + "'");
      (div ? m.merge_div : m.merge_mod) = static_cast<int>(k);
    }
  } else {
    throw ValidationError("bad edge model '" + std::string(text) +
                          "' (expected er:p, ring:k:p, geo:r or sbm:p_in:p_out[:div<k>|:mod<k>])");
  }
  auto prob = [&](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("edge probability outside [0, 1] in '" + std::string(text) + "'");
  };
  prob(m.p);
  prob(m.p_in);
  prob(m.p_out);
  if (m.k < 0 || m.radius < 0.0) throw ValidationError("bad edge model '" + std::string(text) + "'");
  return m;
}

void GraphSpec::validate() const {
  if (num_nodes < 1) throw ValidationError("num_nodes must be positive");
  if (layers.empty()) throw ValidationError("at least one layer edge model is required");
  if (communities < 1 || communities > num_nodes)
    throw ValidationError("communities must lie in [1, num_nodes]");
  if (max_retries < 1) throw ValidationError("max_retries must be positive");
  if (near_commuting_epsilon) {
    if (layers.size() < 2) throw ValidationError("near-commuting pair needs at least two layers");
    if (!(*near_commuting_epsilon > 0.0)) throw ValidationError("near-commuting epsilon must be positive");
  }
}

nlohmann::json to_json(const GraphSpec& spec) {
  std::vector<std::string> layers;
  for (const auto& l : spec.layers) layers.push_back(l.to_string());
  nlohmann::json j = {{"num_nodes", spec.num_nodes},
                      {"layers", layers},
                      {"seed", spec.seed},
                      {"communities", spec.communities},
                      {"require_connected", spec.require_connected},
                      {"max_retries", spec.max_retries},
                      {"shift", to_string(spec.shift)}};
  j["near_commuting_epsilon"] =
      spec.near_commuting_epsilon ? nlohmann::json(*spec.near_commuting_epsilon) : nlohmann::json(nullptr);
  return j;
}

GraphSpec graph_spec_from_json(const nlohmann::json& j) {
  GraphSpec s;
  s.num_nodes = j.at("num_nodes").get<int>();
  s.layers.clear();
  for (const auto& l : j.at("layers")) s.layers.push_back(EdgeModel::parse(l.get<std::string>()));
  s.seed = j.at("seed").get<std::uint64_t>();
  s.communities = j.value("communities", s.communities);
  s.require_connected = j.value("require_connected", s.require_connected);
  s.max_retries = j.value("max_retries", s.max_retries);
  s.shift = shift_kind_from_string(j.value("shift", std::string(to_string(s.shift))));
  if (j.contains("near_commuting_epsilon") && !j.at("near_commuting_epsilon").is_null())
    s.near_commuting_epsilon = j.at("near_commuting_epsilon").get<double>();
  s.validate();
  return s;
}

int community_of(int node, int num_nodes, int communities) {
  return static_cast<int>(static_cast<long>(node) * communities / num_nodes);
}

namespace {

void add_undirected(std::vector<Triplet>& edges, int u, int v) {
  edges.push_back({u, v, 1.0});
  edges.push_back({v, u, 1.0});
}

}  // namespace

std::vector<Triplet> sample_edges(const EdgeModel& model, int n, int communities, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Triplet> edges;
  switch (model.kind) {
    case EdgeModelKind::erdos_renyi:
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (unit(rng) < model.p) add_undirected(edges, u, v);
      break;
    case EdgeModelKind::ring_plus_random: {
      std::vector<std::vector<char>> linked(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
      for (int u = 0; u < n; ++u)
        for (int s = 1; s <= model.k; ++s) {
          const int v = (u + s) % n;
          if (v != u && !linked[u][v]) {
            linked[u][v] = linked[v][u] = 1;
            add_undirected(edges, u, v);
          }
        }
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (unit(rng) < model.p && !linked[u][v]) {
            linked[u][v] = linked[v][u] = 1;
            add_undirected(edges, u, v);
          }
      break;
    }
    case EdgeModelKind::geometric: {
      std::vector<double> x(static_cast<std::size_t>(n));
      std::vector<double> y(static_cast<std::size_t>(n));
      for (int u = 0; u < n; ++u) {
        x[u] = unit(rng);
        y[u] = unit(rng);
      }
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (std::hypot(x[u] - x[v], y[u] - y[v]) < model.radius) add_undirected(edges, u, v);
      break;
    }
    case EdgeModelKind::planted_partition: {
      auto group = [&](int u) {
        const int c = community_of(u, n, communities);
        return model.merge_mod > 0 ? c % model.merge_mod : c / model.merge_div;
      };
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
          const bool same = group(u) == group(v);
          if (unit(rng) < (same ? model.p_in : model.p_out)) add_undirected(edges, u, v);
        }
      break;
    }
  }
  return edges;
}

bool is_connected(int n, const std::vector<Triplet>& edges) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    adj[e.row].push_back(e.col);
    adj[e.col].push_back(e.row);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

SparseShift near_commuting_partner(const SparseShift& base, double epsilon, std::mt19937_64& rng,
                                   const NormOptions& options) {
  const int n = base.dimension();
  std::uniform_int_distribution<int> node(0, n - 1);
  std::uniform_real_distribution<double> weight(0.5, 1.0);
  std::vector<Triplet> perturbation;
  std::vector<std::vector<char>> used(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int k = 0; k < n; ++k) {
    const int u = node(rng);
    const int v = node(rng);
    if (u == v || used[u][v]) continue;
    used[u][v] = used[v][u] = 1;
    const double w = weight(rng);
    perturbation.push_back({u, v, w});
    perturbation.push_back({v, u, w});
  }
  auto partner = [&](double t) {
    std::vector<Triplet> entries = base.triplets();
    std::vector<Triplet> extra = perturbation;
    for (auto& e : extra) e.weight *= t;
    // Merge by summation (from_triplets would reject conflicting duplicates).
    SparseShift a = SparseShift::from_triplets(n, entries);
    SparseShift b = SparseShift::from_triplets(n, extra);
    return normalize_shift(subtract(a, b.scaled(-1.0)), options);
  };
  if (perturbation.empty()) return base;
  double lo = 0.0;
  double hi = 1.0;
  for (int k = 0; k < 20 && commutator_norm(base, partner(hi), options) <= epsilon; ++k) {
    lo = hi;
    hi *= 2.0;
  }
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (commutator_norm(base, partner(mid), options) <= epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo == 0.0 ? base : partner(lo);
}

Multigraph generate_multigraph(const GraphSpec& spec, const NormOptions& options) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<EdgeList> layers;
  for (std::size_t g = 0; g < spec.layers.size(); ++g) {
    std::vector<Triplet> edges;
    int attempt = 0;
    while (true) {
      edges = sample_edges(spec.layers[g], spec.num_nodes, spec.communities, rng);
      if (!spec.require_connected || is_connected(spec.num_nodes, edges)) break;
      if (++attempt >= spec.max_retries) {
        std::ostringstream msg;
        msg << "layer " << g + 1 << " (" << spec.layers[g].to_string()
            << ") stayed disconnected after " << spec.max_retries << " draws";
        throw NumericalError(msg.str());
      }
    }
    if (edges.empty()) {
      std::ostringstream msg;
      msg << "layer " << g + 1 << " (" << spec.layers[g].to_string() << ") drew no edges";
      throw NumericalError(msg.str());
    }
    layers.push_back({"layer" + std::to_string(g + 1), std::move(edges), spec.shift});
  }
  Multigraph g = build_multigraph(spec.num_nodes, layers, options);
  if (!spec.near_commuting_epsilon) return g;

  std::vector<SparseShift> shifts = g.shifts();
  shifts[0] = normalize_shift(shifts[0], options);
  shifts[1] = near_commuting_partner(shifts[0], *spec.near_commuting_epsilon, rng, options);
  return Multigraph(std::move(shifts), g.names());
}

}  // namespace mgsp
