#pragma once

#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgsp/sparse_shift.hpp"

namespace mgsp {

// N x F block: row i is the feature vector of node i.
using Signal = Matrix;

// How an edge list becomes a shift operator. The "normalized" variants are
// divided by their spectral norm so that ||S||_2 <= 1.
enum class ShiftKind { adjacency, normalized_adjacency, laplacian, normalized_laplacian };

std::string_view to_string(ShiftKind kind);
ShiftKind shift_kind_from_string(std::string_view name);

struct EdgeList {
  std::string name;
  std::vector<Triplet> edges;
  ShiftKind kind = ShiftKind::normalized_adjacency;
};

// One vertex set carrying m >= 1 shift operators of identical dimension,
// stored in generator order.
class Multigraph {
 public:
  Multigraph() = default;
  explicit Multigraph(std::vector<SparseShift> shifts, std::vector<std::string> names = {});

  int num_nodes() const { return num_nodes_; }
  int num_shifts() const { return static_cast<int>(shifts_.size()); }
  const SparseShift& shift(int g) const { return shifts_.at(static_cast<std::size_t>(g)); }
  const std::vector<SparseShift>& shifts() const { return shifts_; }
  const std::vector<std::string>& names() const { return names_; }

  // Multigraph on a subset of generators, in the given order.
  Multigraph restrict_to(std::span<const int> generators) const;

  bool operator==(const Multigraph&) const = default;

 private:
  int num_nodes_ = 0;
  std::vector<SparseShift> shifts_;
  std::vector<std::string> names_;
};

Multigraph build_multigraph(int num_nodes, std::span<const EdgeList> layers,
                            const NormOptions& options = {});

SparseShift make_shift(int num_nodes, std::span<const Triplet> edges, ShiftKind kind,
                       const NormOptions& options = {});

// Bijection on [0, N). As a matrix P e_i = e_{mapping[i]}, so the relabeled
// signal P^T x has row i equal to row mapping[i] of x.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> mapping);

  static Permutation identity(int n);
  static Permutation random(int n, std::mt19937_64& rng);

  int size() const { return static_cast<int>(mapping_.size()); }
  int operator[](int i) const { return mapping_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& mapping() const { return mapping_; }
  Permutation inverse() const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<int> mapping_;
};

Signal permute_signal(const Permutation& p, const Signal& x);
SparseShift permute_shift(const Permutation& p, const SparseShift& s);
Multigraph permute_multigraph(const Permutation& p, const Multigraph& g);

// Versioned JSON document {version, num_nodes, layers: [{name, edges}]}.
// Layers may carry an optional "shift" kind; the default is
// normalized_adjacency. Saving writes the operators as stored with kind
// "adjacency" so that a reload reproduces them bit for bit.
inline constexpr int kMultigraphFormatVersion = 1;

nlohmann::json multigraph_to_json(const Multigraph& g);
Multigraph multigraph_from_json(const nlohmann::json& doc, const NormOptions& options = {});
void save_multigraph(const Multigraph& g, const std::string& path);
Multigraph load_multigraph(const std::string& path, const NormOptions& options = {});

}  // namespace mgsp
