#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mgsp/mgnn.hpp"

namespace mgsp {

// ---- dense reference implementations ---------------------------------------

std::vector<Matrix> dense_shifts(const Multigraph& g);
// S_i1 S_i2 ... S_ir as a dense product.
Matrix dense_word(std::span<const Matrix> shifts, const Word& w);
// sum_w S_w x C_w with every S_w formed explicitly.
Signal dense_filter(const MultigraphFilter& h, std::span<const Matrix> shifts, const Signal& x);
double dense_spectral_norm(const Matrix& a);
// Nonzero pattern of E_l |S_g|^k E_{l-1}^T summed over k = 0..radius, as
// sorted positions per row.
NodeSets dense_neighborhoods(const Multigraph& g, const SamplingMatrices& m, int layer, int graph, int radius);

// ---- random instances --------------------------------------------------------

// m Erdos-Renyi layers with normalized adjacency shifts; every layer keeps at
// least one edge.
Multigraph random_multigraph(int num_nodes, int num_shifts, std::mt19937_64& rng);
Signal random_signal(int rows, int cols, std::mt19937_64& rng);

// ---- property suites ---------------------------------------------------------

struct SuiteResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst value seen
  double threshold = 0.0;  // pass iff measured <= threshold
  int instances = 0;
  std::string detail;
};

SuiteResult basis_structure_suite();
// For each target epsilon: a normalized shift plus a near-commuting partner;
// measured eps is the dense spectral norm of their commutator.
SuiteResult pruning_bound_suite(std::span<const double> epsilons, int trials, int num_nodes, int depth,
                                std::uint64_t seed);
SuiteResult equivariance_suite(int instances, std::uint64_t seed);
SuiteResult filter_oracle_suite(int instances, std::uint64_t seed);
SuiteResult filter_adjoint_suite(int instances, std::uint64_t seed);
// Central differences on every parameter of a two-layer MGNN with max
// pooling (8 -> 6 -> 4 nodes) and a dense readout.
SuiteResult gradient_suite(double step, std::uint64_t seed);
SuiteResult sampling_suite(int instances, std::uint64_t seed);

std::string format_result(const SuiteResult& r);

}  // namespace mgsp
