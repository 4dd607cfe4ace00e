#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mgsp/multigraph.hpp"
#include "mgsp/word.hpp"

namespace mgsp {

// Polynomial in non-commuting shifts with one F_in x F_out coefficient
// block per basis word: y = sum_w (S_w x) C_w.
class MultigraphFilter {
 public:
  MultigraphFilter() = default;
  MultigraphFilter(MonomialBasis basis, int in_features, int out_features);
  MultigraphFilter(MonomialBasis basis, std::vector<Matrix> coefficients);

  const MonomialBasis& basis() const { return basis_; }
  int in_features() const { return in_features_; }
  int out_features() const { return out_features_; }

  Matrix& coefficient(std::size_t k) { return coefficients_[k]; }
  const Matrix& coefficient(std::size_t k) const { return coefficients_[k]; }
  // Throws ValidationError for a word outside the basis.
  Matrix& coefficient(const Word& w);
  const Matrix& coefficient(const Word& w) const;
  std::vector<Matrix>& coefficients() { return coefficients_; }
  const std::vector<Matrix>& coefficients() const { return coefficients_; }

  std::size_t parameter_count() const {
    return basis_.size() * static_cast<std::size_t>(in_features_ * out_features_);
  }

 private:
  MonomialBasis basis_;
  int in_features_ = 0;
  int out_features_ = 0;
  std::vector<Matrix> coefficients_;
};

// S_w x for every basis word, in basis order. Each entry is its parent's
// diffusion shifted once by the word's head generator.
std::vector<Signal> diffuse(const MonomialBasis& basis, const Multigraph& g, const Signal& x);

Signal apply_filter(const MultigraphFilter& h, const Multigraph& g, const Signal& x);

// Combines precomputed diffusions with the filter coefficients.
Signal combine_diffusions(const MultigraphFilter& h, std::span<const Signal> diffusions);

// sum_w (S_w)^T u C_w^T, the adjoint of apply_filter in the trace inner product.
Signal filter_adjoint_apply(const MultigraphFilter& h, const Multigraph& g, const Signal& u);

struct PruningBoundReport {
  double max_norm = 0.0;
  Word worst_left;
  Word worst_right;
  int trials = 0;
};

// Samples `trials` surrounding word pairs (w1, w2) with lengths in [0, depth]
// and measures ||S_w1 [S_i, S_j] S_w2||_2. Generators i, j are 1-based.
PruningBoundReport check_pruning_bound(std::span<const SparseShift> shifts, int i, int j,
                                       int trials, int depth, std::uint64_t seed,
                                       const NormOptions& options = {});

}  // namespace mgsp
