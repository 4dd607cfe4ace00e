#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mgsp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Triplet {
  int row = 0;
  int col = 0;
  double weight = 0.0;
};

// Square sparse operator in compressed-row form. Entries are unique per
// (row, col), finite and nonzero; columns are sorted within each row.
class SparseShift {
 public:
  SparseShift() = default;

  // Zero weights are dropped and exact duplicates merged; a repeated
  // (row, col) with a different weight is rejected.
  static SparseShift from_triplets(int dimension, std::span<const Triplet> entries);
  static SparseShift identity(int dimension);
  static SparseShift from_dense(const Matrix& dense);

  int dimension() const { return dimension_; }
  std::size_t nnz() const { return values_.size(); }

  // S * x and S^T * x for an N x F block of signals, O(nnz * F).
  Matrix apply(const Matrix& x) const;
  Matrix apply_transpose(const Matrix& x) const;

  SparseShift transpose() const;
  SparseShift scaled(double factor) const;

  // Principal submatrix on `keep` (indices into this operator, in output order).
  SparseShift submatrix(std::span<const int> keep) const;

  double at(int row, int col) const;
  std::span<const int> row_columns(int row) const;
  std::span<const double> row_values(int row) const;
  std::vector<Triplet> triplets() const;
  Matrix to_dense() const;

  friend SparseShift multiply(const SparseShift& a, const SparseShift& b);
  friend SparseShift subtract(const SparseShift& a, const SparseShift& b);

  bool operator==(const SparseShift&) const = default;

 private:
  int dimension_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

SparseShift multiply(const SparseShift& a, const SparseShift& b);
SparseShift subtract(const SparseShift& a, const SparseShift& b);

// Power iteration on A^T A. `tolerance` bounds the relative change of the
// squared-norm estimate between sweeps; the start vector is a seeded
// Gaussian so repeated calls agree bitwise.
struct NormOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
  std::uint64_t seed = 0x6d677370u;
};

using LinearMap = std::function<Vector(const Vector&)>;

// Spectral norm of an implicit N x N operator given its action and the
// action of its transpose. Throws NumericalError past the iteration cap.
double operator_norm(int dimension, const LinearMap& apply, const LinearMap& apply_transpose,
                     const NormOptions& options = {});

double spectral_norm(const SparseShift& s, const NormOptions& options = {});

// s / ||s||_2. Throws ValidationError on an all-zero operator.
SparseShift normalize_shift(const SparseShift& s, const NormOptions& options = {});

// ||s_i s_j - s_j s_i||_2, exactly 0 when the sparse difference is empty.
double commutator_norm(const SparseShift& s_i, const SparseShift& s_j,
                       const NormOptions& options = {});

SparseShift commutator(const SparseShift& s_i, const SparseShift& s_j);

}  // namespace mgsp
