#include "mgsp/sparse_shift.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <utility>

#include "mgsp/errors.hpp"

namespace mgsp {

namespace {

void require_same_dimension(const SparseShift& a, const SparseShift& b, const char* what) {
  if (a.dimension() != b.dimension()) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a.dimension() << " vs " << b.dimension() << ")";
    throw ValidationError(msg.str());
  }
}

}  // namespace

SparseShift SparseShift::from_triplets(int dimension, std::span<const Triplet> entries) {
  if (dimension <= 0) throw ValidationError("shift dimension must be positive");
  std::map<std::pair<int, int>, double> merged;
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= dimension || t.col < 0 || t.col >= dimension) {
      std::ostringstream msg;
      msg << "edge (" << t.row << ", " << t.col << ") out of range for " << dimension << " nodes";
      throw ValidationError(msg.str());
    }
    if (!std::isfinite(t.weight)) throw ValidationError("edge weight is not finite");
    auto [it, inserted] = merged.emplace(std::make_pair(t.row, t.col), t.weight);
    if (!inserted && it->second != t.weight) {
      std::ostringstream msg;
      msg << "duplicate edge (" << t.row << ", " << t.col << ") with conflicting weights";
      throw ValidationError(msg.str());
    }
  }
  SparseShift s;
  s.dimension_ = dimension;
  s.row_ptr_.assign(static_cast<std::size_t>(dimension) + 1, 0);
  for (const auto& [rc, w] : merged) {
    if (w == 0.0) continue;
    s.cols_.push_back(rc.second);
    s.values_.push_back(w);
    ++s.row_ptr_[static_cast<std::size_t>(rc.first) + 1];
  }
  for (int r = 0; r < dimension; ++r) s.row_ptr_[r + 1] += s.row_ptr_[r];
  return s;
}

SparseShift SparseShift::identity(int dimension) {
  std::vector<Triplet> diag;
  for (int i = 0; i < dimension; ++i) diag.push_back({i, i, 1.0});
  return from_triplets(dimension, diag);
}

SparseShift SparseShift::from_dense(const Matrix& dense) {
  if (dense.rows() != dense.cols()) throw ValidationError("shift must be square");
  std::vector<Triplet> entries;
  for (int r = 0; r < dense.rows(); ++r)
    for (int c = 0; c < dense.cols(); ++c)
      if (dense(r, c) != 0.0) entries.push_back({r, c, dense(r, c)});
  return from_triplets(static_cast<int>(dense.rows()), entries);
}

Matrix SparseShift::apply(const Matrix& x) const {
  if (x.rows() != dimension_) {
    std::ostringstream msg;
    msg << "shift_apply: signal has " << x.rows() << " rows, shift is " << dimension_;
    throw ValidationError(msg.str());
  }
  Matrix y = Matrix::Zero(dimension_, x.cols());
  for (int r = 0; r < dimension_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y.row(r) += values_[k] * x.row(cols_[k]);
  return y;
}

Matrix SparseShift::apply_transpose(const Matrix& x) const {
  if (x.rows() != dimension_) {
    std::ostringstream msg;
    msg << "shift_apply_transpose: signal has " << x.rows() << " rows, shift is " << dimension_;
    throw ValidationError(msg.str());
  }
  Matrix y = Matrix::Zero(dimension_, x.cols());
  for (int r = 0; r < dimension_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y.row(cols_[k]) += values_[k] * x.row(r);
  return y;
}

SparseShift SparseShift::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (int r = 0; r < dimension_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.push_back({cols_[k], r, values_[k]});
  return from_triplets(dimension_, t);
}

SparseShift SparseShift::scaled(double factor) const {
  if (!std::isfinite(factor)) throw ValidationError("scale factor is not finite");
  SparseShift s = *this;
  if (factor == 0.0) {
    s.cols_.clear();
    s.values_.clear();
    std::fill(s.row_ptr_.begin(), s.row_ptr_.end(), 0);
    return s;
  }
  for (auto& v : s.values_) v *= factor;
  return s;
}

SparseShift SparseShift::submatrix(std::span<const int> keep) const {
  std::vector<int> position(static_cast<std::size_t>(dimension_), -1);
  for (std::size_t p = 0; p < keep.size(); ++p) {
    int node = keep[p];
    if (node < 0 || node >= dimension_) throw ValidationError("submatrix index out of range");
    if (position[node] != -1) throw ValidationError("submatrix index repeated");
    position[node] = static_cast<int>(p);
  }
  std::vector<Triplet> t;
  for (std::size_t p = 0; p < keep.size(); ++p) {
    int r = keep[p];
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (position[cols_[k]] >= 0) t.push_back({static_cast<int>(p), position[cols_[k]], values_[k]});
  }
  return from_triplets(static_cast<int>(keep.size()), t);
}

double SparseShift::at(int row, int col) const {
  auto cols = row_columns(row);
  auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(row_ptr_[row] + (it - cols.begin()))];
}

std::span<const int> SparseShift::row_columns(int row) const {
  return {cols_.data() + row_ptr_[row], static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

std::span<const double> SparseShift::row_values(int row) const {
  return {values_.data() + row_ptr_[row],
          static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row])};
}

std::vector<Triplet> SparseShift::triplets() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (int r = 0; r < dimension_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.push_back({r, cols_[k], values_[k]});
  return t;
}

Matrix SparseShift::to_dense() const {
  Matrix d = Matrix::Zero(dimension_, dimension_);
  for (int r = 0; r < dimension_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, cols_[k]) = values_[k];
  return d;
}

SparseShift multiply(const SparseShift& a, const SparseShift& b) {
  require_same_dimension(a, b, "multiply");
  const int n = a.dimension();
  std::vector<Triplet> t;
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<int> touched;
  for (int r = 0; r < n; ++r) {
    touched.clear();
    for (int k = a.row_ptr_[r]; k < a.row_ptr_[r + 1]; ++k) {
      const int mid = a.cols_[k];
      for (int q = b.row_ptr_[mid]; q < b.row_ptr_[mid + 1]; ++q) {
        const int c = b.cols_[q];
        if (!used[c]) {
          used[c] = 1;
          touched.push_back(c);
        }
        acc[c] += a.values_[k] * b.values_[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int c : touched) {
      t.push_back({r, c, acc[c]});
      acc[c] = 0.0;
      used[c] = 0;
    }
  }
  return SparseShift::from_triplets(n, t);
}

SparseShift subtract(const SparseShift& a, const SparseShift& b) {
  require_same_dimension(a, b, "subtract");
  const int n = a.dimension();
  std::vector<Triplet> t;
  for (int r = 0; r < n; ++r) {
    int ka = a.row_ptr_[r];
    int kb = b.row_ptr_[r];
    const int ea = a.row_ptr_[r + 1];
    const int eb = b.row_ptr_[r + 1];
    while (ka < ea || kb < eb) {
      if (kb == eb || (ka < ea && a.cols_[ka] < b.cols_[kb])) {
        t.push_back({r, a.cols_[ka], a.values_[ka]});
        ++ka;
      } else if (ka == ea || b.cols_[kb] < a.cols_[ka]) {
        t.push_back({r, b.cols_[kb], -b.values_[kb]});
        ++kb;
      } else {
        t.push_back({r, a.cols_[ka], a.values_[ka] - b.values_[kb]});
        ++ka;
        ++kb;
      }
    }
  }
  return SparseShift::from_triplets(n, t);
}

double operator_norm(int dimension, const LinearMap& apply, const LinearMap& apply_transpose,
                     const NormOptions& options) {
  if (dimension <= 0) throw ValidationError("operator_norm: dimension must be positive");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  Vector v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = gauss(rng);
  v.normalize();

  double previous = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Vector w = apply(v);
    const double estimate = w.squaredNorm();
    if (estimate == 0.0) return 0.0;
    Vector u = apply_transpose(w);
    const double un = u.norm();
    if (un == 0.0) return std::sqrt(estimate);
    v = u / un;
    // ||A^T A v|| >= ||A v||^2 for unit v, so the next iterate is at least as good.
    if (it > 0 && std::abs(estimate - previous) <= options.tolerance * estimate) {
      return std::sqrt(std::max(estimate, apply(v).squaredNorm()));
    }
    previous = estimate;
  }
  std::ostringstream msg;
  msg << "power iteration did not converge within " << options.max_iterations << " iterations";
  throw NumericalError(msg.str());
}

double spectral_norm(const SparseShift& s, const NormOptions& options) {
  if (s.nnz() == 0) return 0.0;
  return operator_norm(
      s.dimension(), [&](const Vector& v) -> Vector { return s.apply(v); },
      [&](const Vector& v) -> Vector { return s.apply_transpose(v); }, options);
}

SparseShift normalize_shift(const SparseShift& s, const NormOptions& options) {
  if (s.nnz() == 0) throw ValidationError("normalize_shift: operator is all zero");
  const double sigma = spectral_norm(s, options);
  return s.scaled(1.0 / sigma);
}

SparseShift commutator(const SparseShift& s_i, const SparseShift& s_j) {
  require_same_dimension(s_i, s_j, "commutator");
  return subtract(multiply(s_i, s_j), multiply(s_j, s_i));
}

double commutator_norm(const SparseShift& s_i, const SparseShift& s_j, const NormOptions& options) {
  const SparseShift c = commutator(s_i, s_j);
  if (c.nnz() == 0) return 0.0;
  return spectral_norm(c, options);
}

}  // namespace mgsp
