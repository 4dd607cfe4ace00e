#pragma once

#include <random>

#include "mgsp/sparse_shift.hpp"

namespace testing {

inline mgsp::Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  mgsp::Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = g(rng);
  return m;
}

// Dense n x n with roughly `density` of its entries nonzero.
inline mgsp::Matrix sparse_dense(int n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mgsp::Matrix m = mgsp::Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (u(rng) < density) m(r, c) = u(rng) * 2.0 - 1.0;
  return m;
}

inline double svd_norm(const mgsp::Matrix& m) {
  Eigen::JacobiSVD<mgsp::Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace testing
