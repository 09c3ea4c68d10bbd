#pragma once

#include <cstdint>
#include <random>

#include "resqpass/dense.hpp"
#include "resqpass/operators.hpp"

namespace resqpass::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
  }
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed) { return random_matrix(n, 1, seed).col(0); }

inline Matrix random_spd(Index n, std::uint64_t seed) {
  const Matrix b = random_matrix(n, n, seed);
  return b * b.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

inline SparseMatrixCSR random_sparse(Index rows, Index cols, double density, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> dist;
  Matrix m = Matrix::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (u(gen) < density) m(i, j) = dist(gen);
    }
  }
  return SparseMatrixCSR::from_dense(m);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace resqpass::testing
