#pragma once

#include <memory>
#include <vector>

#include "resqpass/dense.hpp"

namespace resqpass {

/// Matrix-free m x n operator with forward and adjoint application.
///
/// Implementations are immutable after construction, so concurrent calls to
/// apply() and apply_adjoint() are safe.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  /// A v, with v of length cols().
  virtual Vector apply(const Vector& v) const = 0;
  /// A^T w, with w of length rows().
  virtual Vector apply_adjoint(const Vector& w) const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix a) : a_(std::move(a)) {}

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  Vector apply(const Vector& v) const override;
  Vector apply_adjoint(const Vector& w) const override;

  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row; explicit zeros are
/// allowed but never created by from_triplets().
class SparseMatrixCSR final : public LinearOperator {
 public:
  SparseMatrixCSR() = default;
  SparseMatrixCSR(Index rows, Index cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
                  std::vector<double> values);

  /// Duplicate entries are summed; resulting exact zeros are dropped.
  static SparseMatrixCSR from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseMatrixCSR from_dense(const Matrix& dense, double drop = 0.0);
  static SparseMatrixCSR identity(Index n);

  Index rows() const override { return rows_; }
  Index cols() const override { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  Vector apply(const Vector& v) const override;
  Vector apply_adjoint(const Vector& w) const override;

  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  /// Value at (i, j), zero when not stored.
  double coeff(Index i, Index j) const;

  SparseMatrixCSR transpose() const;
  Matrix to_dense() const;

  /// Throws std::invalid_argument when the CSR invariants do not hold.
  void validate() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

/// Sparse product a * b.
SparseMatrixCSR multiply(const SparseMatrixCSR& a, const SparseMatrixCSR& b);

/// Sparse normal matrix A^T A.
SparseMatrixCSR normal_matrix(const SparseMatrixCSR& a);

/// The operator I_m (x) X acting on vec(Y), Y of shape p x m.
class KronLeftOperator final : public LinearOperator {
 public:
  KronLeftOperator(Matrix x, Index m);

  Index rows() const override { return x_.rows() * m_; }
  Index cols() const override { return x_.cols() * m_; }
  Vector apply(const Vector& v) const override;
  Vector apply_adjoint(const Vector& w) const override;

 private:
  Matrix x_;
  Index m_;
};

/// The operator Y^T (x) I_n acting on vec(X), X of shape n x p.
class KronRightOperator final : public LinearOperator {
 public:
  KronRightOperator(Matrix y, Index n);

  Index rows() const override { return n_ * y_.cols(); }
  Index cols() const override { return n_ * y_.rows(); }
  Vector apply(const Vector& v) const override;
  Vector apply_adjoint(const Vector& w) const override;

 private:
  Matrix y_;
  Index n_;
};

/// Free-function forms of the two Kronecker products.
Vector kron_left_apply(const Matrix& x, Index m, const Vector& v);
Vector kron_right_apply(const Matrix& y, Index n, const Vector& v);

struct GramColumn {
  Vector c;        // V^T A^T A v_new
  double delta;    // ||A v_new||^2
  Vector a_v_new;  // A v_new
};

/// Border of the projected normal matrix for a new basis vector, using one
/// application of A and one of A^T.
GramColumn gram_column(const LinearOperator& a, const Eigen::Ref<const Matrix>& basis,
                       const Vector& v_new);

/// 2D finite-difference Laplacian on a g x g interior grid of the unit square,
/// A_1D (x) I + I (x) A_1D with A_1D = (g+1)^2 tridiag(-1, 2, -1).
SparseMatrixCSR laplacian_2d(Index g);

/// Power-iteration estimate of ||A||_2.
double estimate_norm(const LinearOperator& a, int iterations = 30);

}  // namespace resqpass
