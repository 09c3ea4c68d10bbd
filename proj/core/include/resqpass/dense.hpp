#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace resqpass {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class SingularFactorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateColumnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column-extendable lower-triangular factor.
///
/// Storage grows geometrically so that bordering the factor one row at a
/// time costs O(k) amortized copies instead of O(k^2).
class LowerTriangular {
 public:
  LowerTriangular() = default;

  /// Takes the lower triangle of a square matrix; the strict upper part is
  /// ignored and reads back as zero.
  explicit LowerTriangular(const Matrix& entries);

  Index order() const { return order_; }
  bool empty() const { return order_ == 0; }

  double operator()(Index i, Index j) const { return j > i ? 0.0 : storage_(i, j); }

  /// Dense copy of the k x k factor.
  Matrix dense() const;

  /// Borders the factor with the row (l^T, diag).
  void append_row(const Vector& l, double diag);

  void clear() { order_ = 0; }

 private:
  void reserve(Index capacity);

  Matrix storage_;
  Index order_ = 0;
};

/// Solves L l = c. Throws SingularFactorError on a zero diagonal.
Vector forward_solve(const LowerTriangular& L, const Vector& c);

/// Solves L X = C column by column.
Matrix forward_solve(const LowerTriangular& L, const Matrix& C);

/// Solves L^T z = c.
Vector backward_solve(const LowerTriangular& L, const Vector& c);

/// Solves R x = b for upper-triangular R.
Vector upper_solve(const Matrix& R, const Vector& b);

/// Solves R^T x = b for upper-triangular R.
Vector upper_transpose_solve(const Matrix& R, const Vector& b);

struct CholeskyAppendResult {
  bool posdef_lost = false;
  /// delta - l^T l, the square of the would-be new diagonal.
  double pivot_sq = 0.0;
};

/// Borders the Cholesky factor of G with the column (c, delta).
///
/// On success L becomes the factor of [[G, c], [c^T, delta]]. When
/// delta - l^T l <= posdef_eps^2 the factor is left untouched and
/// posdef_lost is set.
CholeskyAppendResult cholesky_append(LowerTriangular& L, const Vector& c, double delta,
                                     double posdef_eps);

/// Thin QR factors X = Q R with Q stored explicitly.
class QRFactors {
 public:
  QRFactors() = default;
  explicit QRFactors(Index rows) : q_(rows, 0), r_(0, 0) {}

  Index rows() const { return q_.rows(); }
  Index cols() const { return r_.cols(); }

  const Matrix& q() const { return q_; }
  const Matrix& r() const { return r_; }

  /// Appends a column; throws DegenerateColumnError when x_new lies in
  /// span(Q) to working precision.
  void append_column(const Vector& x_new);

  /// True when append_column(x_new) would throw.
  bool is_dependent(const Vector& x_new) const;

  /// Deletes column j and restores R to upper-triangular with Givens
  /// rotations.
  void remove_column(Index j);

 private:
  Matrix q_;
  Matrix r_;
};

/// Relative threshold under which a new R diagonal is declared degenerate.
inline constexpr double kDegenerateColumnTol = 1e-10;

}  // namespace resqpass
