#include "resqpass/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace resqpass {

namespace {

void check_size(Index expected, Index got, const char* what) {
  if (expected != got) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(expected) + " vs " + std::to_string(got) + ")");
  }
}

}  // namespace

LowerTriangular::LowerTriangular(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("LowerTriangular: matrix must be square");
  }
  storage_ = Matrix::Zero(entries.rows(), entries.cols());
  storage_.triangularView<Eigen::Lower>() = entries.triangularView<Eigen::Lower>();
  order_ = entries.rows();
}

Matrix LowerTriangular::dense() const {
  Matrix out = Matrix::Zero(order_, order_);
  out.triangularView<Eigen::Lower>() =
      storage_.topLeftCorner(order_, order_).triangularView<Eigen::Lower>();
  return out;
}

void LowerTriangular::reserve(Index capacity) {
  if (capacity <= storage_.rows()) return;
  Matrix grown = Matrix::Zero(capacity, capacity);
  grown.topLeftCorner(order_, order_) = storage_.topLeftCorner(order_, order_);
  storage_.swap(grown);
}

void LowerTriangular::append_row(const Vector& l, double diag) {
  check_size(order_, l.size(), "LowerTriangular::append_row");
  if (order_ + 1 > storage_.rows()) {
    reserve(std::max<Index>(8, 2 * storage_.rows()));
  }
  storage_.row(order_).head(order_) = l.transpose();
  storage_(order_, order_) = diag;
  // stale entries from an earlier clear() must not leak into the upper part
  storage_.col(order_).head(order_).setZero();
  ++order_;
}

Vector forward_solve(const LowerTriangular& L, const Vector& c) {
  const Index k = L.order();
  check_size(k, c.size(), "forward_solve");
  Vector l(k);
  for (Index i = 0; i < k; ++i) {
    double s = c(i);
    for (Index j = 0; j < i; ++j) s -= L(i, j) * l(j);
    const double d = L(i, i);
    if (d == 0.0) throw SingularFactorError("forward_solve: zero diagonal entry");
    l(i) = s / d;
  }
  return l;
}

Matrix forward_solve(const LowerTriangular& L, const Matrix& C) {
  check_size(L.order(), C.rows(), "forward_solve");
  Matrix out(C.rows(), C.cols());
  for (Index j = 0; j < C.cols(); ++j) out.col(j) = forward_solve(L, Vector(C.col(j)));
  return out;
}

Vector backward_solve(const LowerTriangular& L, const Vector& c) {
  const Index k = L.order();
  check_size(k, c.size(), "backward_solve");
  Vector z(k);
  for (Index i = k - 1; i >= 0; --i) {
    double s = c(i);
    for (Index j = i + 1; j < k; ++j) s -= L(j, i) * z(j);
    const double d = L(i, i);
    if (d == 0.0) throw SingularFactorError("backward_solve: zero diagonal entry");
    z(i) = s / d;
  }
  return z;
}

Vector upper_solve(const Matrix& R, const Vector& b) {
  const Index t = R.cols();
  check_size(t, b.size(), "upper_solve");
  Vector x(t);
  for (Index i = t - 1; i >= 0; --i) {
    double s = b(i);
    for (Index j = i + 1; j < t; ++j) s -= R(i, j) * x(j);
    if (R(i, i) == 0.0) throw SingularFactorError("upper_solve: zero diagonal entry");
    x(i) = s / R(i, i);
  }
  return x;
}

Vector upper_transpose_solve(const Matrix& R, const Vector& b) {
  const Index t = R.cols();
  check_size(t, b.size(), "upper_transpose_solve");
  Vector x(t);
  for (Index i = 0; i < t; ++i) {
    double s = b(i);
    for (Index j = 0; j < i; ++j) s -= R(j, i) * x(j);
    if (R(i, i) == 0.0) throw SingularFactorError("upper_transpose_solve: zero diagonal entry");
    x(i) = s / R(i, i);
  }
  return x;
}

CholeskyAppendResult cholesky_append(LowerTriangular& L, const Vector& c, double delta,
                                     double posdef_eps) {
  const Vector l = forward_solve(L, c);
  CholeskyAppendResult result;
  result.pivot_sq = delta - l.squaredNorm();
  if (!(result.pivot_sq > posdef_eps * posdef_eps)) {
    result.posdef_lost = true;
    return result;
  }
  L.append_row(l, std::sqrt(result.pivot_sq));
  return result;
}

namespace {

// classical Gram-Schmidt with one reorthogonalization pass
void orthogonalize(const Matrix& q, const Vector& x, Vector& coeffs, Vector& w) {
  coeffs = q.transpose() * x;
  w = x - q * coeffs;
  const Vector second = q.transpose() * w;
  w -= q * second;
  coeffs += second;
}

}  // namespace

bool QRFactors::is_dependent(const Vector& x_new) const {
  check_size(q_.rows(), x_new.size(), "QRFactors::is_dependent");
  Vector coeffs;
  Vector w;
  orthogonalize(q_, x_new, coeffs, w);
  return !(w.norm() > kDegenerateColumnTol * x_new.norm());
}

void QRFactors::append_column(const Vector& x_new) {
  check_size(q_.rows(), x_new.size(), "QRFactors::append_column");
  const Index t = cols();
  const double xnorm = x_new.norm();

  Vector coeffs;
  Vector w;
  orthogonalize(q_, x_new, coeffs, w);

  const double rho = w.norm();
  if (!(rho > kDegenerateColumnTol * xnorm)) {
    throw DegenerateColumnError("QRFactors::append_column: column is numerically dependent");
  }

  q_.conservativeResize(Eigen::NoChange, t + 1);
  q_.col(t) = w / rho;
  r_.conservativeResize(t + 1, t + 1);
  r_.row(t).setZero();
  r_.col(t).head(t) = coeffs;
  r_(t, t) = rho;
}

void QRFactors::remove_column(Index j) {
  const Index t = cols();
  if (j < 0 || j >= t) throw std::out_of_range("QRFactors::remove_column: index out of range");

  // shift columns left; R becomes upper Hessenberg from column j on
  for (Index c = j; c + 1 < t; ++c) r_.col(c) = r_.col(c + 1);

  for (Index i = j; i + 1 < t; ++i) {
    const double a = r_(i, i);
    const double b = r_(i + 1, i);
    if (b == 0.0) continue;
    const double h = std::hypot(a, b);
    const double cs = a / h;
    const double sn = b / h;
    for (Index c = i; c + 1 < t; ++c) {
      const double top = r_(i, c);
      const double bot = r_(i + 1, c);
      r_(i, c) = cs * top + sn * bot;
      r_(i + 1, c) = -sn * top + cs * bot;
    }
    r_(i + 1, i) = 0.0;
    for (Index row = 0; row < q_.rows(); ++row) {
      const double qi = q_(row, i);
      const double qn = q_(row, i + 1);
      q_(row, i) = cs * qi + sn * qn;
      q_(row, i + 1) = -sn * qi + cs * qn;
    }
  }

  q_.conservativeResize(Eigen::NoChange, t - 1);
  r_.conservativeResize(t - 1, t - 1);
}

}  // namespace resqpass
