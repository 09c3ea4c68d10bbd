#include "resqpass/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace resqpass {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

Vector DenseOperator::apply(const Vector& v) const {
  require(v.size() == a_.cols(), "DenseOperator::apply: dimension mismatch");
  return a_ * v;
}

Vector DenseOperator::apply_adjoint(const Vector& w) const {
  require(w.size() == a_.rows(), "DenseOperator::apply_adjoint: dimension mismatch");
  return a_.transpose() * w;
}

SparseMatrixCSR::SparseMatrixCSR(Index rows, Index cols, std::vector<Index> row_ptr,
                                 std::vector<Index> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  validate();
}

void SparseMatrixCSR::validate() const {
  require(rows_ >= 0 && cols_ >= 0, "CSR: negative dimensions");
  require(static_cast<Index>(row_ptr_.size()) == rows_ + 1, "CSR: row pointer length");
  require(row_ptr_.front() == 0, "CSR: row pointer must start at 0");
  require(col_idx_.size() == values_.size(), "CSR: index/value length mismatch");
  require(row_ptr_.back() == static_cast<Index>(values_.size()), "CSR: nnz mismatch");
  for (Index i = 0; i < rows_; ++i) {
    require(row_ptr_[i] <= row_ptr_[i + 1], "CSR: row pointers must be nondecreasing");
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      require(col_idx_[p] >= 0 && col_idx_[p] < cols_, "CSR: column index out of range");
      if (p > row_ptr_[i]) {
        require(col_idx_[p - 1] < col_idx_[p], "CSR: column indices must increase within a row");
      }
    }
  }
}

SparseMatrixCSR SparseMatrixCSR::from_triplets(Index rows, Index cols,
                                               std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    require(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols,
            "from_triplets: entry out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  std::vector<Index> row_ptr(rows + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  col_idx.reserve(triplets.size());
  values.reserve(triplets.size());

  std::size_t p = 0;
  for (Index i = 0; i < rows; ++i) {
    while (p < triplets.size() && triplets[p].row == i) {
      const Index j = triplets[p].col;
      double sum = 0.0;
      while (p < triplets.size() && triplets[p].row == i && triplets[p].col == j) {
        sum += triplets[p].value;
        ++p;
      }
      if (sum != 0.0) {
        col_idx.push_back(j);
        values.push_back(sum);
      }
    }
    row_ptr[i + 1] = static_cast<Index>(values.size());
  }
  return SparseMatrixCSR(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrixCSR SparseMatrixCSR::from_dense(const Matrix& dense, double drop) {
  std::vector<Triplet> triplets;
  for (Index i = 0; i < dense.rows(); ++i) {
    for (Index j = 0; j < dense.cols(); ++j) {
      if (std::abs(dense(i, j)) > drop) triplets.push_back({i, j, dense(i, j)});
    }
  }
  return from_triplets(dense.rows(), dense.cols(), std::move(triplets));
}

SparseMatrixCSR SparseMatrixCSR::identity(Index n) {
  std::vector<Index> row_ptr(n + 1);
  std::iota(row_ptr.begin(), row_ptr.end(), Index{0});
  std::vector<Index> col_idx(n);
  std::iota(col_idx.begin(), col_idx.end(), Index{0});
  return SparseMatrixCSR(n, n, std::move(row_ptr), std::move(col_idx),
                         std::vector<double>(n, 1.0));
}

Vector SparseMatrixCSR::apply(const Vector& v) const {
  require(v.size() == cols_, "SparseMatrixCSR::apply: dimension mismatch");
  Vector out(rows_);
  for (Index i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * v(col_idx_[p]);
    out(i) = s;
  }
  return out;
}

Vector SparseMatrixCSR::apply_adjoint(const Vector& w) const {
  require(w.size() == rows_, "SparseMatrixCSR::apply_adjoint: dimension mismatch");
  Vector out = Vector::Zero(cols_);
  for (Index i = 0; i < rows_; ++i) {
    const double wi = w(i);
    if (wi == 0.0) continue;
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out(col_idx_[p]) += values_[p] * wi;
  }
  return out;
}

double SparseMatrixCSR::coeff(Index i, Index j) const {
  const auto begin = col_idx_.begin() + row_ptr_[i];
  const auto end = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

SparseMatrixCSR SparseMatrixCSR::transpose() const {
  std::vector<Index> row_ptr(cols_ + 1, 0);
  for (Index j : col_idx_) ++row_ptr[j + 1];
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  std::vector<Index> next(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<Index> col_idx(values_.size());
  std::vector<double> values(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const Index dst = next[col_idx_[p]]++;
      col_idx[dst] = i;
      values[dst] = values_[p];
    }
  }
  return SparseMatrixCSR(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

Matrix SparseMatrixCSR::to_dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out(i, col_idx_[p]) = values_[p];
  }
  return out;
}

SparseMatrixCSR multiply(const SparseMatrixCSR& a, const SparseMatrixCSR& b) {
  require(a.cols() == b.rows(), "multiply: dimension mismatch");
  const auto& arp = a.row_ptr();
  const auto& aci = a.col_idx();
  const auto& av = a.values();
  const auto& brp = b.row_ptr();
  const auto& bci = b.col_idx();
  const auto& bv = b.values();

  std::vector<Index> row_ptr(a.rows() + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<Index> marker(b.cols(), -1);
  std::vector<Index> pattern;

  for (Index i = 0; i < a.rows(); ++i) {
    pattern.clear();
    for (Index p = arp[i]; p < arp[i + 1]; ++p) {
      const Index k = aci[p];
      for (Index q = brp[k]; q < brp[k + 1]; ++q) {
        const Index j = bci[q];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          pattern.push_back(j);
        }
        acc[j] += av[p] * bv[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (Index j : pattern) {
      col_idx.push_back(j);
      values.push_back(acc[j]);
    }
    row_ptr[i + 1] = static_cast<Index>(values.size());
  }
  return SparseMatrixCSR(a.rows(), b.cols(), std::move(row_ptr), std::move(col_idx),
                         std::move(values));
}

SparseMatrixCSR normal_matrix(const SparseMatrixCSR& a) { return multiply(a.transpose(), a); }

KronLeftOperator::KronLeftOperator(Matrix x, Index m) : x_(std::move(x)), m_(m) {
  require(m_ >= 1, "KronLeftOperator: m must be positive");
}

Vector KronLeftOperator::apply(const Vector& v) const { return kron_left_apply(x_, m_, v); }

Vector KronLeftOperator::apply_adjoint(const Vector& w) const {
  require(w.size() == rows(), "KronLeftOperator::apply_adjoint: dimension mismatch");
  const Eigen::Map<const Matrix> wm(w.data(), x_.rows(), m_);
  Matrix out = x_.transpose() * wm;
  return Eigen::Map<const Vector>(out.data(), out.size());
}

KronRightOperator::KronRightOperator(Matrix y, Index n) : y_(std::move(y)), n_(n) {
  require(n_ >= 1, "KronRightOperator: n must be positive");
}

Vector KronRightOperator::apply(const Vector& v) const { return kron_right_apply(y_, n_, v); }

Vector KronRightOperator::apply_adjoint(const Vector& w) const {
  require(w.size() == rows(), "KronRightOperator::apply_adjoint: dimension mismatch");
  const Eigen::Map<const Matrix> wm(w.data(), n_, y_.cols());
  Matrix out = wm * y_.transpose();
  return Eigen::Map<const Vector>(out.data(), out.size());
}

Vector kron_left_apply(const Matrix& x, Index m, const Vector& v) {
  require(v.size() == x.cols() * m, "kron_left_apply: dimension mismatch");
  const Eigen::Map<const Matrix> y(v.data(), x.cols(), m);
  Matrix out = x * y;
  return Eigen::Map<const Vector>(out.data(), out.size());
}

Vector kron_right_apply(const Matrix& y, Index n, const Vector& v) {
  require(v.size() == n * y.rows(), "kron_right_apply: dimension mismatch");
  const Eigen::Map<const Matrix> x(v.data(), n, y.rows());
  Matrix out = x * y;
  return Eigen::Map<const Vector>(out.data(), out.size());
}

GramColumn gram_column(const LinearOperator& a, const Eigen::Ref<const Matrix>& basis,
                       const Vector& v_new) {
  require(v_new.size() == a.cols(), "gram_column: v_new has the wrong length");
  require(basis.cols() == 0 || basis.rows() == a.cols(), "gram_column: basis has the wrong height");
  GramColumn out;
  out.a_v_new = a.apply(v_new);
  out.delta = out.a_v_new.squaredNorm();
  if (basis.cols() == 0) {
    out.c = Vector(0);
  } else {
    out.c = basis.transpose() * a.apply_adjoint(out.a_v_new);
  }
  return out;
}

SparseMatrixCSR laplacian_2d(Index g) {
  require(g >= 2, "laplacian_2d: grid size must be at least 2");
  const double scale = static_cast<double>((g + 1) * (g + 1));
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * g * g));
  // index(i, j) = i * g + j; the Kronecker sum couples both grid directions
  for (Index i = 0; i < g; ++i) {
    for (Index j = 0; j < g; ++j) {
      const Index row = i * g + j;
      triplets.push_back({row, row, 4.0 * scale});
      if (i > 0) triplets.push_back({row, row - g, -scale});
      if (i + 1 < g) triplets.push_back({row, row + g, -scale});
      if (j > 0) triplets.push_back({row, row - 1, -scale});
      if (j + 1 < g) triplets.push_back({row, row + 1, -scale});
    }
  }
  return SparseMatrixCSR::from_triplets(g * g, g * g, std::move(triplets));
}

double estimate_norm(const LinearOperator& a, int iterations) {
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = a.apply_adjoint(a.apply(v));
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    sigma = std::sqrt(norm);
    v = w / norm;
  }
  return sigma;
}

}  // namespace resqpass
