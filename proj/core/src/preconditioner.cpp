#include "resqpass/preconditioner.hpp"

#include <cmath>
#include <algorithm>
#include <set>
#include <string>

namespace resqpass {

Vector IdentityPreconditioner::solve(const Vector& r) const {
  if (r.size() != n_) throw std::invalid_argument("IdentityPreconditioner: dimension mismatch");
  return r;
}

Vector ILUTFactorization::solve(const Vector& r) const {
  const Index n = upper.rows();
  if (r.size() != n) throw std::invalid_argument("ILUTFactorization::solve: dimension mismatch");

  const auto& lrp = lower.row_ptr();
  const auto& lci = lower.col_idx();
  const auto& lv = lower.values();
  Vector y = r;
  for (Index i = 0; i < n; ++i) {
    double s = y(i);
    for (Index p = lrp[i]; p < lrp[i + 1]; ++p) s -= lv[p] * y(lci[p]);
    y(i) = s;
  }

  // the diagonal is the first stored entry of every row of U
  const auto& urp = upper.row_ptr();
  const auto& uci = upper.col_idx();
  const auto& uv = upper.values();
  for (Index i = n - 1; i >= 0; --i) {
    double s = y(i);
    for (Index p = urp[i] + 1; p < urp[i + 1]; ++p) s -= uv[p] * y(uci[p]);
    y(i) = s / uv[urp[i]];
  }
  return y;
}

ILUTFactorization ilut_factor(const SparseMatrixCSR& s, double tau, const IlutOptions& options) {
  if (s.rows() != s.cols()) throw std::invalid_argument("ilut_factor: matrix must be square");
  if (!(tau >= 0.0)) throw std::invalid_argument("ilut_factor: tau must be nonnegative");
  const Index n = s.rows();
  const auto& srp = s.row_ptr();
  const auto& sci = s.col_idx();
  const auto& sv = s.values();

  Vector diag_scale = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) diag_scale(i) = std::sqrt(std::abs(s.coeff(i, i)));

  std::vector<Index> l_ptr{0}, l_idx, u_ptr{0}, u_idx;
  std::vector<double> l_val, u_val;

  std::vector<double> work(n, 0.0);
  std::vector<char> in_pattern(n, 0);  // stored in the working row
  std::vector<char> original(n, 0);    // part of S(i,:)
  std::set<Index> lower_cols;
  std::vector<Index> upper_cols;

  for (Index i = 0; i < n; ++i) {
    double row_norm = 0.0;
    lower_cols.clear();
    upper_cols.clear();
    bool has_diag = false;
    for (Index p = srp[i]; p < srp[i + 1]; ++p) {
      const Index j = sci[p];
      work[j] = sv[p];
      in_pattern[j] = 1;
      original[j] = 1;
      row_norm += sv[p] * sv[p];
      if (j < i) lower_cols.insert(j);
      else upper_cols.push_back(j);
      if (j == i) has_diag = true;
    }
    if (!has_diag) {
      work[i] = 0.0;
      in_pattern[i] = 1;
      upper_cols.push_back(i);
    }
    row_norm = std::sqrt(row_norm);
    double compensation = 0.0;

    // value is the raw working-row entry; for the L part, scaled is the multiplier
    auto dropped = [&](Index j, double value, double scaled) {
      if (options.keep_pattern && original[j]) return false;
      if (options.rule == IlutDropRule::row_norm) return std::abs(scaled) < tau * row_norm;
      return std::abs(value) < tau * diag_scale(i) * diag_scale(j);
    };

    // lower_cols grows only past the current position, so iteration stays valid
    for (auto it = lower_cols.begin(); it != lower_cols.end(); ++it) {
      const Index k = *it;
      const double pivot = u_val[static_cast<std::size_t>(u_ptr[k])];
      const double wk = work[k] / pivot;
      if (dropped(k, work[k], wk)) {
        if (options.compensate) compensation += work[k];
        work[k] = 0.0;
        continue;
      }
      work[k] = wk;
      for (Index p = u_ptr[k] + 1; p < u_ptr[k + 1]; ++p) {
        const Index j = u_idx[p];
        if (!in_pattern[j]) {
          in_pattern[j] = 1;
          work[j] = 0.0;
          if (j < i) lower_cols.insert(j);
          else upper_cols.push_back(j);
        }
        work[j] -= wk * u_val[p];
      }
    }

    for (Index k : lower_cols) {
      if (work[k] != 0.0) {
        l_idx.push_back(k);
        l_val.push_back(work[k]);
      }
    }
    l_ptr.push_back(static_cast<Index>(l_idx.size()));

    std::sort(upper_cols.begin(), upper_cols.end());
    for (Index j : upper_cols) {
      if (j != i && dropped(j, work[j], work[j])) {
        if (options.compensate) compensation += work[j];
        work[j] = 0.0;
      }
    }
    work[i] += compensation;
    if (work[i] == 0.0) {
      throw FactorizationFailedError("ilut_factor: zero pivot in row " + std::to_string(i));
    }
    for (Index j : upper_cols) {
      if (j == i || work[j] != 0.0) {
        u_idx.push_back(j);
        u_val.push_back(work[j]);
      }
    }
    u_ptr.push_back(static_cast<Index>(u_idx.size()));

    for (Index k : lower_cols) work[k] = 0.0, in_pattern[k] = 0, original[k] = 0;
    for (Index j : upper_cols) work[j] = 0.0, in_pattern[j] = 0, original[j] = 0;
  }

  ILUTFactorization out;
  out.lower = SparseMatrixCSR(n, n, std::move(l_ptr), std::move(l_idx), std::move(l_val));
  out.upper = SparseMatrixCSR(n, n, std::move(u_ptr), std::move(u_idx), std::move(u_val));
  out.drop_tol = tau;
  return out;
}

Vector precond_solve(const Preconditioner& p, const Vector& r) { return p.solve(r); }

}  // namespace resqpass
