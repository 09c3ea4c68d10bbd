#pragma once

#include <stdexcept>

#include "resqpass/operators.hpp"

namespace resqpass {

class FactorizationFailedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Applies M^{-1} for some approximation M of the normal matrix.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Index order() const = 0;
  virtual Vector solve(const Vector& r) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  explicit IdentityPreconditioner(Index n) : n_(n) {}
  Index order() const override { return n_; }
  Vector solve(const Vector& r) const override;

 private:
  Index n_;
};

/// Incomplete LU factors: unit lower L (strict part stored) and upper U with
/// its diagonal.
struct ILUTFactorization {
  SparseMatrixCSR lower;
  SparseMatrixCSR upper;
  double drop_tol = 0.0;

  /// backward(U, forward(L, r))
  Vector solve(const Vector& r) const;
};

enum class IlutDropRule {
  row_norm,  // |entry| < tau * ||S(i,:)||_2, multipliers tested for the L part
  diagonal,  // |entry| < tau * sqrt(|s_ii| |s_jj|), invariant under diagonal scaling
};

struct IlutOptions {
  IlutDropRule rule = IlutDropRule::row_norm;
  /// Never drop positions of the original pattern of S(i,:).
  bool keep_pattern = true;
  /// Add dropped entries to the diagonal (row-sum preserving, modified ILU).
  bool compensate = false;
};

/// Row-wise threshold ILU without pivoting. The diagonal is never dropped.
/// The default options drop only fill. Throws FactorizationFailedError on a
/// zero pivot.
ILUTFactorization ilut_factor(const SparseMatrixCSR& s, double tau, const IlutOptions& options = {});

class IlutPreconditioner final : public Preconditioner {
 public:
  explicit IlutPreconditioner(ILUTFactorization factors) : factors_(std::move(factors)) {}
  Index order() const override { return factors_.upper.rows(); }
  Vector solve(const Vector& r) const override { return factors_.solve(r); }

  const ILUTFactorization& factors() const { return factors_; }

 private:
  ILUTFactorization factors_;
};

Vector precond_solve(const Preconditioner& p, const Vector& r);

}  // namespace resqpass
