#pragma once

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "resqpass/history.hpp"
#include "resqpass/operators.hpp"
#include "resqpass/preconditioner.hpp"
#include "resqpass/qpas.hpp"

namespace resqpass {

/// min 1/2 ||A x - b||^2  s.t.  lower <= x <= upper. Bounds may be infinite.
struct BvlsProblem {
  std::shared_ptr<const LinearOperator> a;
  Vector b;
  Vector lower;
  Vector upper;

  Index rows() const { return a->rows(); }
  Index cols() const { return a->cols(); }

  /// Throws std::invalid_argument on shape errors or lower > upper.
  void validate() const;
};

/// Unconstrained problem (bounds at -inf/+inf).
BvlsProblem make_unconstrained(std::shared_ptr<const LinearOperator> a, Vector b);

/// The problem in x~ = x - shift, whose bounds bracket zero.
struct ShiftedProblem {
  Vector shift;
  Vector b;
  Vector lower;
  Vector upper;
};

/// shift_i = median(lower_i, 0, upper_i); infinite bounds never bind.
ShiftedProblem shift_problem(const BvlsProblem& problem);

enum class Factorization { cholesky, gram_schmidt };
enum class ToleranceMode { relative, absolute };

struct SolverConfig {
  /// Residual threshold; relative to ||r_0|| unless tol_mode is absolute.
  double tol = 1e-8;
  ToleranceMode tol_mode = ToleranceMode::relative;
  /// Relative loss-of-definiteness threshold: the new factor diagonal must
  /// exceed posdef_eps * ||A v_new||.
  double posdef_eps = 1e-6;
  /// 0 selects n + 10.
  Index maxit_outer = 0;
  /// Cap on working-set changes per inner solve.
  Index maxit_inner = 10;
  Factorization factorization = Factorization::cholesky;
  bool recurrence = false;
  bool warm_start = true;
  std::shared_ptr<const Preconditioner> preconditioner;
  /// Keep the basis, per-iteration coefficients and factor data.
  bool keep_trace = false;
  /// Measure the deviation of the tracked C x in every inner solve.
  bool measure_drift = false;

  void validate() const;
};

/// Sentinel for an uncapped inner solve.
inline constexpr Index kUnlimited = std::numeric_limits<Index>::max();

/// Diagnostic data kept when SolverConfig::keep_trace is set.
struct SolverTrace {
  Matrix basis;                       // V, n x k
  std::vector<Vector> coefficients;   // y_k after each inner solve
  std::vector<double> step_norms;     // ||p|| at each inner exit
  std::vector<QpasTermination> inner_exits;
  Matrix factor;                      // lower factor of V^T A^T A V (B^T for Gram-Schmidt)
  Matrix gs_u;                        // U with A V = U B, Gram-Schmidt only
};

struct SolveResult {
  Vector x;
  Vector lambda;
  Vector mu;
  ConvergenceHistory history;
  /// Largest tracked-versus-direct C x deviation over all inner solves.
  double max_cx_drift = 0.0;
  SolverTrace trace;
};

/// Columns appended one at a time, stored with spare capacity.
class ColumnBasis {
 public:
  ColumnBasis() = default;
  explicit ColumnBasis(Index rows) : storage_(rows, 0) {}

  Index rows() const { return storage_.rows(); }
  Index cols() const { return cols_; }
  void append(const Vector& column);
  auto view() const { return storage_.leftCols(cols_); }
  auto col(Index j) const { return storage_.col(j); }

 private:
  Matrix storage_;
  Index cols_ = 0;
};

/// Bound rows of the projected problem: row i < n is -V(i,:) with bound
/// -lower_i, row n + i is V(i,:) with bound upper_i.
class ProjectedBounds final : public ConstraintSet {
 public:
  ProjectedBounds(Eigen::Ref<const Matrix> basis, const Vector& lower, const Vector& upper);

  Index count() const override { return 2 * basis_.rows(); }
  Index dim() const override { return basis_.cols(); }
  Vector row(Index i) const override;
  double bound(Index i) const override;
  double row_norm(Index i) const override;
  Vector apply(const Vector& v) const override;

 private:
  Eigen::Ref<const Matrix> basis_;
  const Vector& lower_;
  const Vector& upper_;
  Vector row_norms_;
};

/// Splits working-set multipliers into lower (lambda) and upper (mu) parts.
std::pair<Vector, Vector> scatter_multipliers(const std::vector<Index>& working,
                                              const Vector& multipliers, Index n);

/// A^T (A V y - b) - lambda + mu, passed through the preconditioner when one
/// is given.
Vector residual(const LinearOperator& a, const Vector& b, const Eigen::Ref<const Matrix>& basis,
                const Vector& y, const Vector& lambda, const Vector& mu,
                const Preconditioner* preconditioner = nullptr);

enum class StopDecision { keep_going, residual_tol, posdef_lost, maxit };

/// Both criteria are armed at once; the residual test wins ties.
StopDecision check_stop(double resnorm, double r0norm, const SolverConfig& config,
                        bool posdef_lost, Index iteration, Index maxit_outer);

/// Outer-iteration state of the residual subspace method.
struct SolverState {
  ColumnBasis basis;
  LowerTriangular factor;
  Vector f;
  Vector y;
  std::vector<Index> working;
};

/// Appends r / ||r|| to the basis, extends f with -v^T A^T b and the warm
/// start with a zero coordinate. The working set is kept.
void expand_basis(SolverState& state, const Vector& r, const Vector& atb);

SolveResult solve_cholesky(const BvlsProblem& problem, const SolverConfig& config);
SolveResult solve_gram_schmidt(const BvlsProblem& problem, const SolverConfig& config);

/// Dispatches on config.factorization.
SolveResult solve(const BvlsProblem& problem, const SolverConfig& config);

}  // namespace resqpass
