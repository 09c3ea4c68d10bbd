#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "resqpass/dense.hpp"

namespace resqpass {

class InfeasibleStartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WorkingSetFullError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inequality constraints C y <= d over R^k, supplied row by row.
///
/// Rows with an infinite bound never block a step.
class ConstraintSet {
 public:
  virtual ~ConstraintSet() = default;

  /// Number of rows t.
  virtual Index count() const = 0;
  /// Number of columns k.
  virtual Index dim() const = 0;

  virtual Vector row(Index i) const = 0;
  virtual double bound(Index i) const = 0;
  virtual double row_norm(Index i) const = 0;

  /// C v for all t rows.
  virtual Vector apply(const Vector& v) const = 0;
};

class DenseConstraints final : public ConstraintSet {
 public:
  DenseConstraints(Matrix c, Vector d);

  Index count() const override { return c_.rows(); }
  Index dim() const override { return c_.cols(); }
  Vector row(Index i) const override { return c_.row(i).transpose(); }
  double bound(Index i) const override { return d_(i); }
  double row_norm(Index i) const override { return norms_(i); }
  Vector apply(const Vector& v) const override { return c_ * v; }

 private:
  Matrix c_;
  Vector d_;
  Vector norms_;
};

/// min 1/2 y^T G y + f^T y  s.t.  C y <= d, with G = L L^T.
struct QpProblem {
  const LowerTriangular& factor;
  const Vector& f;
  const ConstraintSet& constraints;
};

/// Working-set data of the active-set iteration.
///
/// X = L^{-1} C_W^T, Y = G^{-1} C_W^T, qr factors X, and q(i) = C_{W(i)} (x + z)
/// with z = G^{-1} f. Columns follow the order of `working`.
struct QpasState {
  Vector x;
  Vector z;
  std::vector<Index> working;
  std::vector<char> in_working;
  Matrix X;
  Matrix Y;
  QRFactors qr;
  Vector q;
  Vector cx;
};

/// Builds the state for a warm start at x0 with working set w0. Rows of w0
/// that are numerically dependent on earlier ones are left out.
///
/// Throws InfeasibleStartError when x0 violates a constraint or a row of w0
/// is not active at x0, and WorkingSetFullError when |w0| > k.
QpasState make_qpas_state(const QpProblem& problem, const Vector& x0, std::vector<Index> w0,
                          double feasibility_tol = 1e-9);

/// Adds row j to the working set, extending X, Y, the QR factors and q.
void add_constraint(QpasState& state, const QpProblem& problem, Index j);

/// Removes row j from the working set.
void remove_constraint(QpasState& state, Index j);

/// True when row j is numerically in the span of the working rows, measured
/// in the L^{-1} metric used by the QR factors.
bool working_dependent(const QpasState& state, const QpProblem& problem, Index j);

struct SearchDirection {
  Vector p;
  /// Multipliers in working-set order, sign convention G(x+p) + f + C_W^T lambda = 0.
  Vector multipliers;
};

/// Equality-constrained step on the current working set.
SearchDirection compute_direction(const QpasState& state);

struct StepLength {
  double alpha = 1.0;
  std::optional<Index> blocking;
};

/// Largest feasible step along p, capped at 1.
///
/// Rows outside the working set with C_i p above a roundoff floor relative to
/// max_j ||C_j|| ||p|| are candidates; ties go to the smallest row index.
StepLength step_length(const ConstraintSet& constraints, const Vector& cx, const Vector& cp,
                       const std::vector<char>& in_working, double p_norm);

/// cx + alpha * cp.
Vector recursive_cx_update(const Vector& cx, const Vector& cp, double alpha);

enum class QpasTermination { optimal, iteration_cap };

struct QpasOptions {
  /// Cap on working-set changes, honored only when the step is zero.
  Index max_iterations = std::numeric_limits<Index>::max();
  /// Track C x by the recurrence instead of recomputing it after each step.
  bool recurrence = false;
  /// Recompute C x after every step and record the largest deviation of the
  /// tracked value.
  bool measure_drift = false;
  double multiplier_tol = 1e-9;
  double feasibility_tol = 1e-9;
};

struct QpasResult {
  Vector y;
  std::vector<Index> working;
  Vector multipliers;
  /// Working-set changes (additions plus removals).
  Index inner_iterations = 0;
  /// Passes through the main loop, including steps that kept the working set.
  Index loop_iterations = 0;
  QpasTermination terminated_by = QpasTermination::optimal;
  /// ||p|| of the zero step at exit.
  double step_norm = 0.0;
  /// max ||(Cx)_tracked - C x||_inf, only filled with measure_drift.
  double cx_drift = 0.0;
};

/// Primal active-set method with warm start and QR working-set updates.
///
/// Every exit is a feasible point that is stationary on its working set.
QpasResult qpas_solve(const QpProblem& problem, const Vector& x0, std::vector<Index> w0,
                      const QpasOptions& options = {});

}  // namespace resqpass
