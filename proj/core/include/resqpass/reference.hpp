#pragma once

#include <utility>
#include <vector>

#include "resqpass/operators.hpp"

namespace resqpass {

struct LsqrResult {
  Vector x;
  /// ||A^T (A x_k - b)|| for k = 0, 1, ..., evaluated explicitly.
  std::vector<double> normal_residuals;
  /// Milliseconds since the start, one entry per history entry.
  std::vector<double> ms;
  Index iterations = 0;
};

/// Golub-Kahan LSQR without reorthogonalization. Stops when the normal-equation
/// residual drops to tol * ||A^T b|| or after maxit iterations.
LsqrResult lsqr_solve(const LinearOperator& a, const Vector& b, double tol, Index maxit);

struct BruteForceResult {
  Vector x;
  Vector lambda;
  Vector mu;
  double objective = 0.0;
};

/// Exhaustive BVLS oracle for n <= 12: tries every assignment of each
/// variable to {lower, upper, free}, solves the reduced least-squares problem,
/// and keeps the feasible, dual-feasible candidate with the smallest objective.
BruteForceResult brute_force_bvls(const Matrix& a, const Vector& b, const Vector& lower,
                                  const Vector& upper);

inline constexpr Index kBruteForceMaxVariables = 12;

struct KktReport {
  double stationarity = 0.0;         // ||A^T (A x - b) - lambda + mu||_2
  double max_bound_violation = 0.0;  // max(lower - x, x - upper, 0)
  double max_complementarity = 0.0;  // max |lambda_i (x_i - l_i)|, |mu_i (u_i - x_i)|
  double min_multiplier = 0.0;       // min over lambda and mu
};

/// Evaluates the first-order optimality conditions of the full problem.
/// Infinite bounds contribute no complementarity term.
KktReport kkt_report(const LinearOperator& a, const Vector& b, const Vector& lower,
                     const Vector& upper, const Vector& x, const Vector& lambda, const Vector& mu);

struct ProjectedGradientResult {
  Vector x;
  Index iterations = 0;
  /// ||x - P(x - grad)||_inf at exit.
  double projected_gradient = 0.0;
};

/// Accelerated projected gradient with adaptive restart. Independent of the
/// active-set machinery; used as a second opinion for bounded problems.
ProjectedGradientResult projected_gradient_bvls(const LinearOperator& a, const Vector& b,
                                                const Vector& lower, const Vector& upper,
                                                const Vector& x0, double tol, Index maxit);

/// Multipliers implied by stationarity at x: lambda = max(g, 0) on the lower
/// side, mu = max(-g, 0) on the upper side, with g = A^T (A x - b).
std::pair<Vector, Vector> multipliers_from_gradient(const LinearOperator& a, const Vector& b,
                                                    const Vector& lower, const Vector& upper,
                                                    const Vector& x, double active_tol);

}  // namespace resqpass
