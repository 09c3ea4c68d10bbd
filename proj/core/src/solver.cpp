#include "resqpass/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace resqpass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_with_zero(double lo, double hi) {
  // median(lo, 0, hi) with lo <= hi; infinite bounds never bind
  if (lo > 0.0) return lo;
  if (hi < 0.0) return hi;
  return 0.0;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Lower factor of V^T A^T A V, kept either by bordering a Cholesky factor or
/// by modified Gram-Schmidt on A V = U B.
class FactorPolicy {
 public:
  FactorPolicy(Factorization kind, Index m) : kind_(kind), u_(m) {}

  /// Returns false when the bordered matrix is no longer positive definite;
  /// the factor is then unchanged.
  bool append(const LinearOperator& a, const Eigen::Ref<const Matrix>& basis, const Vector& v,
              double posdef_eps, LowerTriangular& factor) {
    if (kind_ == Factorization::cholesky) {
      const GramColumn gc = gram_column(a, basis, v);
      const double floor = posdef_eps * std::sqrt(gc.delta);
      return !cholesky_append(factor, gc.c, gc.delta, floor).posdef_lost;
    }
    Vector u = a.apply(v);
    const double av_norm = u.norm();
    const Index k = u_.cols();
    Vector column(k);
    for (Index j = 0; j < k; ++j) {
      const double bji = u_.col(j).dot(u);
      column(j) = bji;
      u -= bji * u_.col(j);
    }
    const double diag = u.norm();
    if (!(diag > posdef_eps * av_norm)) return false;
    u_.append(u / diag);
    factor.append_row(column, diag);
    return true;
  }

  Matrix u() const { return u_.view(); }

 private:
  Factorization kind_;
  ColumnBasis u_;
};

}  // namespace

void BvlsProblem::validate() const {
  if (!a) throw std::invalid_argument("BvlsProblem: missing operator");
  if (a->rows() < 1 || a->cols() < 1) throw std::invalid_argument("BvlsProblem: empty operator");
  if (b.size() != a->rows()) throw std::invalid_argument("BvlsProblem: b has the wrong length");
  if (lower.size() != a->cols() || upper.size() != a->cols()) {
    throw std::invalid_argument("BvlsProblem: bounds have the wrong length");
  }
  for (Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i)) {
      throw std::invalid_argument("BvlsProblem: lower > upper at index " + std::to_string(i));
    }
  }
}

BvlsProblem make_unconstrained(std::shared_ptr<const LinearOperator> a, Vector b) {
  const Index n = a->cols();
  return BvlsProblem{std::move(a), std::move(b), Vector::Constant(n, -kInf),
                     Vector::Constant(n, kInf)};
}

ShiftedProblem shift_problem(const BvlsProblem& problem) {
  problem.validate();
  const Index n = problem.cols();
  ShiftedProblem out;
  out.shift.resize(n);
  for (Index i = 0; i < n; ++i) out.shift(i) = median_with_zero(problem.lower(i), problem.upper(i));
  out.lower = problem.lower - out.shift;
  out.upper = problem.upper - out.shift;
  if (out.shift.isZero(0.0)) {
    out.b = problem.b;
  } else {
    out.b = problem.b - problem.a->apply(out.shift);
  }
  return out;
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
  if (!(posdef_eps > 0.0)) throw std::invalid_argument("SolverConfig: posdef_eps must be positive");
  if (maxit_inner < 1) throw std::invalid_argument("SolverConfig: maxit_inner must be >= 1");
  if (maxit_outer < 0) throw std::invalid_argument("SolverConfig: maxit_outer must be >= 0");
}

void ColumnBasis::append(const Vector& column) {
  if (column.size() != storage_.rows()) throw std::invalid_argument("ColumnBasis: wrong length");
  if (cols_ == storage_.cols()) {
    Matrix grown(storage_.rows(), std::max<Index>(8, 2 * storage_.cols()));
    grown.leftCols(cols_) = storage_.leftCols(cols_);
    storage_.swap(grown);
  }
  storage_.col(cols_++) = column;
}

ProjectedBounds::ProjectedBounds(Eigen::Ref<const Matrix> basis, const Vector& lower,
                                 const Vector& upper)
    : basis_(basis), lower_(lower), upper_(upper), row_norms_(basis.rowwise().norm()) {
  if (lower.size() != basis.rows() || upper.size() != basis.rows()) {
    throw std::invalid_argument("ProjectedBounds: bounds do not match the basis height");
  }
}

Vector ProjectedBounds::row(Index i) const {
  const Index n = basis_.rows();
  if (i < n) return -basis_.row(i).transpose();
  return basis_.row(i - n).transpose();
}

double ProjectedBounds::bound(Index i) const {
  const Index n = basis_.rows();
  return i < n ? -lower_(i) : upper_(i - n);
}

double ProjectedBounds::row_norm(Index i) const {
  const Index n = basis_.rows();
  return row_norms_(i < n ? i : i - n);
}

Vector ProjectedBounds::apply(const Vector& v) const {
  const Index n = basis_.rows();
  const Vector w = basis_ * v;
  Vector out(2 * n);
  out.head(n) = -w;
  out.tail(n) = w;
  return out;
}

std::pair<Vector, Vector> scatter_multipliers(const std::vector<Index>& working,
                                              const Vector& multipliers, Index n) {
  if (static_cast<Index>(working.size()) != multipliers.size()) {
    throw std::invalid_argument("scatter_multipliers: size mismatch");
  }
  Vector lambda = Vector::Zero(n);
  Vector mu = Vector::Zero(n);
  for (std::size_t pos = 0; pos < working.size(); ++pos) {
    const Index row = working[pos];
    if (row < 0 || row >= 2 * n) throw std::out_of_range("scatter_multipliers: row out of range");
    if (row < n) {
      lambda(row) += multipliers(static_cast<Index>(pos));
    } else {
      mu(row - n) += multipliers(static_cast<Index>(pos));
    }
  }
  return {lambda, mu};
}

Vector residual(const LinearOperator& a, const Vector& b, const Eigen::Ref<const Matrix>& basis,
                const Vector& y, const Vector& lambda, const Vector& mu,
                const Preconditioner* preconditioner) {
  Vector x = basis.cols() == 0 ? Vector(Vector::Zero(a.cols())) : Vector(basis * y);
  Vector raw = a.apply_adjoint(a.apply(x) - b) - lambda + mu;
  if (preconditioner) return preconditioner->solve(raw);
  return raw;
}

StopDecision check_stop(double resnorm, double r0norm, const SolverConfig& config,
                        bool posdef_lost, Index iteration, Index maxit_outer) {
  const double threshold =
      config.tol_mode == ToleranceMode::relative ? config.tol * r0norm : config.tol;
  if (resnorm <= threshold) return StopDecision::residual_tol;
  if (posdef_lost) return StopDecision::posdef_lost;
  if (iteration >= maxit_outer) return StopDecision::maxit;
  return StopDecision::keep_going;
}

void expand_basis(SolverState& state, const Vector& r, const Vector& atb) {
  const double norm = r.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("expand_basis: zero residual");
  const Vector v = r / norm;
  state.basis.append(v);
  const Index k = state.f.size();
  state.f.conservativeResize(k + 1);
  state.f(k) = -v.dot(atb);
  state.y.conservativeResize(k + 1);
  state.y(k) = 0.0;
}

namespace {

SolveResult solve_impl(const BvlsProblem& problem, const SolverConfig& config,
                       Factorization kind) {
  problem.validate();
  config.validate();
  const auto start = Clock::now();
  const LinearOperator& a = *problem.a;
  const Index n = a.cols();
  const Preconditioner* precond = config.preconditioner.get();
  if (precond && precond->order() != n) {
    throw std::invalid_argument("solve: preconditioner order does not match the problem");
  }
  const Index maxit_outer = config.maxit_outer > 0 ? config.maxit_outer : n + 10;

  const ShiftedProblem shifted = shift_problem(problem);
  const Vector atb = a.apply_adjoint(shifted.b);

  SolveResult result;
  result.lambda = Vector::Zero(n);
  result.mu = Vector::Zero(n);
  result.x = shifted.shift;

  Vector r = precond ? precond->solve(-atb) : Vector(-atb);
  const double r0norm = r.norm();
  result.history.r0_norm = r0norm;
  if (r0norm == 0.0) {
    result.history.termination = Termination::residual_tol;
    return result;
  }

  SolverState state;
  state.basis = ColumnBasis(n);
  state.f = Vector(0);
  state.y = Vector(0);
  FactorPolicy factor(kind, a.rows());

  // first basis vector and its 1 x 1 factor
  {
    const Vector v = r / r0norm;
    if (!factor.append(a, state.basis.view(), v, config.posdef_eps, state.factor)) {
      result.history.termination = Termination::posdef_lost;
      return result;
    }
    expand_basis(state, r, atb);
  }

  Vector x_shifted;
  Vector ax;
  QpasResult inner;

  auto inner_solve = [&](Index cap, bool warm) {
    const ProjectedBounds bounds(state.basis.view(), shifted.lower, shifted.upper);
    const QpProblem qp{state.factor, state.f, bounds};
    QpasOptions opts;
    opts.max_iterations = cap;
    opts.recurrence = config.recurrence;
    opts.measure_drift = config.measure_drift;
    const Vector zero = Vector::Zero(state.y.size());
    if (!warm) {
      inner = qpas_solve(qp, zero, {}, opts);
    } else {
      try {
        inner = qpas_solve(qp, state.y, state.working, opts);
      } catch (const InfeasibleStartError&) {
        // rounding pushed the carried-over point off a bound; y = 0 is always
        // feasible because the shifted bounds bracket zero
        inner = qpas_solve(qp, zero, {}, opts);
      }
    }
    state.y = inner.y;
    state.working = inner.working;
    result.max_cx_drift = std::max(result.max_cx_drift, inner.cx_drift);
    auto [lambda, mu] = scatter_multipliers(state.working, inner.multipliers, n);
    result.lambda = std::move(lambda);
    result.mu = std::move(mu);
    x_shifted = state.basis.view() * state.y;
    ax = a.apply(x_shifted);
    Vector raw = a.apply_adjoint(ax - shifted.b) - result.lambda + result.mu;
    r = precond ? precond->solve(raw) : raw;
  };

  // an exit under the inner cap is feasible and stationary but may carry
  // negative multipliers; the returned iterate must be optimal on its subspace
  auto polish = [&](IterationRecord& record) {
    if (inner.terminated_by == QpasTermination::optimal) return;
    inner_solve(kUnlimited, true);
    record.inner_iters += inner.inner_iterations;
    record.resnorm = r.norm();
    record.objective = 0.5 * (ax - shifted.b).squaredNorm();
    record.ws_size = static_cast<Index>(state.working.size());
  };

  auto finish = [&](Termination why) {
    result.history.termination = why;
    result.x = x_shifted + shifted.shift;
    if (config.keep_trace) {
      result.trace.basis = state.basis.view();
      result.trace.factor = state.factor.dense();
      if (kind == Factorization::gram_schmidt) result.trace.gs_u = factor.u();
    }
    return result;
  };

  for (Index iter = 1;; ++iter) {
    inner_solve(config.maxit_inner, config.warm_start);

    IterationRecord record;
    record.k = iter;
    record.resnorm = r.norm();
    record.objective = 0.5 * (ax - shifted.b).squaredNorm();
    record.inner_iters = inner.inner_iterations;
    record.ws_size = static_cast<Index>(state.working.size());

    StopDecision decision = check_stop(record.resnorm, r0norm, config, false, iter, maxit_outer);
    if (decision == StopDecision::residual_tol && inner.terminated_by != QpasTermination::optimal) {
      polish(record);
      decision = check_stop(record.resnorm, r0norm, config, false, iter, maxit_outer);
    }
    if (decision != StopDecision::keep_going) polish(record);

    if (config.keep_trace) {
      result.trace.coefficients.push_back(state.y);
      result.trace.step_norms.push_back(inner.step_norm);
      result.trace.inner_exits.push_back(inner.terminated_by);
    }

    record.ms = elapsed_ms(start);
    result.history.records.push_back(record);

    if (decision == StopDecision::residual_tol) return finish(Termination::residual_tol);
    if (decision == StopDecision::maxit) return finish(Termination::maxit);

    const Vector v = r / record.resnorm;
    const bool ok = factor.append(a, state.basis.view(), v, config.posdef_eps, state.factor);
    if (!ok) {
      polish(result.history.records.back());
      if (config.keep_trace) result.trace.coefficients.back() = state.y;
      return finish(Termination::posdef_lost);
    }
    expand_basis(state, r, atb);
  }
}

}  // namespace

SolveResult solve_cholesky(const BvlsProblem& problem, const SolverConfig& config) {
  return solve_impl(problem, config, Factorization::cholesky);
}

SolveResult solve_gram_schmidt(const BvlsProblem& problem, const SolverConfig& config) {
  return solve_impl(problem, config, Factorization::gram_schmidt);
}

SolveResult solve(const BvlsProblem& problem, const SolverConfig& config) {
  return solve_impl(problem, config, config.factorization);
}

}  // namespace resqpass
