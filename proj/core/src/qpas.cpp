#include "resqpass/qpas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace resqpass {

namespace {

// C_i p at or below this fraction of max_j ||C_j|| ||p|| counts as tangent, not
// blocking. Rows that are numerically zero never block.
constexpr double kTangentTol = 1e-13;
// ||p|| at or below this fraction of 1 + ||x|| + ||z|| is a zero step.
constexpr double kZeroStepTol = 1e-10;


void erase_column(Matrix& m, Index col) {
  const Index cols = m.cols();
  for (Index c = col; c + 1 < cols; ++c) m.col(c) = m.col(c + 1);
  m.conservativeResize(Eigen::NoChange, cols - 1);
}

void append_column(Matrix& m, const Vector& v) {
  m.conservativeResize(v.size(), m.cols() + 1);
  m.col(m.cols() - 1) = v;
}

// One correction pass so that C_W p vanishes to working precision: with
// C_W Y = R^T R, p <- p - Y d and lambda <- lambda + d for R^T R d = C_W p.
void refine_direction(const QpasState& state, const ConstraintSet& constraints,
                      SearchDirection& dir) {
  if (state.working.empty()) return;
  Vector cwp(static_cast<Index>(state.working.size()));
  for (std::size_t pos = 0; pos < state.working.size(); ++pos) {
    cwp(static_cast<Index>(pos)) = constraints.row(state.working[pos]).dot(dir.p);
  }
  const Matrix& r = state.qr.r();
  const Vector d = upper_solve(r, upper_transpose_solve(r, cwp));
  dir.p -= state.Y * d;
  dir.multipliers += d;
}

}  // namespace

DenseConstraints::DenseConstraints(Matrix c, Vector d) : c_(std::move(c)), d_(std::move(d)) {
  if (c_.rows() != d_.size()) throw std::invalid_argument("DenseConstraints: row count mismatch");
  norms_ = c_.rowwise().norm();
}

QpasState make_qpas_state(const QpProblem& problem, const Vector& x0, std::vector<Index> w0,
                          double feasibility_tol) {
  const ConstraintSet& constraints = problem.constraints;
  const Index k = problem.factor.order();
  if (problem.f.size() != k || constraints.dim() != k || x0.size() != k) {
    throw std::invalid_argument("qpas: dimension mismatch between L, f, C and x0");
  }
  const Index t = constraints.count();

  QpasState state;
  state.x = x0;
  state.z = backward_solve(problem.factor, forward_solve(problem.factor, problem.f));
  state.cx = constraints.apply(x0);
  state.in_working.assign(static_cast<std::size_t>(t), 0);
  state.X = Matrix(k, 0);
  state.Y = Matrix(k, 0);
  state.qr = QRFactors(k);
  state.q = Vector(0);

  // C_i x0 carries rounding of order eps ||C_i|| ||x0||, so the tolerance scales with it
  const double x0_norm = x0.norm();
  auto start_tol = [&](Index i, double d) {
    return feasibility_tol * std::max({1.0, std::abs(d), constraints.row_norm(i) * x0_norm});
  };
  for (Index i = 0; i < t; ++i) {
    const double d = constraints.bound(i);
    if (std::isfinite(d) && state.cx(i) > d + start_tol(i, d)) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "qpas: initial point violates constraint %ld by %.3e (tolerance %.3e)",
                    static_cast<long>(i), state.cx(i) - d, start_tol(i, d));
      throw InfeasibleStartError(msg);
    }
  }
  if (static_cast<Index>(w0.size()) > k) {
    throw WorkingSetFullError("qpas: initial working set larger than the problem dimension");
  }
  for (Index j : w0) {
    if (j < 0 || j >= t) throw std::out_of_range("qpas: working-set index out of range");
    if (state.in_working[j]) throw std::invalid_argument("qpas: duplicate working-set index");
    const double d = constraints.bound(j);
    if (!std::isfinite(d) || std::abs(state.cx(j) - d) > start_tol(j, d)) {
      throw InfeasibleStartError("qpas: working-set row " + std::to_string(j) +
                                 " is not active at the initial point");
    }
    // A row that became numerically dependent on the rows before it stays
    // active at x0 without being in the working set.
    if (working_dependent(state, problem, j)) continue;
    add_constraint(state, problem, j);
  }
  // warm start: q = C_W (x0 + z)
  for (std::size_t pos = 0; pos < state.working.size(); ++pos) {
    const Index j = state.working[pos];
    state.q(static_cast<Index>(pos)) = state.cx(j) + constraints.row(j).dot(state.z);
  }
  return state;
}

void add_constraint(QpasState& state, const QpProblem& problem, Index j) {
  const Index k = problem.factor.order();
  if (j < 0 || j >= static_cast<Index>(state.in_working.size())) {
    throw std::out_of_range("add_constraint: index out of range");
  }
  if (state.in_working[j]) throw std::invalid_argument("add_constraint: row already in working set");
  if (static_cast<Index>(state.working.size()) >= k) {
    throw WorkingSetFullError("add_constraint: working set already has k rows");
  }
  const Vector c_j = problem.constraints.row(j);
  const Vector dx = forward_solve(problem.factor, c_j);
  const Vector dy = backward_solve(problem.factor, dx);
  state.qr.append_column(dx);  // throws before any other member changes

  append_column(state.X, dx);
  append_column(state.Y, dy);
  const Index pos = state.q.size();
  state.q.conservativeResize(pos + 1);
  state.q(pos) = problem.constraints.bound(j) + c_j.dot(state.z);
  state.working.push_back(j);
  state.in_working[j] = 1;
}

bool working_dependent(const QpasState& state, const QpProblem& problem, Index j) {
  const Vector dx = forward_solve(problem.factor, problem.constraints.row(j));
  return state.qr.is_dependent(dx);
}

void remove_constraint(QpasState& state, Index j) {
  const auto it = std::find(state.working.begin(), state.working.end(), j);
  if (it == state.working.end()) throw std::invalid_argument("remove_constraint: row not in working set");
  const Index pos = static_cast<Index>(it - state.working.begin());

  erase_column(state.X, pos);
  erase_column(state.Y, pos);
  state.qr.remove_column(pos);
  const Index size = state.q.size();
  for (Index i = pos; i + 1 < size; ++i) state.q(i) = state.q(i + 1);
  state.q.conservativeResize(size - 1);
  state.working.erase(it);
  state.in_working[j] = 0;
}

SearchDirection compute_direction(const QpasState& state) {
  SearchDirection dir;
  if (state.working.empty()) {
    dir.p = -(state.x + state.z);
    dir.multipliers = Vector(0);
    return dir;
  }
  // R^T R lambda = -q
  const Matrix& r = state.qr.r();
  dir.multipliers = upper_solve(r, upper_transpose_solve(r, -state.q));
  dir.p = -(state.x + state.z + state.Y * dir.multipliers);
  return dir;
}

StepLength step_length(const ConstraintSet& constraints, const Vector& cx, const Vector& cp,
                       const std::vector<char>& in_working, double p_norm) {
  StepLength out;
  double best = std::numeric_limits<double>::infinity();
  const Index t = constraints.count();
  double max_row = 0.0;
  for (Index i = 0; i < t; ++i) max_row = std::max(max_row, constraints.row_norm(i));
  const double floor = kTangentTol * max_row * p_norm;
  for (Index i = 0; i < t; ++i) {
    if (in_working[i]) continue;
    const double d = constraints.bound(i);
    if (!std::isfinite(d)) continue;
    const double cpi = cp(i);
    if (!(cpi > floor)) continue;
    const double ratio = std::max(0.0, d - cx(i)) / cpi;
    if (ratio < best) {
      best = ratio;
      out.blocking = i;
    }
  }
  if (best < 1.0) {
    out.alpha = best;
  } else {
    out.alpha = 1.0;
    out.blocking.reset();
  }
  return out;
}

Vector recursive_cx_update(const Vector& cx, const Vector& cp, double alpha) {
  return cx + alpha * cp;
}

QpasResult qpas_solve(const QpProblem& problem, const Vector& x0, std::vector<Index> w0,
                      const QpasOptions& options) {
  QpasState state = make_qpas_state(problem, x0, std::move(w0), options.feasibility_tol);
  const ConstraintSet& constraints = problem.constraints;
  const Index k = problem.factor.order();
  const Index hard_cap = 10 * (k + constraints.count());

  QpasResult result;
  bool after_full_step = false;

  auto finish = [&](const SearchDirection& dir, double p_norm, QpasTermination why) {
    result.y = state.x;
    result.working = state.working;
    result.multipliers = dir.multipliers;
    result.step_norm = p_norm;
    result.terminated_by = why;
    return result;
  };

  while (true) {
    ++result.loop_iterations;
    SearchDirection dir = compute_direction(state);
    refine_direction(state, constraints, dir);
    const double p_norm = dir.p.norm();
    const double scale = 1.0 + state.x.norm() + state.z.norm();
    const bool zero_step = after_full_step || p_norm <= kZeroStepTol * scale;
    after_full_step = false;

    if (zero_step) {
      if (state.working.empty()) return finish(dir, p_norm, QpasTermination::optimal);
      Index drop_pos = 0;
      for (Index pos = 1; pos < dir.multipliers.size(); ++pos) {
        const double a = dir.multipliers(pos);
        const double b = dir.multipliers(drop_pos);
        if (a < b || (a == b && state.working[pos] < state.working[drop_pos])) drop_pos = pos;
      }
      if (dir.multipliers(drop_pos) >= -options.multiplier_tol) {
        return finish(dir, p_norm, QpasTermination::optimal);
      }
      if (result.inner_iterations >= options.max_iterations ||
          result.loop_iterations >= hard_cap) {
        return finish(dir, p_norm, QpasTermination::iteration_cap);
      }
      remove_constraint(state, state.working[drop_pos]);
      ++result.inner_iterations;
      continue;
    }

    if (result.loop_iterations >= hard_cap) {
      // cycling guard; the point is feasible but not stationary
      return finish(dir, p_norm, QpasTermination::iteration_cap);
    }

    Vector cp = constraints.apply(dir.p);
    StepLength step = step_length(constraints, state.cx, cp, state.in_working, p_norm);
    // A blocking row that is numerically dependent on the working set moves
    // with it; treat it as tangent and look for the next one.
    while (step.blocking && working_dependent(state, problem, *step.blocking)) {
      cp(*step.blocking) = 0.0;
      step = step_length(constraints, state.cx, cp, state.in_working, p_norm);
    }
    state.x += step.alpha * dir.p;
    if (options.recurrence) {
      state.cx = recursive_cx_update(state.cx, cp, step.alpha);
    } else {
      state.cx = constraints.apply(state.x);
    }
    if (options.measure_drift) {
      const Vector direct = constraints.apply(state.x);
      result.cx_drift = std::max(result.cx_drift, (state.cx - direct).lpNorm<Eigen::Infinity>());
    }

    if (step.blocking) {
      add_constraint(state, problem, *step.blocking);
      ++result.inner_iterations;
    } else {
      after_full_step = true;
    }
  }
}

}  // namespace resqpass
