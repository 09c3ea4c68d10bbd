#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "resqpass/qpas.hpp"
#include "test_support.hpp"

namespace resqpass {
namespace {

using testing::max_abs;
using testing::random_matrix;
using testing::random_spd;
using testing::random_vector;

struct DenseQp {
  Matrix g;
  LowerTriangular factor;
  Vector f;
  DenseConstraints constraints;

  DenseQp(Matrix g_, Vector f_, Matrix c, Vector d)
      : g(std::move(g_)),
        factor(Matrix(g.llt().matrixL())),
        f(std::move(f_)),
        constraints(std::move(c), std::move(d)) {}

  QpProblem problem() const { return {factor, f, constraints}; }
  double objective(const Vector& y) const { return 0.5 * y.dot(g * y) + f.dot(y); }
};

struct OracleResult {
  Vector y;
  std::vector<Index> active;
};

// Tries every subset of at most k rows as the equality set, keeps points that
// are feasible with nonnegative multipliers, and returns the best objective.
OracleResult enumerate_qp(const DenseQp& qp, const Matrix& c, const Vector& d) {
  const Index k = qp.g.rows();
  const Index t = c.rows();
  OracleResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (Index mask = 0; mask < (Index{1} << t); ++mask) {
    std::vector<Index> rows;
    for (Index i = 0; i < t; ++i) {
      if (mask & (Index{1} << i)) rows.push_back(i);
    }
    const Index w = static_cast<Index>(rows.size());
    if (w > k) continue;
    Matrix kkt = Matrix::Zero(k + w, k + w);
    Vector rhs(k + w);
    kkt.topLeftCorner(k, k) = qp.g;
    rhs.head(k) = -qp.f;
    for (Index r = 0; r < w; ++r) {
      kkt.block(0, k + r, k, 1) = c.row(rows[r]).transpose();
      kkt.block(k + r, 0, 1, k) = c.row(rows[r]);
      rhs(k + r) = d(rows[r]);
    }
    const Eigen::FullPivLU<Matrix> lu(kkt);
    if (lu.rank() < k + w) continue;
    const Vector sol = lu.solve(rhs);
    const Vector y = sol.head(k);
    const Vector lambda = sol.tail(w);
    if (((c * y - d).array() > 1e-10).any()) continue;
    if (w > 0 && lambda.minCoeff() < -1e-10) continue;
    const double obj = qp.objective(y);
    if (obj < best_obj - 1e-12) {
      best_obj = obj;
      best.y = y;
      best.active = rows;
    }
  }
  return best;
}

TEST(Qpas, UnconstrainedMinimum) {
  const DenseQp qp(Matrix::Identity(2, 2), Vector::Constant(2, -1.0), Matrix(0, 2), Vector(0));
  const QpasResult r = qpas_solve(qp.problem(), Vector::Zero(2), {});
  EXPECT_LE((r.y - Vector::Ones(2)).norm(), 1e-14);
  EXPECT_TRUE(r.working.empty());
  EXPECT_EQ(r.terminated_by, QpasTermination::optimal);
}

TEST(Qpas, SingleActiveBound) {
  const DenseQp qp(Matrix::Identity(1, 1), Vector::Constant(1, -2.0), Matrix::Ones(1, 1),
                   Vector::Ones(1));
  const QpasResult r = qpas_solve(qp.problem(), Vector::Zero(1), {});
  EXPECT_NEAR(r.y(0), 1.0, 1e-14);
  ASSERT_EQ(r.working, std::vector<Index>{0});
  EXPECT_NEAR(r.multipliers(0), 1.0, 1e-14);
  EXPECT_EQ(r.inner_iterations, 1);
}

TEST(Qpas, MatchesEnumerationOnBoxes) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 60; ++trial) {
    const Index k = 1 + static_cast<Index>(gen() % 6);
    const Matrix g = random_spd(k, 1000 + static_cast<std::uint64_t>(trial));
    const Vector f = 3.0 * random_vector(k, 2000 + static_cast<std::uint64_t>(trial));
    const Vector width = random_vector(k, 3000 + static_cast<std::uint64_t>(trial)).cwiseAbs();
    Matrix c(2 * k, k);
    c << -Matrix::Identity(k, k), Matrix::Identity(k, k);
    Vector d(2 * k);
    d << width, width;
    const DenseQp qp(g, f, c, d);

    const QpasResult r = qpas_solve(qp.problem(), Vector::Zero(k), {});
    const OracleResult oracle = enumerate_qp(qp, c, d);
    ASSERT_EQ(r.terminated_by, QpasTermination::optimal);
    EXPECT_LE((r.y - oracle.y).norm(), 1e-8) << trial;
    std::vector<Index> working = r.working;
    std::sort(working.begin(), working.end());
    EXPECT_EQ(working, oracle.active) << trial;
    if (r.multipliers.size() > 0) {
      EXPECT_GE(r.multipliers.minCoeff(), -1e-9);
    }
  }
}

TEST(Qpas, MatchesEnumerationOnGeneralRows) {
  for (int trial = 0; trial < 40; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const Index k = 2 + trial % 3;
    const Index t = 12;
    const Matrix g = random_spd(k, 4000 + seed);
    const Vector f = 4.0 * random_vector(k, 5000 + seed);
    const Matrix c = random_matrix(t, k, 6000 + seed);
    const Vector d = random_vector(t, 7000 + seed).cwiseAbs() + Vector::Constant(t, 0.1);
    const DenseQp qp(g, f, c, d);

    const QpasResult r = qpas_solve(qp.problem(), Vector::Zero(k), {});
    const OracleResult oracle = enumerate_qp(qp, c, d);
    ASSERT_EQ(r.terminated_by, QpasTermination::optimal);
    EXPECT_LE((r.y - oracle.y).norm(), 1e-8) << trial;
    EXPECT_LE((c * r.y - d).maxCoeff(), 1e-9);
    // stationarity: G y + f + C_W^T lambda = 0
    Vector grad = g * r.y + f;
    for (std::size_t pos = 0; pos < r.working.size(); ++pos) {
      grad += r.multipliers(static_cast<Index>(pos)) * c.row(r.working[pos]).transpose();
    }
    EXPECT_LE(grad.norm(), 1e-8 * (1.0 + f.norm()));
  }
}

TEST(Qpas, CapExitIsStationaryOnWorkingSet) {
  const Index k = 6;
  const Matrix g = random_spd(k, 91);
  const Vector f = 10.0 * random_vector(k, 92);
  Matrix c(2 * k, k);
  c << -Matrix::Identity(k, k), Matrix::Identity(k, k);
  const Vector d = Vector::Constant(2 * k, 0.1);
  const DenseQp qp(g, f, c, d);
  const QpasResult full = qpas_solve(qp.problem(), Vector::Zero(k), {});
  ASSERT_GE(full.inner_iterations, 3);

  for (Index cap = 1; cap < full.inner_iterations; ++cap) {
    QpasOptions options;
    options.max_iterations = cap;
    const QpasResult r = qpas_solve(qp.problem(), Vector::Zero(k), {}, options);
    EXPECT_LE((c * r.y - d).maxCoeff(), 1e-9);
    EXPECT_LE(r.step_norm, 1e-8);
    Vector grad = g * r.y + f;
    for (std::size_t pos = 0; pos < r.working.size(); ++pos) {
      grad += r.multipliers(static_cast<Index>(pos)) * c.row(r.working[pos]).transpose();
    }
    EXPECT_LE(grad.norm(), 1e-8 * (1.0 + f.norm())) << cap;
    if (r.terminated_by == QpasTermination::iteration_cap) {
      EXPECT_GE(r.inner_iterations, cap);
    }
  }
}

TEST(Qpas, WarmStartFromOptimumTakesNoIterations) {
  const Index k = 5;
  const Matrix g = random_spd(k, 81);
  const Vector f = 6.0 * random_vector(k, 82);
  Matrix c(2 * k, k);
  c << -Matrix::Identity(k, k), Matrix::Identity(k, k);
  const DenseQp qp(g, f, c, Vector::Constant(2 * k, 0.2));
  const QpasResult cold = qpas_solve(qp.problem(), Vector::Zero(k), {});
  const QpasResult warm = qpas_solve(qp.problem(), cold.y, cold.working);
  EXPECT_EQ(warm.inner_iterations, 0);
  EXPECT_LE((warm.y - cold.y).norm(), 1e-12);
}

TEST(Qpas, InfeasibleStartRejected) {
  const DenseQp qp(Matrix::Identity(1, 1), Vector::Zero(1), Matrix::Ones(1, 1), Vector::Ones(1));
  EXPECT_THROW(qpas_solve(qp.problem(), Vector::Constant(1, 2.0), {}), InfeasibleStartError);
  EXPECT_THROW(qpas_solve(qp.problem(), Vector::Zero(1), {0}), InfeasibleStartError);
}

TEST(Qpas, StartToleranceScalesWithRowAndPoint) {
  // C x0 = 1 + 1e-8 against the bound 1: rounding-sized for ||C|| ||x0|| = 100
  Matrix c(1, 2);
  c << 1.0, 1.0;
  const DenseQp qp(Matrix::Identity(2, 2), Vector::Zero(2), c, Vector::Ones(1));
  const Vector x0 = (Vector(2) << 50.0 + 1e-8, -49.0).finished();
  EXPECT_NO_THROW(make_qpas_state(qp.problem(), x0, {0}));
  const Vector far = (Vector(2) << 50.0 + 1e-6, -49.0).finished();
  EXPECT_THROW(make_qpas_state(qp.problem(), far, {}), InfeasibleStartError);
}

TEST(Qpas, OversizedWorkingSetRejected) {
  Matrix c(2, 1);
  c << 1, -1;
  const DenseQp qp(Matrix::Identity(1, 1), Vector::Zero(1), c, Vector::Zero(2));
  EXPECT_THROW(qpas_solve(qp.problem(), Vector::Zero(1), {0, 1}), WorkingSetFullError);
}

TEST(StepLength, FullStepWithoutBlockingRows) {
  const DenseConstraints cs(Matrix::Ones(1, 1), Vector::Ones(1));
  const StepLength s = step_length(cs, Vector::Zero(1), Vector::Constant(1, -1.0), {0}, 1.0);
  EXPECT_EQ(s.alpha, 1.0);
  EXPECT_FALSE(s.blocking);
}

TEST(StepLength, HalfStepToBound) {
  const DenseConstraints cs(Matrix::Ones(1, 1), Vector::Constant(1, 0.5));
  const StepLength s = step_length(cs, Vector::Zero(1), Vector::Ones(1), {0}, 1.0);
  EXPECT_DOUBLE_EQ(s.alpha, 0.5);
  ASSERT_TRUE(s.blocking);
  EXPECT_EQ(*s.blocking, 0);
}

TEST(StepLength, TiesGoToSmallestIndexAndInfiniteRowsNeverBlock) {
  Matrix c(3, 1);
  c << 1, 1, 1;
  const Vector d = (Vector(3) << std::numeric_limits<double>::infinity(), 0.5, 0.5).finished();
  const DenseConstraints cs(c, d);
  const StepLength s = step_length(cs, Vector::Zero(3), Vector::Ones(3), {0, 0, 0}, 1.0);
  ASSERT_TRUE(s.blocking);
  EXPECT_EQ(*s.blocking, 1);
}

TEST(StepLength, RandomStepsStayFeasible) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const Matrix c = random_matrix(10, 4, 100 + seed);
    const Vector x = 0.1 * random_vector(4, 200 + seed);
    const Vector d = c * x + random_vector(10, 300 + seed).cwiseAbs();
    const Vector p = 5.0 * random_vector(4, 400 + seed);
    const DenseConstraints cs(c, d);
    const StepLength s = step_length(cs, c * x, c * p, std::vector<char>(10, 0), p.norm());
    const Vector cx_new = c * (x + s.alpha * p);
    EXPECT_LE((cx_new - d).maxCoeff(), 1e-12);
    if (s.blocking) {
      EXPECT_NEAR(cx_new(*s.blocking), d(*s.blocking), 1e-12);
    }
  }
}

TEST(Constraints, AddRemoveRoundTripAndDenseOracle) {
  const Index k = 5;
  const Matrix g = random_spd(k, 11);
  const Matrix c = random_matrix(6, k, 12);
  const DenseQp qp(g, random_vector(k, 13), c, Vector::Constant(6, 1.0));
  QpasState state = make_qpas_state(qp.problem(), Vector::Zero(k), {});
  add_constraint(state, qp.problem(), 2);
  add_constraint(state, qp.problem(), 4);
  const Matrix x_before = state.X;
  const Matrix y_before = state.Y;
  const Matrix rtr_before = state.qr.r().transpose() * state.qr.r();

  Matrix cw(2, k);
  cw << c.row(2), c.row(4);
  const Matrix expected = cw * g.inverse() * cw.transpose();
  EXPECT_LE(max_abs(rtr_before - expected), 1e-9 * max_abs(expected));
  EXPECT_LE(max_abs(state.Y - g.llt().solve(cw.transpose())), 1e-10);

  add_constraint(state, qp.problem(), 0);
  remove_constraint(state, 0);
  EXPECT_LE(max_abs(state.X - x_before), 1e-10);
  EXPECT_LE(max_abs(state.Y - y_before), 1e-10);
  EXPECT_LE(max_abs(state.qr.r().transpose() * state.qr.r() - rtr_before), 1e-10);

  remove_constraint(state, 2);
  remove_constraint(state, 4);
  EXPECT_EQ(state.X.cols(), 0);
  EXPECT_EQ(state.qr.cols(), 0);
  EXPECT_THROW(remove_constraint(state, 4), std::invalid_argument);
}

TEST(Constraints, IdentityFactorColumnsEqualRows) {
  const Matrix c = random_matrix(3, 3, 21);
  const DenseQp qp(Matrix::Identity(3, 3), Vector::Zero(3), c, Vector::Ones(3));
  QpasState state = make_qpas_state(qp.problem(), Vector::Zero(3), {});
  add_constraint(state, qp.problem(), 1);
  EXPECT_LE((state.X.col(0) - c.row(1).transpose()).norm(), 1e-15);
  EXPECT_LE((state.Y.col(0) - c.row(1).transpose()).norm(), 1e-15);
}

TEST(Constraints, WarmStateMatchesIncrementalState) {
  const Index k = 4;
  const Matrix g = random_spd(k, 31);
  const Vector f = random_vector(k, 32);
  Matrix c(2 * k, k);
  c << -Matrix::Identity(k, k), Matrix::Identity(k, k);
  const Vector d = Vector::Constant(2 * k, 0.5);
  const DenseQp qp(g, f, c, d);
  Vector x = Vector::Zero(k);
  x(0) = -0.5;
  x(2) = 0.5;
  const QpasState warm = make_qpas_state(qp.problem(), x, {0, k + 2});

  QpasState incremental = make_qpas_state(qp.problem(), x, {});
  add_constraint(incremental, qp.problem(), 0);
  add_constraint(incremental, qp.problem(), k + 2);
  const SearchDirection a = compute_direction(warm);
  const SearchDirection b = compute_direction(incremental);
  EXPECT_LE((a.p - b.p).norm(), 1e-10);
  EXPECT_LE((a.multipliers - b.multipliers).norm(), 1e-10);
}

TEST(Recurrence, TrivialCases) {
  const Vector cx = random_vector(5, 1);
  EXPECT_EQ(recursive_cx_update(cx, random_vector(5, 2), 0.0), cx);
  EXPECT_EQ(recursive_cx_update(cx, -cx, 1.0), Vector::Zero(5));
}

TEST(Recurrence, DriftAfterManySteps) {
  const Matrix c = random_matrix(40, 8, 51);
  Vector x = Vector::Zero(8);
  Vector cx = c * x;
  std::mt19937_64 gen(52);
  std::uniform_real_distribution<double> u;
  for (int step = 0; step < 100; ++step) {
    const Vector p = random_vector(8, 1000 + static_cast<std::uint64_t>(step));
    const double alpha = u(gen);
    x += alpha * p;
    cx = recursive_cx_update(cx, c * p, alpha);
  }
  EXPECT_LT((cx - c * x).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Recurrence, SolverDriftStaysSmall) {
  const Index k = 6;
  Matrix c(2 * k, k);
  c << -Matrix::Identity(k, k), Matrix::Identity(k, k);
  const DenseQp qp(random_spd(k, 61), 10.0 * random_vector(k, 62), c, Vector::Constant(2 * k, 0.3));
  QpasOptions options;
  options.recurrence = true;
  options.measure_drift = true;
  const QpasResult rec = qpas_solve(qp.problem(), Vector::Zero(k), {}, options);
  const QpasResult direct = qpas_solve(qp.problem(), Vector::Zero(k), {});
  EXPECT_LT(rec.cx_drift, 1e-10);
  EXPECT_LE((rec.y - direct.y).norm(), 1e-10);
}

}  // namespace
}  // namespace resqpass
