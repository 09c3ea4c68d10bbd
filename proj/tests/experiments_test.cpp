#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include <Eigen/Cholesky>

#include "resqpass/experiments.hpp"
#include "resqpass/io.hpp"

namespace resqpass {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("resqpass_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Rng, DeterministicPerSeed) {
  RngStream a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
}

TEST(Rng, UniformAndNormalMoments) {
  RngStream rng(7);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.01);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  EXPECT_THROW(rng.uniform_index(0), std::invalid_argument);
}

double fill(const BvlsProblem& p) {
  const auto& a = static_cast<const SparseMatrixCSR&>(*p.a);
  return static_cast<double>(a.nnz()) / static_cast<double>(a.rows() * a.cols());
}

TEST(GenRandomLs, FillAndShape) {
  const BvlsProblem p = gen_random_ls(200, 100, 0.04, 1);
  EXPECT_EQ(p.rows(), 200);
  EXPECT_EQ(p.cols(), 100);
  EXPECT_NEAR(fill(p), 0.04, 0.004);
  EXPECT_TRUE(std::isinf(p.lower(0)) && p.lower(0) < 0.0);
  EXPECT_TRUE(std::isinf(p.upper(0)) && p.upper(0) > 0.0);
}

TEST(GenRandomLs, ThresholdedModeFill) {
  const BvlsProblem p = gen_random_ls(200, 100, 0.04, 2, LsMode::s41);
  EXPECT_NEAR(fill(p), 0.0398, 0.00398);
  const auto& a = static_cast<const SparseMatrixCSR&>(*p.a);
  for (double v : a.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 0.1);
  }
}

TEST(GenRandomLs, RejectsBadInput) {
  EXPECT_THROW(gen_random_ls(10, 10, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(gen_random_ls(10, 10, 1.5, 1), std::invalid_argument);
  EXPECT_THROW(gen_random_ls(1, 1, 1e-12, 1), std::invalid_argument);
}

TEST(GenRandomLs, SameSeedSameInstance) {
  const BvlsProblem a = gen_random_ls(50, 30, 0.1, 9);
  const BvlsProblem b = gen_random_ls(50, 30, 0.1, 9);
  EXPECT_EQ(a.b, b.b);
  EXPECT_EQ(static_cast<const SparseMatrixCSR&>(*a.a).values(),
            static_cast<const SparseMatrixCSR&>(*b.a).values());
}

TEST(GenTuneable, UnconstrainedWhenNoBounds) {
  const BvlsProblem p = gen_tuneable(100, 60, 0.04, 0, 3);
  EXPECT_TRUE(p.lower.array().isInf().all());
  EXPECT_TRUE(p.upper.array().isInf().all());
  for (double v : static_cast<const SparseMatrixCSR&>(*p.a).values()) EXPECT_EQ(v, 1.0);
  EXPECT_THROW(gen_tuneable(10, 5, 0.5, 6, 1), std::invalid_argument);
}

TEST(GenTuneable, BoundsCutNonzeroEntries) {
  const BvlsProblem p = gen_tuneable(100, 60, 0.04, 16, 3);
  for (Index i = 0; i < 16; ++i) {
    const double w = p.upper(i);
    EXPECT_EQ(p.lower(i), -w);
    EXPECT_TRUE(std::abs(w - 0.01) < 1e-15 || std::abs(w - 0.51) < 1e-15) << w;
  }
  EXPECT_TRUE(p.lower.tail(44).array().isInf().all());
}

TEST(GenNmf, ShapesAndNonnegativity) {
  const NmfInstance inst = gen_nmf(30, 20, 4, 0.1, 1);
  EXPECT_EQ(inst.a.rows(), 30);
  EXPECT_EQ(inst.a.cols(), 20);
  EXPECT_GE(inst.a.minCoeff(), 0.0);
  EXPECT_EQ(inst.x0.rows(), 30);
  EXPECT_EQ(inst.x0.cols(), 4);
  EXPECT_THROW(gen_nmf(3, 2, 3, 0.1, 1), std::invalid_argument);
}

TEST(Als, ExactFactorizationIsApproached) {
  const NmfInstance inst = gen_nmf(12, 10, 2, 0.0, 4);
  const AlsResult r = run_als(inst, 10, SolverConfig{});
  ASSERT_EQ(r.objectives.size(), 20U);
  for (std::size_t i = 1; i < r.objectives.size(); ++i) {
    EXPECT_LE(r.objectives[i], r.objectives[i - 1] * (1.0 + 1e-9) + 1e-12) << i;
  }
  EXPECT_LT(r.objectives.back(), 0.05 * inst.a.norm());
  EXPECT_GE(r.x.minCoeff(), -1e-10);
  EXPECT_GE(r.y.minCoeff(), -1e-10);
}

TEST(Contact, UnconstrainedVariantMatchesDenseSolve) {
  for (Index g : {3, 6, 8}) {
    ContactInstance inst = gen_contact(g, 4.0, std::numeric_limits<double>::infinity());
    inst.problem.lower.setConstant(-std::numeric_limits<double>::infinity());
    SolverConfig c;
    c.tol = 1e-12;
    const SolveResult r = solve(inst.problem, c);
    const Matrix a = inst.a->to_dense();
    const Vector expected = a.llt().solve(inst.problem.b);
    EXPECT_LE((r.x - expected).lpNorm<Eigen::Infinity>(), 1e-8 * expected.lpNorm<Eigen::Infinity>()) << g;
  }
}

TEST(Contact, BoundsAndRhs) {
  const ContactInstance inst = gen_contact(5, 4.0, 0.1);
  EXPECT_EQ(inst.problem.b, Vector::Constant(25, 4.0));
  EXPECT_EQ(inst.problem.lower, Vector::Zero(25));
  EXPECT_EQ(inst.problem.upper, Vector::Constant(25, 0.1));
  EXPECT_THROW(gen_contact(5, 4.0, -1.0), std::invalid_argument);
}

TEST(Family, Names) {
  for (Family f : {Family::cg, Family::bvls, Family::nmf, Family::contact}) EXPECT_EQ(parse_family(to_string(f)), f);
  EXPECT_THROW(parse_family("nope"), std::invalid_argument);
}

TEST(RunExperiment, CgWritesTwoComparableHistories) {
  ExperimentSpec spec;
  spec.family = Family::cg;
  spec.m = 200;
  spec.n = 120;
  spec.seed = 1;
  const fs::path dir = scratch_dir("cg");
  const ExperimentReport report = run_experiment(spec, dir);
  ASSERT_EQ(report.runs.size(), 2U);
  for (const char* name : {"resqpass.csv", "lsqr.csv", "resqpass.json", "lsqr.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  const double a = static_cast<double>(report.runs[0].outer_iters);
  const double b = static_cast<double>(report.runs[1].outer_iters);
  EXPECT_LE(std::abs(a - b), 0.1 * b + 1.0);
  std::ifstream csv(dir / "resqpass.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, kHistoryCsvHeader);
}

TEST(RunExperiment, BvlsReachesTolerance) {
  ExperimentSpec spec;
  spec.family = Family::bvls;
  spec.i_max = 8;
  const fs::path dir = scratch_dir("bvls");
  const ExperimentReport report = run_experiment(spec, dir);
  ASSERT_EQ(report.runs.size(), 1U);
  EXPECT_EQ(report.runs[0].termination, Termination::residual_tol);
  std::ifstream json(dir / "resqpass.json");
  const std::string text((std::istreambuf_iterator<char>(json)), std::istreambuf_iterator<char>());
  for (const char* key : {"\"termination\"", "\"outer_iters\"", "\"total_inner_iters\"", "\"kkt\"", "\"wall_ms\"",
                          "\"stationarity\"", "\"max_bound_violation\"", "\"max_complementarity\"",
                          "\"min_multiplier\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(RunExperiment, SmallContactPreconditionedIsFaster) {
  ExperimentSpec spec;
  spec.family = Family::contact;
  spec.grid = 12;
  spec.config.tol = 1e-6;
  spec.config.maxit_outer = 200;
  const ExperimentReport report = run_experiment(spec, scratch_dir("contact"));
  ASSERT_EQ(report.runs.size(), 2U);
  EXPECT_EQ(report.runs[1].termination, Termination::residual_tol);
  EXPECT_LT(report.runs[1].outer_iters, report.runs[0].outer_iters);
}

TEST(RunExperiment, NmfWritesObjectiveTrace) {
  ExperimentSpec spec;
  spec.family = Family::nmf;
  spec.m = 15;
  spec.n = 10;
  spec.rank = 3;
  spec.als_iterations = 3;
  const fs::path dir = scratch_dir("nmf");
  run_experiment(spec, dir);
  EXPECT_TRUE(fs::exists(dir / "als.csv"));
  EXPECT_TRUE(fs::exists(dir / "als.json"));
}

TEST(RunExperiment, UnwritableOutputFails) {
  ExperimentSpec spec;
  spec.family = Family::bvls;
  spec.m = 40;
  spec.n = 20;
  spec.density = 0.2;
  EXPECT_ANY_THROW(run_experiment(spec, "/proc/resqpass_no_such_dir"));
}

}  // namespace
}  // namespace resqpass
