#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "resqpass/reference.hpp"
#include "resqpass/solver.hpp"

namespace resqpass {

/// SplitMix64 counter stream. Only determinism within a build is promised.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : counter_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal();
  /// Uniform on {0, ..., n - 1}.
  Index uniform_index(Index n);

 private:
  std::uint64_t counter_;
  std::optional<double> spare_;
};

enum class LsMode {
  ex24,  // normal values at Bernoulli(density) positions
  s41,   // dense normal draws, only values in (0, 0.1] kept
};

/// Unconstrained random least-squares problem with b = A x*, x* ~ N(0, I).
/// Throws std::invalid_argument for density outside (0, 1] or an empty matrix.
BvlsProblem gen_random_ls(Index m, Index n, double density, std::uint64_t seed,
                          LsMode mode = LsMode::ex24);

/// 0/1 matrix at the given density, x* with half zeros and half +-1, b = A x*.
/// The first i_max variables get bounds +-(|x*_i| / 2 + 0.01).
BvlsProblem gen_tuneable(Index m, Index n, double density, Index i_max, std::uint64_t seed);

struct NmfInstance {
  Matrix a;   // n x m
  Matrix x0;  // n x p, initial X for ALS
  Index p = 0;
};

/// A = max(X Y + noise, 0) with X, Y uniform(0, 1).
NmfInstance gen_nmf(Index n, Index m, Index p, double noise, std::uint64_t seed);

struct AlsResult {
  Matrix x;
  Matrix y;
  /// ||A - X Y||_F after each half step (Y update, then X update).
  std::vector<double> objectives;
  Index outer_iterations = 0;
  Index inner_iterations = 0;
  double wall_ms = 0.0;
  KktReport last_kkt;
  Termination last_termination = Termination::maxit;
};

enum class NnlsBackend { resqpass, projected_gradient };

/// Alternating nonnegative least squares, each half step solved as one
/// vectorized problem.
AlsResult run_als(const NmfInstance& instance, Index iterations, const SolverConfig& config,
                  NnlsBackend backend = NnlsBackend::resqpass);

struct ContactInstance {
  std::shared_ptr<const SparseMatrixCSR> a;
  BvlsProblem problem;
};

/// Laplacian with constant pressure, lower bound 0 and upper bound ubound.
ContactInstance gen_contact(Index g, double pressure, double ubound);

/// ILUT of A^T A.
std::shared_ptr<const Preconditioner> make_ilut_preconditioner(const SparseMatrixCSR& a,
                                                               double tau,
                                                               const IlutOptions& options = {});

enum class Family { cg, bvls, nmf, contact };

Family parse_family(const std::string& name);
std::string to_string(Family family);

struct ExperimentSpec {
  Family family = Family::bvls;
  Index m = 500;
  Index n = 300;
  Index grid = 30;
  Index rank = 4;
  double density = 0.04;
  Index i_max = 8;
  double noise = 0.1;
  double pressure = 4.0;
  double ubound = 0.1;
  LsMode ls_mode = LsMode::ex24;
  std::uint64_t seed = 0;
  Index als_iterations = 10;
  /// ILUT drop tolerance for the preconditioned contact run.
  double ilut_tau = 0.1;
  /// Dropped fill is added to the diagonal; the plain variant is unstable on
  /// the squared Laplacian at tau = 0.1.
  IlutOptions ilut_options{.compensate = true};
  /// Outer cap for the unpreconditioned contact run when config.maxit_outer
  /// is 0. That run stagnates, and n + 10 iterations take minutes at g = 30.
  Index contact_plain_maxit = 200;
  SolverConfig config;
};

struct RunSummary {
  std::string name;
  Termination termination = Termination::maxit;
  Index outer_iters = 0;
  Index total_inner_iters = 0;
  KktReport kkt;
  double wall_ms = 0.0;
};

struct ExperimentReport {
  std::vector<RunSummary> runs;
  std::vector<std::filesystem::path> files;
};

/// Generates the instance, runs the solver and baselines, and writes one
/// history CSV and one JSON summary per run into out_dir.
ExperimentReport run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

/// JSON text of a run summary with keys termination, outer_iters,
/// total_inner_iters, kkt and wall_ms.
std::string summary_json(const RunSummary& summary);

RunSummary summarize(const std::string& name, const BvlsProblem& problem, const SolveResult& result);

}  // namespace resqpass
