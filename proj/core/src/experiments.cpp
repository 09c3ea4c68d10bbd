#include "resqpass/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace resqpass {

std::uint64_t RngStream::next_u64() {
  counter_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = counter_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

Index RngStream::uniform_index(Index n) {
  if (n <= 0) throw std::invalid_argument("uniform_index: empty range");
  return static_cast<Index>(next_u64() % static_cast<std::uint64_t>(n));
}

namespace {

void check_density(double density) {
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("density must lie in (0, 1]");
  }
}

void check_shape(Index m, Index n) {
  if (m < 1 || n < 1) throw std::invalid_argument("dimensions must be positive");
}

Vector infinite(Index n, double sign) {
  return Vector::Constant(n, sign * std::numeric_limits<double>::infinity());
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

BvlsProblem gen_random_ls(Index m, Index n, double density, std::uint64_t seed, LsMode mode) {
  check_shape(m, n);
  RngStream rng(seed);
  std::vector<Triplet> triplets;
  if (mode == LsMode::ex24) {
    check_density(density);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (rng.uniform() < density) triplets.push_back({i, j, rng.normal()});
      }
    }
  } else {
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double v = rng.normal();
        if (v > 0.0 && v <= 0.1) triplets.push_back({i, j, v});
      }
    }
  }
  if (triplets.empty()) throw std::invalid_argument("gen_random_ls: generated matrix is empty");
  auto a = std::make_shared<SparseMatrixCSR>(SparseMatrixCSR::from_triplets(m, n, triplets));
  Vector x_star(n);
  for (Index j = 0; j < n; ++j) x_star(j) = rng.normal();
  Vector b = a->apply(x_star);
  return make_unconstrained(std::move(a), std::move(b));
}

BvlsProblem gen_tuneable(Index m, Index n, double density, Index i_max, std::uint64_t seed) {
  check_shape(m, n);
  check_density(density);
  if (i_max < 0 || i_max > n) throw std::invalid_argument("gen_tuneable: i_max must lie in [0, n]");
  RngStream rng(seed);
  std::vector<Triplet> triplets;
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (rng.uniform() < density) triplets.push_back({i, j, 1.0});
    }
  }
  if (triplets.empty()) throw std::invalid_argument("gen_tuneable: generated matrix is empty");
  auto a = std::make_shared<SparseMatrixCSR>(SparseMatrixCSR::from_triplets(m, n, triplets));

  // Fisher-Yates: the first half of the permutation gets zeros.
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) perm[j] = j;
  for (Index j = n - 1; j > 0; --j) std::swap(perm[j], perm[rng.uniform_index(j + 1)]);
  Vector x_star = Vector::Zero(n);
  for (Index j = n / 2; j < n; ++j) x_star(perm[j]) = rng.uniform() < 0.5 ? -1.0 : 1.0;

  BvlsProblem problem;
  problem.b = a->apply(x_star);
  problem.a = std::move(a);
  problem.lower = infinite(n, -1.0);
  problem.upper = infinite(n, 1.0);
  for (Index j = 0; j < i_max; ++j) {
    const double width = std::abs(x_star(j)) / 2.0 + 0.01;
    problem.lower(j) = -width;
    problem.upper(j) = width;
  }
  return problem;
}

NmfInstance gen_nmf(Index n, Index m, Index p, double noise, std::uint64_t seed) {
  check_shape(n, m);
  if (p < 1 || p > std::min(n, m)) throw std::invalid_argument("gen_nmf: p must lie in [1, min(n, m)]");
  if (noise < 0.0) throw std::invalid_argument("gen_nmf: noise must be nonnegative");
  RngStream rng(seed);
  Matrix x(n, p);
  Matrix y(p, m);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) x(i, j) = rng.uniform();
  }
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < p; ++i) y(i, j) = rng.uniform();
  }
  Matrix a = x * y;
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = std::max(a(i, j) + noise * rng.normal(), 0.0);
  }
  NmfInstance out;
  out.a = std::move(a);
  out.p = p;
  out.x0.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) out.x0(i, j) = rng.uniform();
  }
  return out;
}

namespace {

struct NnlsOutcome {
  Vector x;
  Index outer = 0;
  Index inner = 0;
  KktReport kkt;
  Termination termination = Termination::maxit;
};

NnlsOutcome solve_nnls(std::shared_ptr<const LinearOperator> op, const Vector& rhs, const Vector& start,
                       const SolverConfig& config, NnlsBackend backend) {
  const Index n = op->cols();
  BvlsProblem problem;
  problem.a = std::move(op);
  problem.b = rhs;
  problem.lower = Vector::Zero(n);
  problem.upper = infinite(n, 1.0);

  NnlsOutcome out;
  if (backend == NnlsBackend::resqpass) {
    const SolveResult result = solve(problem, config);
    out.x = result.x;
    out.outer = result.history.outer_iterations();
    out.inner = result.history.total_inner_iterations();
    out.termination = result.history.termination;
    out.kkt = kkt_report(*problem.a, problem.b, problem.lower, problem.upper, result.x,
                         result.lambda, result.mu);
  } else {
    const auto pg = projected_gradient_bvls(*problem.a, problem.b, problem.lower, problem.upper,
                                            start, 1e-11, 200000);
    out.x = pg.x;
    out.outer = pg.iterations;
    const auto [lambda, mu] =
        multipliers_from_gradient(*problem.a, problem.b, problem.lower, problem.upper, pg.x, 1e-12);
    out.kkt = kkt_report(*problem.a, problem.b, problem.lower, problem.upper, pg.x, lambda, mu);
    out.termination = pg.projected_gradient <= 1e-11 ? Termination::residual_tol : Termination::maxit;
  }
  return out;
}

}  // namespace

AlsResult run_als(const NmfInstance& instance, Index iterations, const SolverConfig& config,
                  NnlsBackend backend) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = instance.a.rows();
  const Index m = instance.a.cols();
  const Index p = instance.p;
  const Vector rhs = Eigen::Map<const Vector>(instance.a.data(), n * m);

  AlsResult out;
  out.x = instance.x0;
  out.y = Matrix::Zero(p, m);
  auto record = [&](const NnlsOutcome& r) {
    out.outer_iterations += r.outer;
    out.inner_iterations += r.inner;
    out.last_kkt = r.kkt;
    out.last_termination = r.termination;
    out.objectives.push_back((instance.a - out.x * out.y).norm());
  };

  for (Index it = 0; it < iterations; ++it) {
    {
      auto op = std::make_shared<KronLeftOperator>(out.x, m);
      const Vector start_y = Eigen::Map<const Vector>(out.y.data(), p * m);
      const NnlsOutcome r = solve_nnls(op, rhs, start_y, config, backend);
      out.y = Eigen::Map<const Matrix>(r.x.data(), p, m);
      record(r);
    }
    {
      auto op = std::make_shared<KronRightOperator>(out.y, n);
      const Vector start_x = Eigen::Map<const Vector>(out.x.data(), n * p);
      const NnlsOutcome r = solve_nnls(op, rhs, start_x, config, backend);
      out.x = Eigen::Map<const Matrix>(r.x.data(), n, p);
      record(r);
    }
  }
  out.wall_ms = elapsed_ms(start);
  return out;
}

ContactInstance gen_contact(Index g, double pressure, double ubound) {
  if (!(ubound >= 0.0)) throw std::invalid_argument("gen_contact: ubound must be nonnegative");
  auto a = std::make_shared<SparseMatrixCSR>(laplacian_2d(g));
  const Index n = a->cols();
  ContactInstance out;
  out.a = a;
  out.problem.a = a;
  out.problem.b = Vector::Constant(n, pressure);
  out.problem.lower = Vector::Zero(n);
  out.problem.upper = Vector::Constant(n, ubound);
  return out;
}

std::shared_ptr<const Preconditioner> make_ilut_preconditioner(const SparseMatrixCSR& a,
                                                               double tau,
                                                               const IlutOptions& options) {
  return std::make_shared<IlutPreconditioner>(ilut_factor(normal_matrix(a), tau, options));
}

Family parse_family(const std::string& name) {
  if (name == "cg") return Family::cg;
  if (name == "bvls") return Family::bvls;
  if (name == "nmf") return Family::nmf;
  if (name == "contact") return Family::contact;
  throw std::invalid_argument("unknown experiment family: " + name);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::cg:
      return "cg";
    case Family::bvls:
      return "bvls";
    case Family::nmf:
      return "nmf";
    case Family::contact:
      return "contact";
  }
  return "unknown";
}

namespace {

nlohmann::json kkt_json(const KktReport& kkt) {
  return {{"stationarity", kkt.stationarity},
          {"max_bound_violation", kkt.max_bound_violation},
          {"max_complementarity", kkt.max_complementarity},
          {"min_multiplier", kkt.min_multiplier}};
}

nlohmann::json summary_object(const RunSummary& s) {
  return {{"termination", to_string(s.termination)},
          {"outer_iters", s.outer_iters},
          {"total_inner_iters", s.total_inner_iters},
          {"kkt", kkt_json(s.kkt)},
          {"wall_ms", s.wall_ms}};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

class ReportWriter {
 public:
  ReportWriter(const std::filesystem::path& dir, ExperimentReport& report)
      : dir_(dir), report_(report) {}

  void write_json(const std::string& name, const nlohmann::json& j) {
    const auto path = dir_ / (name + ".json");
    open_output(path) << j.dump(2) << '\n';
    report_.files.push_back(path);
  }

  void write_history(const std::string& name, const ConvergenceHistory& history) {
    const auto path = dir_ / (name + ".csv");
    auto out = open_output(path);
    write_history_csv(out, history);
    report_.files.push_back(path);
  }

  void add_run(const RunSummary& summary, const ConvergenceHistory& history) {
    write_history(summary.name, history);
    write_json(summary.name, summary_object(summary));
    report_.runs.push_back(summary);
  }

 private:
  std::filesystem::path dir_;
  ExperimentReport& report_;
};

ConvergenceHistory lsqr_history(const LsqrResult& lsqr, double tol) {
  ConvergenceHistory h;
  h.r0_norm = lsqr.normal_residuals.front();
  for (std::size_t k = 0; k < lsqr.normal_residuals.size(); ++k) {
    IterationRecord r;
    r.k = static_cast<Index>(k);
    r.resnorm = lsqr.normal_residuals[k];
    r.ms = lsqr.ms[k];
    h.records.push_back(r);
  }
  h.termination = lsqr.normal_residuals.back() <= tol * h.r0_norm ? Termination::residual_tol
                                                                   : Termination::maxit;
  return h;
}

}  // namespace

std::string summary_json(const RunSummary& summary) { return summary_object(summary).dump(2); }

RunSummary summarize(const std::string& name, const BvlsProblem& problem, const SolveResult& result) {
  RunSummary s;
  s.name = name;
  s.termination = result.history.termination;
  s.outer_iters = result.history.outer_iterations();
  s.total_inner_iters = result.history.total_inner_iterations();
  s.kkt = kkt_report(*problem.a, problem.b, problem.lower, problem.upper, result.x, result.lambda,
                     result.mu);
  s.wall_ms = result.history.wall_ms();
  return s;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  spec.config.validate();
  std::filesystem::create_directories(out_dir);
  ExperimentReport report;
  ReportWriter writer(out_dir, report);

  switch (spec.family) {
    case Family::cg: {
      const BvlsProblem problem = gen_random_ls(spec.m, spec.n, spec.density, spec.seed, spec.ls_mode);
      const SolveResult result = solve(problem, spec.config);
      writer.add_run(summarize("resqpass", problem, result), result.history);

      const Index maxit = spec.config.maxit_outer > 0 ? spec.config.maxit_outer : problem.cols() + 10;
      const LsqrResult lsqr = lsqr_solve(*problem.a, problem.b, spec.config.tol, maxit);
      const ConvergenceHistory h = lsqr_history(lsqr, spec.config.tol);
      RunSummary s;
      s.name = "lsqr";
      s.termination = h.termination;
      s.outer_iters = h.outer_iterations();
      const Vector zero = Vector::Zero(problem.cols());
      s.kkt = kkt_report(*problem.a, problem.b, problem.lower, problem.upper, lsqr.x, zero, zero);
      s.wall_ms = h.wall_ms();
      writer.add_run(s, h);
      break;
    }
    case Family::bvls: {
      const BvlsProblem problem = gen_tuneable(spec.m, spec.n, spec.density, spec.i_max, spec.seed);
      const SolveResult result = solve(problem, spec.config);
      writer.add_run(summarize("resqpass", problem, result), result.history);
      break;
    }
    case Family::nmf: {
      const NmfInstance instance = gen_nmf(spec.m, spec.n, spec.rank, spec.noise, spec.seed);
      const AlsResult als = run_als(instance, spec.als_iterations, spec.config);
      const AlsResult reference =
          run_als(instance, spec.als_iterations, spec.config, NnlsBackend::projected_gradient);

      const auto path = out_dir / "als.csv";
      auto csv = open_output(path);
      csv << "half_step,objective,reference_objective\n";
      csv.precision(17);
      for (std::size_t k = 0; k < als.objectives.size(); ++k) {
        csv << k + 1 << ',' << als.objectives[k] << ',' << reference.objectives[k] << '\n';
      }
      report.files.push_back(path);

      RunSummary s;
      s.name = "als";
      s.termination = als.last_termination;
      s.outer_iters = als.outer_iterations;
      s.total_inner_iters = als.inner_iterations;
      s.kkt = als.last_kkt;
      s.wall_ms = als.wall_ms;
      nlohmann::json j = summary_object(s);
      j["objectives"] = als.objectives;
      j["reference_objective"] = reference.objectives.back();
      writer.write_json("als", j);
      report.runs.push_back(s);
      break;
    }
    case Family::contact: {
      const ContactInstance instance = gen_contact(spec.grid, spec.pressure, spec.ubound);
      SolverConfig plain = spec.config;
      plain.preconditioner = nullptr;
      if (plain.maxit_outer == 0) plain.maxit_outer = spec.contact_plain_maxit;
      const SolveResult unpreconditioned = solve(instance.problem, plain);
      writer.add_run(summarize("contact_plain", instance.problem, unpreconditioned),
                     unpreconditioned.history);

      SolverConfig preconditioned = spec.config;
      preconditioned.preconditioner = make_ilut_preconditioner(*instance.a, spec.ilut_tau, spec.ilut_options);
      const SolveResult result = solve(instance.problem, preconditioned);
      writer.add_run(summarize("contact_ilut", instance.problem, result), result.history);
      break;
    }
  }
  return report;
}

}  // namespace resqpass
