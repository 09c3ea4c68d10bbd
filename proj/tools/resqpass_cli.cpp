#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "resqpass/experiments.hpp"
#include "resqpass/io.hpp"
#include "resqpass/solver.hpp"

namespace fs = std::filesystem;
using namespace resqpass;

namespace {

struct CommonFlags {
  double tol = 1e-8;
  std::string tol_mode = "rel";
  double posdef_eps = SolverConfig{}.posdef_eps;
  Index maxit_outer = 0;
  std::string maxit_inner = "10";
  std::string factorization = "cholesky";
  std::string recurrence = "off";
  std::string warm_start = "on";
  std::string precond = "none";
  std::string ilut_compensate = "on";
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--tol", f.tol, "Residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--tol-mode", f.tol_mode, "rel or abs")->check(CLI::IsMember({"rel", "abs"}));
  cmd->add_option("--posdef-eps", f.posdef_eps, "Loss-of-definiteness threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--maxit-outer", f.maxit_outer, "Outer iteration cap, 0 for n + 10 (200 for the plain contact run)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--maxit-inner", f.maxit_inner, "Inner cap per solve, or 'inf'");
  cmd->add_option("--factorization", f.factorization, "cholesky or mgs")
      ->check(CLI::IsMember({"cholesky", "mgs"}));
  cmd->add_option("--recurrence", f.recurrence, "Track C x by recurrence")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--warm-start", f.warm_start, "Warm-start the inner solver")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--precond", f.precond, "none or ilut:<tau>");
  cmd->add_option("--ilut-compensate", f.ilut_compensate, "Add dropped fill to the diagonal")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--out", f.out, "Output directory");
}

Index parse_inner_cap(const std::string& s) {
  if (s == "inf" || s == "unlimited") return kUnlimited;
  const long long v = std::stoll(s);
  if (v < 1) throw std::invalid_argument("--maxit-inner must be at least 1");
  return static_cast<Index>(v);
}

// Returns the ILUT tau, or a negative value for no preconditioner.
double parse_precond(const std::string& s) {
  if (s == "none") return -1.0;
  const std::string prefix = "ilut:";
  if (s.rfind(prefix, 0) != 0) throw std::invalid_argument("--precond must be none or ilut:<tau>");
  const double tau = std::stod(s.substr(prefix.size()));
  if (!(tau >= 0.0)) throw std::invalid_argument("ILUT tau must be nonnegative");
  return tau;
}

SolverConfig make_config(const CommonFlags& f) {
  SolverConfig c;
  c.tol = f.tol;
  c.tol_mode = f.tol_mode == "abs" ? ToleranceMode::absolute : ToleranceMode::relative;
  c.posdef_eps = f.posdef_eps;
  c.maxit_outer = f.maxit_outer;
  c.maxit_inner = parse_inner_cap(f.maxit_inner);
  c.factorization = f.factorization == "mgs" ? Factorization::gram_schmidt : Factorization::cholesky;
  c.recurrence = f.recurrence == "on";
  c.warm_start = f.warm_start == "on";
  c.validate();
  return c;
}

void print_summary(const RunSummary& s) {
  std::cout << s.name << ": " << to_string(s.termination) << ", outer " << s.outer_iters
            << ", inner " << s.total_inner_iters << ", stationarity " << s.kkt.stationarity
            << ", " << s.wall_ms << " ms\n";
}

int run_solve(const CommonFlags& f, const std::string& matrix_path, const std::string& rhs_path,
              const std::string& lower_path, const std::string& upper_path) {
  auto a = std::make_shared<SparseMatrixCSR>(read_matrix_market(fs::path(matrix_path)));
  BvlsProblem problem = make_unconstrained(a, read_vector(fs::path(rhs_path)));
  if (!lower_path.empty()) problem.lower = read_vector(fs::path(lower_path));
  if (!upper_path.empty()) problem.upper = read_vector(fs::path(upper_path));
  problem.validate();

  SolverConfig config = make_config(f);
  const double tau = parse_precond(f.precond);
  if (tau >= 0.0) {
    config.preconditioner =
        make_ilut_preconditioner(*a, tau, IlutOptions{.compensate = f.ilut_compensate == "on"});
  }
  const SolveResult result = solve(problem, config);
  const RunSummary summary = summarize("resqpass", problem, result);
  print_summary(summary);

  if (!f.out.empty()) {
    const fs::path dir(f.out);
    fs::create_directories(dir);
    write_history_csv(dir / "resqpass.csv", result.history);
    std::ofstream json(dir / "resqpass.json");
    if (!json) throw std::runtime_error("cannot write to " + dir.string());
    json << summary_json(summary) << '\n';
    write_vector(dir / "x.txt", result.x);
  }
  return 0;
}

int run_bench(const CommonFlags& f, ExperimentSpec spec, const std::string& family,
              const std::string& ls_mode) {
  spec.family = parse_family(family);
  spec.ls_mode = ls_mode == "s41" ? LsMode::s41 : LsMode::ex24;
  spec.config = make_config(f);
  const double tau = parse_precond(f.precond);
  if (tau >= 0.0) spec.ilut_tau = tau;
  spec.ilut_options.compensate = f.ilut_compensate == "on";
  if (spec.family != Family::contact && tau >= 0.0) {
    std::cerr << "note: --precond only affects the contact family\n";
  }
  const fs::path dir = f.out.empty() ? fs::path("results") / family : fs::path(f.out);
  const ExperimentReport report = run_experiment(spec, dir);
  for (const auto& run : report.runs) print_summary(run);
  for (const auto& file : report.files) std::cout << "wrote " << file.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded-variable least squares by residual subspace active-set iteration"};
  app.require_subcommand(1);

  CommonFlags solve_flags;
  std::string matrix_path, rhs_path, lower_path, upper_path;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem read from files");
  solve_cmd->add_option("matrix", matrix_path, "A in Matrix Market format")->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("rhs", rhs_path, "b, one value per line")->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--lower", lower_path, "Lower bounds (default -inf)")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--upper", upper_path, "Upper bounds (default +inf)")
      ->check(CLI::ExistingFile);
  add_common(solve_cmd, solve_flags);

  CommonFlags bench_flags;
  ExperimentSpec spec;
  std::string family, ls_mode = "ex24";
  auto* bench_cmd = app.add_subcommand("bench", "Run a generated experiment family");
  bench_cmd->add_option("family", family, "cg, bvls, nmf or contact")->required()
      ->check(CLI::IsMember({"cg", "bvls", "nmf", "contact"}));
  bench_cmd->add_option("--seed", spec.seed, "Instance seed");
  bench_cmd->add_option("--m", spec.m, "Rows (cg, bvls, nmf)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--n", spec.n, "Columns (cg, bvls, nmf)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--density", spec.density, "Fill fraction in (0, 1]");
  bench_cmd->add_option("--imax", spec.i_max, "Number of bounded variables (bvls)");
  bench_cmd->add_option("--grid", spec.grid, "Grid size (contact)")->check(CLI::Range(2, 100000));
  bench_cmd->add_option("--p", spec.rank, "Factor rank (nmf)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--noise", spec.noise, "Noise level (nmf)");
  bench_cmd->add_option("--als-iterations", spec.als_iterations, "ALS sweeps (nmf)");
  bench_cmd->add_option("--pressure", spec.pressure, "Load (contact)");
  bench_cmd->add_option("--ubound", spec.ubound, "Upper bound (contact)");
  bench_cmd->add_option("--ls-mode", ls_mode, "ex24 or s41 (cg)")
      ->check(CLI::IsMember({"ex24", "s41"}));
  add_common(bench_cmd, bench_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return run_solve(solve_flags, matrix_path, rhs_path, lower_path, upper_path);
    return run_bench(bench_flags, spec, family, ls_mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
