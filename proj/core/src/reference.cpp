#include "resqpass/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/QR>

namespace resqpass {

LsqrResult lsqr_solve(const LinearOperator& a, const Vector& b, double tol, Index maxit) {
  if (b.size() != a.rows()) throw std::invalid_argument("lsqr_solve: b has the wrong length");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  LsqrResult out;
  out.x = Vector::Zero(a.cols());

  Vector u = b;
  double beta = u.norm();
  if (beta > 0.0) u /= beta;
  Vector v = a.apply_adjoint(u);
  double alpha = v.norm();
  if (alpha > 0.0) v /= alpha;

  const double r0 = alpha * beta;
  out.normal_residuals.push_back(r0);
  out.ms.push_back(elapsed());
  if (r0 == 0.0) return out;

  Vector w = v;
  double phi_bar = beta;
  double rho_bar = alpha;

  for (Index it = 1; it <= maxit; ++it) {
    u = a.apply(v) - alpha * u;
    beta = u.norm();
    if (beta > 0.0) u /= beta;
    v = a.apply_adjoint(u) - beta * v;
    alpha = v.norm();
    if (alpha > 0.0) v /= alpha;

    const double rho = std::hypot(rho_bar, beta);
    const double c = rho_bar / rho;
    const double s = beta / rho;
    const double theta = s * alpha;
    rho_bar = -c * alpha;
    const double phi = c * phi_bar;
    phi_bar = s * phi_bar;

    out.x += (phi / rho) * w;
    w = v - (theta / rho) * w;
    out.iterations = it;

    const double normal = a.apply_adjoint(a.apply(out.x) - b).norm();
    out.normal_residuals.push_back(normal);
    out.ms.push_back(elapsed());
    if (normal <= tol * r0 || alpha == 0.0 || beta == 0.0) break;
  }
  return out;
}

BruteForceResult brute_force_bvls(const Matrix& a, const Vector& b, const Vector& lower,
                                  const Vector& upper) {
  const Index n = a.cols();
  if (n > kBruteForceMaxVariables) {
    throw std::invalid_argument("brute_force_bvls: at most 12 variables are supported");
  }
  if (b.size() != a.rows() || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("brute_force_bvls: dimension mismatch");
  }
  constexpr double kFeasTol = 1e-10;
  constexpr double kDualTol = 1e-10;

  BruteForceResult best;
  best.objective = std::numeric_limits<double>::infinity();

  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 free, 1 lower, 2 upper
  Index total = 1;
  for (Index i = 0; i < n; ++i) total *= 3;

  std::vector<Index> free_idx;
  for (Index code = 0; code < total; ++code) {
    Index c = code;
    bool valid = true;
    free_idx.clear();
    Vector x = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 1) {
        if (!std::isfinite(lower(i))) valid = false;
        x(i) = lower(i);
      } else if (state[i] == 2) {
        if (!std::isfinite(upper(i)) || upper(i) == lower(i)) valid = false;
        x(i) = upper(i);
      } else {
        free_idx.push_back(i);
      }
    }
    if (!valid) continue;

    if (!free_idx.empty()) {
      Vector rhs = b;
      for (Index i = 0; i < n; ++i) {
        if (state[i] != 0) rhs -= a.col(i) * x(i);
      }
      Matrix af(a.rows(), static_cast<Index>(free_idx.size()));
      for (std::size_t j = 0; j < free_idx.size(); ++j) af.col(static_cast<Index>(j)) = a.col(free_idx[j]);
      const Eigen::ColPivHouseholderQR<Matrix> qr(af);
      if (qr.rank() < af.cols()) continue;
      const Vector xf = qr.solve(rhs);
      for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const Index i = free_idx[j];
        const double xi = xf(static_cast<Index>(j));
        if (xi < lower(i) - kFeasTol * std::max(1.0, std::abs(lower(i))) ||
            xi > upper(i) + kFeasTol * std::max(1.0, std::abs(upper(i)))) {
          valid = false;
          break;
        }
        x(i) = xi;
      }
      if (!valid) continue;
    }

    const Vector resid = a * x - b;
    const Vector g = a.transpose() * resid;
    Vector lambda = Vector::Zero(n);
    Vector mu = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (state[i] == 1) lambda(i) = g(i);
      if (state[i] == 2) mu(i) = -g(i);
    }
    if (lambda.size() > 0 && (lambda.minCoeff() < -kDualTol || mu.minCoeff() < -kDualTol)) continue;

    const double objective = 0.5 * resid.squaredNorm();
    if (objective < best.objective) {
      best.objective = objective;
      best.x = x;
      best.lambda = lambda;
      best.mu = mu;
    }
  }
  if (!std::isfinite(best.objective)) {
    throw std::runtime_error("brute_force_bvls: no assignment satisfied the optimality conditions");
  }
  return best;
}

KktReport kkt_report(const LinearOperator& a, const Vector& b, const Vector& lower,
                     const Vector& upper, const Vector& x, const Vector& lambda, const Vector& mu) {
  const Index n = a.cols();
  if (x.size() != n || lambda.size() != n || mu.size() != n || lower.size() != n ||
      upper.size() != n) {
    throw std::invalid_argument("kkt_report: dimension mismatch");
  }
  KktReport report;
  report.stationarity = (a.apply_adjoint(a.apply(x) - b) - lambda + mu).norm();
  report.min_multiplier = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    report.max_bound_violation =
        std::max({report.max_bound_violation, lower(i) - x(i), x(i) - upper(i)});
    if (std::isfinite(lower(i))) {
      report.max_complementarity =
          std::max(report.max_complementarity, std::abs(lambda(i) * (x(i) - lower(i))));
    }
    if (std::isfinite(upper(i))) {
      report.max_complementarity =
          std::max(report.max_complementarity, std::abs(mu(i) * (upper(i) - x(i))));
    }
    report.min_multiplier = std::min({report.min_multiplier, lambda(i), mu(i)});
  }
  return report;
}

namespace {

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

ProjectedGradientResult projected_gradient_bvls(const LinearOperator& a, const Vector& b,
                                                const Vector& lower, const Vector& upper,
                                                const Vector& x0, double tol, Index maxit) {
  const double norm = estimate_norm(a, 60);
  const double step = 1.0 / (1.02 * norm * norm);

  ProjectedGradientResult out;
  Vector x = project(x0, lower, upper);
  Vector y = x;
  double t = 1.0;

  for (Index it = 1; it <= maxit; ++it) {
    const Vector grad = a.apply_adjoint(a.apply(y) - b);
    const Vector x_next = project(y - step * grad, lower, upper);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // gradient restart; an objective comparison cannot resolve x below sqrt(eps)
    if ((y - x_next).dot(x_next - x) > 0.0) {
      y = x_next;
      t = 1.0;
    } else {
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x = x_next;
    out.iterations = it;

    if (it % 10 == 0) {
      const Vector g = a.apply_adjoint(a.apply(x) - b);
      out.projected_gradient = (x - project(x - g, lower, upper)).lpNorm<Eigen::Infinity>();
      if (out.projected_gradient <= tol) break;
    }
  }
  const Vector g = a.apply_adjoint(a.apply(x) - b);
  out.projected_gradient = (x - project(x - g, lower, upper)).lpNorm<Eigen::Infinity>();
  out.x = x;
  return out;
}

std::pair<Vector, Vector> multipliers_from_gradient(const LinearOperator& a, const Vector& b,
                                                    const Vector& lower, const Vector& upper,
                                                    const Vector& x, double active_tol) {
  const Vector g = a.apply_adjoint(a.apply(x) - b);
  const Index n = x.size();
  Vector lambda = Vector::Zero(n);
  Vector mu = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (std::isfinite(lower(i)) && x(i) - lower(i) <= active_tol) lambda(i) = std::max(g(i), 0.0);
    if (std::isfinite(upper(i)) && upper(i) - x(i) <= active_tol) mu(i) = std::max(-g(i), 0.0);
  }
  return {lambda, mu};
}

}  // namespace resqpass
