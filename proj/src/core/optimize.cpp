#include "driftlab/core/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace driftlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

struct SimplexRun {
  std::vector<double> best;
  double value;
  std::size_t iterations;
  std::size_t evaluations;
  bool converged;
};

SimplexRun simplex_pass(const Objective& f, const std::vector<double>& start,
                        const NelderMeadOptions& o, std::size_t iteration_budget) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  std::size_t evals = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = o.initial_step * std::max(1.0, std::abs(start[i]));
    pts[i + 1][i] += h;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    vals[i] = safe_eval(f, pts[i]);
    ++evals;
  }
  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  std::size_t it = 0;
  bool converged = false;
  for (; it < iteration_budget; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return vals[a] < vals[b] || (vals[a] == vals[b] && a < b);
    });
    const std::size_t lo = order.front(), hi = order.back(), second = order[n - 1];
    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        diameter = std::max(diameter, std::abs(pts[i][j] - pts[lo][j]));
      }
    }
    if (std::isfinite(vals[hi]) && vals[hi] - vals[lo] <= o.f_tolerance &&
        diameter <= o.x_tolerance) {
      converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == hi) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - pts[hi][j]);
    const double fr = safe_eval(f, trial);
    ++evals;
    if (fr < vals[lo]) {
      for (std::size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + 2.0 * (centroid[j] - pts[hi][j]);
      const double fe = safe_eval(f, trial2);
      ++evals;
      if (fe < fr) {
        pts[hi] = trial2;
        vals[hi] = fe;
      } else {
        pts[hi] = trial;
        vals[hi] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[hi] = trial;
      vals[hi] = fr;
      continue;
    }
    const bool outside = fr < vals[hi];
    for (std::size_t j = 0; j < n; ++j) {
      trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                          : centroid[j] + 0.5 * (pts[hi][j] - centroid[j]);
    }
    const double fc = safe_eval(f, trial2);
    ++evals;
    if (fc < std::min(fr, vals[hi])) {
      pts[hi] = trial2;
      vals[hi] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == lo) continue;
      for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[lo][j] + 0.5 * (pts[i][j] - pts[lo][j]);
      vals[i] = safe_eval(f, pts[i]);
      ++evals;
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], it, evals, converged};
}

}  // namespace

OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& o) {
  OptimResult result;
  result.x = std::move(x0);
  result.value = safe_eval(f, result.x);
  result.evaluations = 1;
  std::size_t budget = o.max_iterations;
  for (std::size_t pass = 0; pass <= o.max_restarts && budget > 0; ++pass) {
    const SimplexRun run = simplex_pass(f, result.x, o, budget);
    result.iterations += run.iterations;
    result.evaluations += run.evaluations;
    budget -= std::min(budget, run.iterations);
    const double improvement = result.value - run.value;
    if (run.value <= result.value) {
      result.x = run.best;
      result.value = run.value;
    }
    if (!run.converged) {
      result.converged = false;
      break;
    }
    result.converged = true;
    if (pass > 0 && improvement <= o.f_tolerance) break;
  }
  return result;
}

OptimResult bfgs(const Objective& f, const GradientFn& grad, std::vector<double> x0,
                 const BfgsOptions& o, std::optional<Eigen::MatrixXd> initial_inverse_hessian) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
  Eigen::MatrixXd h_inv = initial_inverse_hessian.value_or(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd h_reset = h_inv;
  Eigen::VectorXd g(n), g_new(n), x_new(n);
  auto eval_f = [&](const Eigen::VectorXd& v) {
    return safe_eval(f, std::span<const double>(v.data(), static_cast<std::size_t>(n)));
  };
  auto eval_g = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    grad(std::span<const double>(v.data(), static_cast<std::size_t>(n)),
         std::span<double>(out.data(), static_cast<std::size_t>(n)));
  };
  OptimResult r;
  double fx = eval_f(x);
  eval_g(x, g);
  r.evaluations = 1;
  for (r.iterations = 0; r.iterations < o.max_iterations; ++r.iterations) {
    if (g.lpNorm<Eigen::Infinity>() <= o.gradient_tolerance * (1.0 + std::abs(fx))) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd p = -h_inv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h_inv = h_reset;
      p = -h_inv * g;
      slope = g.dot(p);
      if (!(slope < 0.0)) {
        p = -g;
        slope = -g.squaredNorm();
      }
    }
    double step = 1.0;
    double f_new = kInf;
    for (int k = 0; k < 60; ++k) {
      x_new = x + step * p;
      f_new = eval_f(x_new);
      ++r.evaluations;
      if (f_new <= fx + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!(f_new <= fx)) break;  // no descent possible at machine precision
    eval_g(x_new, g_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double decrease = fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_rsy = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      h_inv = i_rsy * h_inv * i_rsy.transpose() + rho * s * s.transpose();
    }
    if (decrease <= o.f_tolerance * (1.0 + std::abs(fx))) {
      r.converged = true;
      ++r.iterations;
      break;
    }
  }
  r.x.assign(x.data(), x.data() + n);
  r.value = fx;
  return r;
}

namespace {

Eigen::MatrixXd fd_jacobian(const ResidualFn& F, const std::vector<double>& x,
                            const std::vector<double>& fx, double h_rel) {
  const std::size_t n = x.size(), m = fx.size();
  Eigen::MatrixXd J(m, n);
  std::vector<double> xp = x;
  for (std::size_t j = 0; j < n; ++j) {
    const double h = h_rel * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const auto fp = F(xp);
    xp[j] = x[j];
    for (std::size_t i = 0; i < m; ++i) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fx[i]) / h;
  }
  return J;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

RootResult broyden_solve(const ResidualFn& F, std::vector<double> x0, const RootOptions& o) {
  RootResult r;
  std::vector<double> x = std::move(x0);
  std::vector<double> fx = F(x);
  double fnorm = norm2(fx);
  Eigen::MatrixXd J = fd_jacobian(F, x, fx, o.fd_step);
  bool fresh = true;
  const auto n = static_cast<Eigen::Index>(x.size());
  for (r.iterations = 0; r.iterations < o.max_iterations; ++r.iterations) {
    if (fnorm <= o.tolerance) {
      r.converged = true;
      break;
    }
    const Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(fx.data(), static_cast<Eigen::Index>(fx.size()));
    const Eigen::VectorXd dx = -J.colPivHouseholderQr().solve(fv);
    double step = 1.0;
    std::vector<double> x_new(x.size()), f_new;
    double new_norm = kInf;
    for (int k = 0; k < 30; ++k) {
      for (Eigen::Index j = 0; j < n; ++j) x_new[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] + step * dx(j);
      f_new = F(x_new);
      new_norm = norm2(f_new);
      if (std::isfinite(new_norm) && new_norm <= (1.0 - 1e-4 * step) * fnorm) break;
      step *= 0.5;
    }
    if (!(std::isfinite(new_norm) && new_norm < fnorm)) {
      if (fresh) break;
      J = fd_jacobian(F, x, fx, o.fd_step);
      fresh = true;
      continue;
    }
    Eigen::VectorXd s(n), y(static_cast<Eigen::Index>(fx.size()));
    for (Eigen::Index j = 0; j < n; ++j) s(j) = x_new[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = f_new[static_cast<std::size_t>(i)] - fx[static_cast<std::size_t>(i)];
    const double ss = s.squaredNorm();
    if (ss > 0.0) J += ((y - J * s) * s.transpose()) / ss;
    fresh = false;
    x = std::move(x_new);
    fx = std::move(f_new);
    fnorm = new_norm;
  }
  r.x = std::move(x);
  r.residual_norm = fnorm;
  if (fnorm <= o.tolerance) r.converged = true;
  return r;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x0,
                                  double relative_step) {
  const std::size_t n = x0.size();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = relative_step * std::max(1.0, std::abs(x[i]));
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v;
      if (i == j) {
        x[i] = x0[i] + h[i];
        const double fp = f(x);
        x[i] = x0[i] - h[i];
        const double fm = f(x);
        x[i] = x0[i];
        v = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
      } else {
        auto at = [&](double si, double sj) {
          x[i] = x0[i] + si * h[i];
          x[j] = x0[j] + sj * h[j];
          const double fv = f(x);
          x[i] = x0[i];
          x[j] = x0[j];
          return fv;
        };
        v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
      }
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return H;
}

}  // namespace driftlab
