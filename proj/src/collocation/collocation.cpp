#include "driftlab/collocation/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "driftlab/core/error.hpp"

namespace driftlab {

namespace {

constexpr std::size_t kMaxDim = 16;

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

}  // namespace

std::string to_string(WeightMode mode) {
  return mode == WeightMode::unweighted ? "unweighted" : "sigma_weighted";
}

WeightMode weight_mode_from_string(const std::string& name) {
  if (name == "unweighted") return WeightMode::unweighted;
  if (name == "sigma_weighted") return WeightMode::sigma_weighted;
  fail(ErrorCode::invalid_argument, "unknown weight mode '" + name + "'");
}

void PenaltySpec::validate() const {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and >= 0");
  require(nodes_per_interval >= 2 && nodes_per_interval % 2 == 0,
          "nodes_per_interval must be even and >= 2");
  require(std::isnan(t0) || std::isnan(t1) || t1 > t0, "penalty horizon must have t1 > t0");
}

CollocationProblem::CollocationProblem(BSplineBasis basis, NoisyObservationSet obs,
                                       ObservationModel om, DiffusionSpec spec,
                                       PenaltySpec penalty)
    : basis_(std::move(basis)),
      obs_(std::move(obs)),
      om_(std::move(om)),
      spec_(std::move(spec)),
      penalty_(penalty) {
  spec_.validate();
  om_.validate();
  obs_.validate();
  penalty_.validate();
  dim_ = spec_.state_dim;
  if (dim_ > kMaxDim) fail(ErrorCode::unsupported_dimension, "state dimension is too large for collocation");
  require(obs_.dim == om_.obs_dim, "observation dimension does not match the observation model");
  require(om_.link || om_.obs_dim <= dim_, "identity link needs obs_dim <= state_dim");
  require(basis_.size() > 0, "basis is empty");
  require(obs_.size() == 0 || (obs_.times.front() >= basis_.lower() && obs_.times.back() <= basis_.upper()),
          "observation times must lie inside the basis domain");

  for (double t : obs_.times) {
    Node n{t, 1.0, 0, {}, {}};
    n.first = basis_.evaluate(t, n.b, n.db);
    obs_nodes_.push_back(n);
  }

  const double t0 = std::isnan(penalty_.t0) ? basis_.lower() : penalty_.t0;
  const double t1 = std::isnan(penalty_.t1) ? basis_.upper() : penalty_.t1;
  require(t0 >= basis_.lower() && t1 <= basis_.upper(), "penalty horizon must lie inside the basis domain");
  std::vector<double> edges{t0};
  for (double b : basis_.breakpoints()) {
    if (b > t0 && b < t1) edges.push_back(b);
  }
  edges.push_back(t1);
  const std::size_t m = penalty_.nodes_per_interval;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double h = (edges[e + 1] - edges[e]) / static_cast<double>(m);
    for (std::size_t s = 0; s <= m; ++s) {
      // Composite Simpson weights 1,4,2,...,4,1 times h/3; shared end points
      // of adjacent intervals appear once per interval.
      const double w = (s == 0 || s == m) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
      const double t = s == m ? edges[e + 1] : edges[e] + h * static_cast<double>(s);
      Node n{t, w * h / 3.0, 0, {}, {}};
      n.first = basis_.evaluate(t, n.b, n.db);
      quad_nodes_.push_back(n);
    }
  }
}

void CollocationProblem::state_at(const Node& node, std::span<const double> coeffs,
                                  std::span<double> x, std::span<double> xdot) const {
  for (std::size_t c = 0; c < dim_; ++c) {
    double v = 0.0, d = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
      const double a = coeffs[(node.first + r) * dim_ + c];
      v += a * node.b[r];
      d += a * node.db[r];
    }
    x[c] = v;
    xdot[c] = d;
  }
}

ObjectiveParts CollocationProblem::evaluate(std::span<const double> coeffs,
                                            std::span<const double> theta) const {
  require(coeffs.size() == n_coeffs(), "coefficient count does not match the basis");
  require(theta.size() == spec_.theta.size(), "theta has the wrong length");
  std::array<double, kMaxDim> x{}, xdot{}, mu{}, sd{};
  const std::span<double> xs(x.data(), dim_), xd(xdot.data(), dim_), ms(mu.data(), dim_),
      ss(sd.data(), dim_);
  ObjectiveParts parts;
  for (std::size_t i = 0; i < obs_nodes_.size(); ++i) {
    state_at(obs_nodes_[i], coeffs, xs, xd);
    parts.data -= om_.log_density(obs_.at(i), xs);
  }
  const bool weighted = penalty_.weight_mode == WeightMode::sigma_weighted;
  double integral = 0.0;
  for (const Node& n : quad_nodes_) {
    state_at(n, coeffs, xs, xd);
    spec_.drift(xs, theta, ms);
    if (weighted) spec_.diffusion(xs, theta, ss);
    double integrand = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      double r = xdot[c] - mu[c];
      if (weighted) {
        if (sd[c] == 0.0) {
          fail(ErrorCode::weight_singularity,
               "diffusion coefficient is zero at t = " + format_double(n.t) +
                   "; the sigma-weighted penalty is undefined there");
        }
        r /= sd[c];
      }
      integrand += r * r;
    }
    integral += n.weight * integrand;
  }
  parts.residual_integral = integral;
  parts.penalty = penalty_.lambda * integral;
  return parts;
}

void CollocationProblem::data_gradient(std::span<const double> y, std::span<const double> x,
                                       std::span<double> g) const {
  // g = d(-log f(y | x)) / dx
  if (!om_.link) {
    std::fill(g.begin(), g.end(), 0.0);
    const double s = om_.scale;
    for (std::size_t c = 0; c < om_.obs_dim; ++c) {
      const double r = (y[c] - x[c]) / s;
      if (om_.kind == ObservationKind::gaussian) {
        g[c] = -r / s;
      } else {
        g[c] = -(om_.dof + 1.0) * r / (om_.dof * s * (1.0 + r * r / om_.dof));
      }
    }
    return;
  }
  std::array<double, kMaxDim> xp{};
  std::copy(x.begin(), x.end(), xp.begin());
  const std::span<const double> xs(xp.data(), dim_);
  for (std::size_t a = 0; a < dim_; ++a) {
    const double h = fd_step(x[a]);
    xp[a] = x[a] + h;
    const double up = om_.log_density(y, xs);
    xp[a] = x[a] - h;
    const double down = om_.log_density(y, xs);
    xp[a] = x[a];
    g[a] = -(up - down) / (2.0 * h);
  }
}

void CollocationProblem::gradient(std::span<const double> coeffs, std::span<const double> theta,
                                  std::span<double> out) const {
  require(out.size() == n_coeffs(), "gradient buffer has the wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  std::array<double, kMaxDim> x{}, xdot{}, mu{}, sd{}, gx{}, xp{}, tmp{};
  const std::span<double> xs(x.data(), dim_), xd(xdot.data(), dim_), ms(mu.data(), dim_),
      ss(sd.data(), dim_), tv(tmp.data(), dim_), xps(xp.data(), dim_);
  for (std::size_t i = 0; i < obs_nodes_.size(); ++i) {
    const Node& n = obs_nodes_[i];
    state_at(n, coeffs, xs, xd);
    data_gradient(obs_.at(i), xs, std::span<double>(gx.data(), dim_));
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < dim_; ++c) out[(n.first + r) * dim_ + c] += gx[c] * n.b[r];
    }
  }
  const bool weighted = penalty_.weight_mode == WeightMode::sigma_weighted;
  const double lambda = penalty_.lambda;
  // Jacobians d mu_c / d x_a and d w_c / d x_a with w = sigma^-2.
  std::array<double, kMaxDim * kMaxDim> jmu{}, jw{};
  std::array<double, kMaxDim> w{}, res{};
  for (const Node& n : quad_nodes_) {
    state_at(n, coeffs, xs, xd);
    spec_.drift(xs, theta, ms);
    if (weighted) spec_.diffusion(xs, theta, ss);
    for (std::size_t c = 0; c < dim_; ++c) {
      if (weighted && sd[c] == 0.0) {
        fail(ErrorCode::weight_singularity,
             "diffusion coefficient is zero at t = " + format_double(n.t) +
                 "; the sigma-weighted penalty is undefined there");
      }
      w[c] = weighted ? 1.0 / (sd[c] * sd[c]) : 1.0;
      res[c] = xdot[c] - mu[c];
    }
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dim_), xp.begin());
    for (std::size_t a = 0; a < dim_; ++a) {
      const double h = fd_step(x[a]);
      xp[a] = x[a] + h;
      spec_.drift(xps, theta, tv);
      for (std::size_t c = 0; c < dim_; ++c) jmu[c * dim_ + a] = tmp[c];
      double wp[kMaxDim] = {};
      if (weighted) {
        spec_.diffusion(xps, theta, tv);
        for (std::size_t c = 0; c < dim_; ++c) wp[c] = 1.0 / (tmp[c] * tmp[c]);
      }
      xp[a] = x[a] - h;
      spec_.drift(xps, theta, tv);
      for (std::size_t c = 0; c < dim_; ++c) jmu[c * dim_ + a] = (jmu[c * dim_ + a] - tmp[c]) / (2.0 * h);
      if (weighted) {
        spec_.diffusion(xps, theta, tv);
        for (std::size_t c = 0; c < dim_; ++c) jw[c * dim_ + a] = (wp[c] - 1.0 / (tmp[c] * tmp[c])) / (2.0 * h);
      }
      xp[a] = x[a];
    }
    // d/dx_a and d/dxdot_a of sum_c w_c r_c^2
    for (std::size_t a = 0; a < dim_; ++a) {
      const double d_xdot = 2.0 * w[a] * res[a];
      double d_x = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) {
        d_x -= 2.0 * w[c] * res[c] * jmu[c * dim_ + a];
        if (weighted) d_x += res[c] * res[c] * jw[c * dim_ + a];
      }
      const double scale = lambda * n.weight;
      for (std::size_t r = 0; r < 4; ++r) {
        out[(n.first + r) * dim_ + a] += scale * (d_xdot * n.db[r] + d_x * n.b[r]);
      }
    }
  }
}

std::vector<double> CollocationProblem::initial_coeffs() const {
  const std::size_t nb = basis_.size();
  std::vector<double> coeffs(nb * dim_, 0.0);
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t c = 0; c < dim_; ++c) coeffs[j * dim_ + c] = spec_.x0[c];
  }
  if (om_.link || obs_.size() == 0) return coeffs;
  // Least squares with a small second-difference penalty on the coefficients
  // so the system stays well posed when there are fewer data than basis
  // functions.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(obs_.size()), static_cast<Eigen::Index>(nb));
  for (std::size_t i = 0; i < obs_nodes_.size(); ++i) {
    for (std::size_t r = 0; r < 4; ++r) {
      B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(obs_nodes_[i].first + r)) = obs_nodes_[i].b[r];
    }
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb >= 2 ? nb - 2 : 0), static_cast<Eigen::Index>(nb));
  for (Eigen::Index j = 0; j < D.rows(); ++j) {
    D(j, j) = 1.0;
    D(j, j + 1) = -2.0;
    D(j, j + 2) = 1.0;
  }
  const Eigen::MatrixXd A = B.transpose() * B + 1e-6 * D.transpose() * D +
                            1e-12 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  for (std::size_t c = 0; c < om_.obs_dim; ++c) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(obs_.size()));
    for (std::size_t i = 0; i < obs_.size(); ++i) y(static_cast<Eigen::Index>(i)) = obs_.at(i)[c];
    const Eigen::VectorXd sol = ldlt.solve(B.transpose() * y);
    for (std::size_t j = 0; j < nb; ++j) coeffs[j * dim_ + c] = sol(static_cast<Eigen::Index>(j));
  }
  return coeffs;
}

double collocation_objective(std::span<const double> coeffs, std::span<const double> theta,
                             const BSplineBasis& basis, const NoisyObservationSet& obs,
                             const ObservationModel& om, const DiffusionSpec& spec,
                             const PenaltySpec& penalty) {
  return CollocationProblem(basis, obs, om, spec, penalty).objective(coeffs, theta);
}

BSplineBasis basis_from_observations(const NoisyObservationSet& obs) {
  obs.validate();
  return BSplineBasis(obs.times);
}

namespace {

// Inverse of a finite-difference Hessian of the coefficient objective, with
// eigenvalues clamped so the result is positive definite.
Eigen::MatrixXd inverse_hessian(const CollocationProblem& prob, std::span<const double> coeffs,
                                std::span<const double> theta) {
  const std::size_t n = prob.n_coeffs();
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd H(ni, ni);
  std::vector<double> c(coeffs.begin(), coeffs.end()), gp(n), gm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(coeffs[j]));
    c[j] = coeffs[j] + h;
    prob.gradient(c, theta, gp);
    c[j] = coeffs[j] - h;
    prob.gradient(c, theta, gm);
    c[j] = coeffs[j];
    for (std::size_t i = 0; i < n; ++i) {
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2.0 * h);
    }
  }
  H = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = 1.0 / std::max(ev(i), 1e-12 * top);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

CollocationFit collocation_fit(const NoisyObservationSet& obs, const ObservationModel& om,
                               const DiffusionSpec& spec, const BSplineBasis& basis,
                               const PenaltySpec& penalty, const CollocationState& init,
                               const CollocationOptions& opts) {
  const CollocationProblem prob(basis, obs, om, spec, penalty);
  std::vector<double> theta = init.theta.empty() ? spec.theta : init.theta;
  require(theta.size() == spec.theta.size(), "initial theta has the wrong length");
  std::vector<double> coeffs = init.coeffs.empty() ? prob.initial_coeffs() : init.coeffs;
  require(coeffs.size() == prob.n_coeffs(), "initial coefficients do not match the basis");

  ParameterSpace space = opts.space;
  if (space.free.empty()) {
    for (std::size_t i = 0; i < theta.size(); ++i) space.free.push_back(i);
    space.positive.assign(theta.size(), false);
  }
  space.validate(theta.size());

  double value = prob.objective(coeffs, theta);
  if (!std::isfinite(value)) fail(ErrorCode::invalid_start, "collocation objective is not finite at the start");

  CollocationFit out;
  std::size_t outer = 0;
  bool converged = false;
  for (; outer < opts.max_outer; ++outer) {
    const double before = value;
    const Objective fc = [&](std::span<const double> c) { return prob.objective(c, theta); };
    const GradientFn gc = [&](std::span<const double> c, std::span<double> g) {
      prob.gradient(c, theta, g);
    };
    const auto inner = bfgs(fc, gc, coeffs, opts.inner, inverse_hessian(prob, coeffs, theta));
    if (inner.value <= value) {
      coeffs = inner.x;
      value = inner.value;
    }
    if (space.size() > 0) {
      const Objective ft = [&](std::span<const double> s) {
        const auto th = space.embed(theta, space.from_search(s));
        return prob.objective(coeffs, th);
      };
      const auto res = nelder_mead(ft, space.to_search(space.extract(theta)), opts.outer);
      if (res.value <= value) {
        theta = space.embed(theta, space.from_search(res.x));
        value = res.value;
      }
    }
    if (before - value < opts.decrease_tolerance * (1.0 + std::abs(value))) {
      converged = true;
      ++outer;
      break;
    }
  }

  out.parts = prob.evaluate(coeffs, theta);
  out.coeffs = coeffs;
  out.lambda = penalty.lambda;
  out.weight_mode = penalty.weight_mode;
  out.basis = basis;
  out.fit.theta_full = theta;
  out.fit.theta_hat = space.extract(theta);
  out.fit.objective = out.parts.total();
  out.fit.iterations = outer;
  out.fit.converged = converged;
  out.fit.diagnostics["data_term"] = out.parts.data;
  out.fit.diagnostics["penalty_term"] = out.parts.penalty;
  out.fit.diagnostics["residual_integral"] = out.parts.residual_integral;
  out.fit.diagnostics["lambda"] = penalty.lambda;

  const std::size_t m = std::max<std::size_t>(2, opts.report_points);
  const std::size_t d = prob.state_dim();
  std::vector<double> times(m), xs(m * d), ds(m * d);
  for (std::size_t k = 0; k < m; ++k) {
    times[k] = k + 1 == m ? basis.upper()
                          : basis.lower() + (basis.upper() - basis.lower()) * static_cast<double>(k) /
                                                static_cast<double>(m - 1);
    for (std::size_t c = 0; c < d; ++c) {
      xs[k * d + c] = basis.value(coeffs, times[k], d, c);
      ds[k * d + c] = basis.derivative(coeffs, times[k], d, c);
    }
  }
  out.trajectory = Path(times, std::move(xs), d);
  out.derivative = Path(std::move(times), std::move(ds), d);
  return out;
}

Table trajectory_table(const CollocationFit& fit) {
  Table t;
  const std::size_t d = fit.trajectory.dim();
  t.header.push_back("t");
  for (std::size_t c = 0; c < d; ++c) {
    t.header.push_back(d == 1 ? "x_fit" : "x" + std::to_string(c + 1) + "_fit");
  }
  for (std::size_t c = 0; c < d; ++c) {
    t.header.push_back(d == 1 ? "dxdt_fit" : "dx" + std::to_string(c + 1) + "dt_fit");
  }
  for (std::size_t k = 0; k < fit.trajectory.size(); ++k) {
    std::vector<double> row{fit.trajectory.time(k)};
    for (std::size_t c = 0; c < d; ++c) row.push_back(fit.trajectory.at(k, c));
    for (std::size_t c = 0; c < d; ++c) row.push_back(fit.derivative.at(k, c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

double map_equivalent_sigma(double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
  return 1.0 / std::sqrt(2.0 * lambda);
}

double lambda_from_sigma(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be > 0");
  return 1.0 / (2.0 * sigma * sigma);
}

}  // namespace driftlab
