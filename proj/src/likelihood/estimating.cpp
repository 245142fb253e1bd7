#include "driftlab/likelihood/estimating.hpp"

#include <cmath>
#include <string>

#include "driftlab/core/error.hpp"
#include "driftlab/core/rng.hpp"

namespace driftlab {

EstimatingFunction polynomial_moments(std::size_t dim, std::size_t replicates) {
  require(dim >= 1, "polynomial moments need dim >= 1");
  EstimatingFunction ef;
  ef.dim = dim;
  ef.replicates = replicates;
  ef.psi = [dim](double, double y, std::span<const double>, std::span<double> out) {
    double power = 1.0;
    for (std::size_t k = 0; k < dim; ++k) {
      power *= y;
      out[k] = power;
    }
  };
  return ef;
}

EstimatingFunction ratio_moments(std::size_t dim, std::size_t replicates) {
  require(dim >= 1, "ratio moments need dim >= 1");
  EstimatingFunction ef;
  ef.dim = dim;
  ef.replicates = replicates;
  ef.psi = [dim](double x, double y, std::span<const double>, std::span<double> out) {
    const double ratio = y / x;
    double power = 1.0;
    for (std::size_t k = 0; k < dim; ++k) {
      power *= ratio;
      out[k] = power;
    }
  };
  return ef;
}

ExpectationFn gbm_ratio_expectation(std::size_t dim) {
  return [dim](double, double dt, std::span<const double> theta, std::span<double> out) {
    const double beta = theta[0], sigma = theta[1];
    for (std::size_t k = 1; k <= dim; ++k) {
      const double kk = static_cast<double>(k);
      out[k - 1] = std::exp((kk * beta + 0.5 * kk * (kk - 1.0) * sigma * sigma) * dt);
    }
  };
}

ExpectationFn gbm_moment_expectation(std::size_t dim) {
  return [dim](double x, double dt, std::span<const double> theta, std::span<double> out) {
    const double beta = theta[0], sigma = theta[1];
    for (std::size_t k = 1; k <= dim; ++k) {
      const double kk = static_cast<double>(k);
      out[k - 1] = std::pow(x, kk) * std::exp((kk * beta + 0.5 * kk * (kk - 1.0) * sigma * sigma) * dt);
    }
  };
}

McExpectation mc_conditional_expectation(const DiffusionSpec& spec, const EstimatingFunction& ef,
                                         double s, double t, double x, std::uint64_t seed,
                                         std::uint64_t stream_index, std::size_t substeps) {
  require(t > s, "conditional expectation requires t > s");
  require(ef.replicates >= 1, "estimating function needs J >= 1");
  require(spec.state_dim == 1, "estimating functions support scalar models only");
  const std::size_t m = std::max<std::size_t>(substeps, 20);
  const double d = (t - s) / static_cast<double>(m);
  const double root_d = std::sqrt(d);
  McExpectation out;
  out.value.assign(ef.dim, 0.0);
  std::vector<double> buf(ef.dim);
  for (std::size_t j = 0; j < ef.replicates; ++j) {
    Stream rng(seed, stream_index, j);
    double cur = x;
    bool ok = true;
    for (std::size_t k = 0; k < m; ++k) {
      const double mu = spec.drift1(cur);
      const double sd = spec.diffusion1(cur);
      cur += mu * d + sd * root_d * rng.normal();
      if (!std::isfinite(cur)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      ef.psi(x, cur, spec.theta, buf);
      for (double v : buf) ok = ok && std::isfinite(v);
    }
    if (!ok) {
      ++out.diverged;
      continue;
    }
    for (std::size_t c = 0; c < ef.dim; ++c) out.value[c] += buf[c];
    ++out.used;
  }
  if (out.used == 0) {
    fail(ErrorCode::estimation_failed, "all Monte Carlo paths diverged", stream_index);
  }
  for (double& v : out.value) v /= static_cast<double>(out.used);
  return out;
}

FitResult ee_solve(const DiffusionSpec& spec, const EstimatingFunction& ef,
                   const ObservationSet& obs, const ParameterSpace& space,
                   const std::vector<double>& init_theta, std::uint64_t seed,
                   const EeOptions& options) {
  obs.validate();
  space.validate(spec.theta.size());
  if (obs.size() < 2) fail(ErrorCode::insufficient_data, "need at least two observations");
  require(ef.dim == space.size(), "psi dimension must equal the number of free parameters");
  require(init_theta.size() == space.size(), "init_theta must match the parameter space");

  std::size_t diverged = 0;
  std::vector<double> psi_obs(ef.dim), expect(ef.dim);
  const ResidualFn residual = [&](std::span<const double> search) {
    const auto theta = space.embed(spec.theta, space.from_search(search));
    const DiffusionSpec model = spec.with_theta(theta);
    std::vector<double> r(ef.dim, 0.0);
    diverged = 0;
    for (std::size_t i = 0; i + 1 < obs.size(); ++i) {
      const double xs = obs.values[i], xt = obs.values[i + 1];
      const double dt = obs.times[i + 1] - obs.times[i];
      ef.psi(xs, xt, theta, psi_obs);
      if (ef.exact_expectation) {
        ef.exact_expectation(xs, dt, theta, expect);
      } else {
        const auto mc = mc_conditional_expectation(model, ef, obs.times[i], obs.times[i + 1], xs,
                                                   seed, i, options.substeps);
        expect = mc.value;
        diverged += mc.diverged;
      }
      for (std::size_t c = 0; c < ef.dim; ++c) r[c] += psi_obs[c] - expect[c];
    }
    return r;
  };

  const RootResult root = broyden_solve(residual, space.to_search(init_theta), options.root);
  FitResult fit;
  fit.theta_hat = space.from_search(root.x);
  fit.theta_full = space.embed(spec.theta, fit.theta_hat);
  fit.objective = root.residual_norm;
  fit.iterations = root.iterations;
  fit.converged = root.converged;
  fit.seed = seed;
  (void)residual(root.x);
  fit.diagnostics["diverged_paths"] = static_cast<double>(diverged);
  fit.diagnostics["replicates"] = static_cast<double>(ef.exact_expectation ? 0 : ef.replicates);
  return fit;
}

}  // namespace driftlab
