#include "driftlab/likelihood/loglik.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "driftlab/core/error.hpp"

namespace driftlab {

double discrete_loglikelihood(const TransitionDensity& td, const ObservationSet& obs) {
  obs.validate();
  if (obs.size() < 2) fail(ErrorCode::insufficient_data, "need at least two observations");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < obs.size(); ++i) {
    double term = 0.0;
    try {
      term = td.log_density(obs.times[i + 1] - obs.times[i], obs.values[i], obs.values[i + 1], i);
    } catch (const Error& e) {
      if (e.index()) throw;
      throw Error(e.code(), std::string(e.what()) + " (pair " + std::to_string(i) + ")", i);
    }
    if (!std::isfinite(term)) {
      fail(ErrorCode::non_finite_term, "non-finite log-density for pair " + std::to_string(i), i);
    }
    total += term;
  }
  return total;
}

FitResult mle_fit(const TransitionDensity& td, const ObservationSet& obs,
                  const ParameterSpace& space, const std::vector<double>& init_theta,
                  const MleOptions& options) {
  space.validate(td.model.theta.size());
  require(init_theta.size() == space.size(), "init_theta must match the parameter space");
  const std::vector<double> base = td.model.theta;

  auto negloglik_natural = [&](std::span<const double> natural) {
    try {
      return -discrete_loglikelihood(td.with_theta(space.embed(base, natural)), obs);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  for (double v : init_theta) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_start, "init_theta must be finite");
  }
  const double start_value = negloglik_natural(init_theta);
  if (!std::isfinite(start_value)) {
    fail(ErrorCode::invalid_start, "log-likelihood is not finite at init_theta");
  }

  const auto objective = [&](std::span<const double> search) {
    return negloglik_natural(space.from_search(search));
  };
  const OptimResult opt = nelder_mead(objective, space.to_search(init_theta), options.simplex);

  FitResult fit;
  fit.theta_hat = space.from_search(opt.x);
  fit.theta_full = space.embed(base, fit.theta_hat);
  fit.objective = -opt.value;
  fit.iterations = opt.iterations;
  fit.converged = opt.converged;
  fit.seed = td.bridge.seed;
  fit.diagnostics["evaluations"] = static_cast<double>(opt.evaluations);
  if (options.standard_errors) {
    const Eigen::MatrixXd info = numerical_hessian(negloglik_natural, fit.theta_hat);
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (info.allFinite() && llt.info() == Eigen::Success) {
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
      std::vector<double> se(fit.theta_hat.size());
      for (std::size_t k = 0; k < se.size(); ++k) {
        se[k] = std::sqrt(cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
      }
      fit.standard_errors = se;
    }
  }
  return fit;
}

}  // namespace driftlab
