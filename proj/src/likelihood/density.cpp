#include "driftlab/likelihood/density.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "driftlab/core/error.hpp"
#include "driftlab/likelihood/bridge.hpp"

namespace driftlab {

namespace {

double gaussian_logpdf(double y, double mean, double variance) {
  const double r = y - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * r * r / variance;
}

}  // namespace

double gbm_transition_logdensity(const GbmParams& p, double dt, double x, double y) {
  require(dt > 0.0 && x > 0.0 && y > 0.0, "gbm density requires dt, x, y > 0");
  if (!(p.sigma > 0.0)) fail(ErrorCode::degenerate_density, "gbm density with sigma = 0");
  const double v = p.sigma * p.sigma * dt;
  const double m = (p.beta - 0.5 * p.sigma * p.sigma) * dt;
  return gaussian_logpdf(std::log(y / x), m, v) - std::log(y);
}

double ou_transition_logdensity(const OuParams& p, double dt, double x, double y) {
  require(dt > 0.0, "ou density requires dt > 0");
  require(p.gamma > 0.0, "ou density requires gamma > 0");
  if (!(p.sigma > 0.0)) fail(ErrorCode::degenerate_density, "ou density with sigma = 0");
  const double decay = std::exp(-p.gamma * dt);
  const double v = p.sigma * p.sigma * (-std::expm1(-2.0 * p.gamma * dt)) / (2.0 * p.gamma);
  return gaussian_logpdf(y, p.beta_bar + (x - p.beta_bar) * decay, v);
}

double euler_transition_logdensity(const DiffusionSpec& spec, double dt, double x, double y) {
  require(dt > 0.0, "euler density requires dt > 0");
  const double s = spec.diffusion1(x);
  if (!(s != 0.0) || !std::isfinite(s)) {
    fail(ErrorCode::degenerate_density, "euler density with zero diffusion");
  }
  return gaussian_logpdf(y, x + spec.drift1(x) * dt, s * s * dt);
}

double TransitionDensity::log_density(double dt, double x, double y,
                                      std::uint64_t pair_index) const {
  switch (kind) {
    case DensityKind::closed_form_gbm:
      return gbm_transition_logdensity(gbm_params_from(model), dt, x, y);
    case DensityKind::closed_form_ou: {
      const auto p = ou_params_from(model);
      if (!(p.gamma > 0.0)) return -std::numeric_limits<double>::infinity();
      return ou_transition_logdensity(p, dt, x, y);
    }
    case DensityKind::euler:
      return euler_transition_logdensity(model, dt, x, y);
    case DensityKind::fokker_planck: {
      const auto& s = fokker_planck;
      double lo = s.lower, hi = s.upper;
      if (!(lo < hi)) {
        const double mean = x + model.drift1(x) * dt;
        const double sd = std::abs(model.diffusion1(x)) * std::sqrt(dt);
        lo = mean - s.auto_width * sd;
        hi = mean + s.auto_width * sd;
      }
      std::vector<double> grid(s.cells + 1);
      for (std::size_t i = 0; i <= s.cells; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(s.cells);
      }
      const auto r = fokker_planck_transition_density(model, dt, x, grid, {s.time_steps});
      return std::log(r.at(y));
    }
    case DensityKind::bridge_mc:
      return bridge_log_density(model, dt, x, y, bridge.m_sub, bridge.j_samples, bridge.seed,
                                pair_index);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

TransitionDensity TransitionDensity::with_theta(std::span<const double> theta) const {
  TransitionDensity out = *this;
  out.model = model.with_theta(theta);
  return out;
}

}  // namespace driftlab
