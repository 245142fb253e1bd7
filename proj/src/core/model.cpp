#include "driftlab/core/model.hpp"

#include <cmath>
#include <utility>

#include "driftlab/core/error.hpp"

namespace driftlab {

void DiffusionSpec::validate() const {
  require(state_dim >= 1, "state_dim must be positive");
  require(x0.size() == state_dim, "x0 length must equal state_dim");
  require(static_cast<bool>(drift) && static_cast<bool>(diffusion),
          "drift and diffusion must be set");
}

DiffusionSpec DiffusionSpec::with_theta(std::span<const double> new_theta) const {
  DiffusionSpec out = *this;
  out.theta.assign(new_theta.begin(), new_theta.end());
  return out;
}

double DiffusionSpec::drift1(double x, std::span<const double> th) const {
  double out = 0.0;
  drift(std::span<const double>(&x, 1), th, std::span<double>(&out, 1));
  return out;
}

double DiffusionSpec::diffusion1(double x, std::span<const double> th) const {
  double out = 0.0;
  diffusion(std::span<const double>(&x, 1), th, std::span<double>(&out, 1));
  return out;
}

DiffusionSpec make_scalar_spec(ScalarFieldFn drift, ScalarFieldFn diffusion,
                               std::vector<double> theta, double x0, std::string family) {
  DiffusionSpec spec;
  spec.state_dim = 1;
  spec.theta = std::move(theta);
  spec.x0 = {x0};
  spec.drift = [mu = std::move(drift)](std::span<const double> x, std::span<const double> th,
                                       std::span<double> out) { out[0] = mu(x[0], th); };
  spec.diffusion = [sd = std::move(diffusion)](std::span<const double> x,
                                               std::span<const double> th,
                                               std::span<double> out) { out[0] = sd(x[0], th); };
  spec.family = std::move(family);
  return spec;
}

void GbmParams::validate() const {
  require(std::isfinite(beta), "gbm: beta must be finite");
  require(std::isfinite(sigma) && sigma >= 0.0, "gbm: sigma must be >= 0");
  require(std::isfinite(x0) && x0 > 0.0, "gbm: x0 must be > 0");
}

void OuParams::validate() const {
  require(std::isfinite(gamma) && gamma > 0.0, "ou: gamma must be > 0");
  require(std::isfinite(beta_bar), "ou: beta_bar must be finite");
  require(std::isfinite(sigma) && sigma >= 0.0, "ou: sigma must be >= 0");
  require(std::isfinite(b0), "ou: b0 must be finite");
}

DiffusionSpec gbm_spec(const GbmParams& p) {
  p.validate();
  return make_scalar_spec([](double x, std::span<const double> th) { return th[0] * x; },
                          [](double x, std::span<const double> th) { return th[1] * x; },
                          {p.beta, p.sigma}, p.x0, "gbm");
}

DiffusionSpec ou_spec(const OuParams& p) {
  p.validate();
  return make_scalar_spec(
      [](double x, std::span<const double> th) { return -th[0] * (x - th[1]); },
      [](double, std::span<const double> th) { return th[2]; }, {p.gamma, p.beta_bar, p.sigma},
      p.b0, "ou");
}

GbmParams gbm_params_from(const DiffusionSpec& spec) {
  require(spec.family == "gbm" && spec.theta.size() == 2, "spec is not a gbm model");
  return {spec.theta[0], spec.theta[1], spec.x0.empty() ? 1.0 : spec.x0[0]};
}

OuParams ou_params_from(const DiffusionSpec& spec) {
  require(spec.family == "ou" && spec.theta.size() == 3, "spec is not an ou model");
  return {spec.theta[0], spec.theta[1], spec.theta[2], spec.x0.empty() ? 0.0 : spec.x0[0]};
}

void TimeGrid::validate() const {
  require(std::isfinite(t_start) && std::isfinite(t_end) && t_end > t_start,
          "time grid requires t_end > t_start");
  require(n_steps >= 1, "time grid requires n_steps >= 1");
}

double TimeGrid::time(std::size_t k) const {
  if (k == n_steps) return t_end;
  return t_start + static_cast<double>(k) * dt();
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) t[k] = time(k);
  return t;
}

Path::Path(std::vector<double> times, std::vector<double> values, std::size_t dim)
    : times_(std::move(times)), values_(std::move(values)), dim_(dim) {
  require(dim_ >= 1, "path dimension must be positive");
  require(values_.size() == times_.size() * dim_, "path values do not match times");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    require(times_[k] > times_[k - 1], "path times must be strictly increasing");
  }
  for (double v : values_) require(std::isfinite(v), "path values must be finite");
}

std::vector<double> Path::coordinate(std::size_t c) const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = at(k, c);
  return out;
}

}  // namespace driftlab
