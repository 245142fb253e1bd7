#include "driftlab/core/simulate.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "driftlab/core/error.hpp"
#include "driftlab/core/rng.hpp"

namespace driftlab {

namespace {

void check_times(std::span<const double> times) {
  require(!times.empty(), "at least one time point is required");
  for (std::size_t k = 1; k < times.size(); ++k) {
    require(times[k] > times[k - 1], "times must be strictly increasing");
  }
}

// One Euler step in place. Returns false when any evaluation is non-finite.
bool euler_step(const DiffusionSpec& spec, std::vector<double>& x, std::vector<double>& mu,
                std::vector<double>& sd, double dt, Stream& rng) {
  spec.drift(x, spec.theta, mu);
  spec.diffusion(x, spec.theta, sd);
  const double root_dt = std::sqrt(dt);
  bool finite = true;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double z = rng.normal();
    if (!std::isfinite(mu[c]) || !std::isfinite(sd[c])) finite = false;
    x[c] += mu[c] * dt + sd[c] * root_dt * z;
    if (!std::isfinite(x[c])) finite = false;
  }
  return finite;
}

}  // namespace

Path simulate_euler(const DiffusionSpec& spec, const TimeGrid& grid, std::uint64_t seed,
                    std::uint64_t replicate) {
  grid.validate();
  spec.validate();
  const std::size_t d = spec.state_dim;
  const double dt = grid.dt();
  std::vector<double> values((grid.n_steps + 1) * d);
  std::vector<double> x = spec.x0, mu(d), sd(d);
  std::copy(x.begin(), x.end(), values.begin());
  Stream rng(seed, replicate);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    if (!euler_step(spec, x, mu, sd, dt, rng)) {
      fail(ErrorCode::simulation_diverged,
           "non-finite drift/diffusion at step " + std::to_string(k), k);
    }
    std::copy(x.begin(), x.end(), values.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
  }
  return Path(grid.times(), std::move(values), d);
}

Path simulate_euler_at(const DiffusionSpec& spec, std::span<const double> times,
                       std::size_t substeps, std::uint64_t seed, std::uint64_t replicate) {
  spec.validate();
  check_times(times);
  require(substeps >= 1, "substeps must be >= 1");
  const std::size_t d = spec.state_dim;
  std::vector<double> values(times.size() * d);
  std::vector<double> x = spec.x0, mu(d), sd(d);
  std::copy(x.begin(), x.end(), values.begin());
  Stream rng(seed, replicate);
  std::size_t step = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = (times[i] - times[i - 1]) / static_cast<double>(substeps);
    for (std::size_t s = 0; s < substeps; ++s, ++step) {
      if (!euler_step(spec, x, mu, sd, dt, rng)) {
        fail(ErrorCode::simulation_diverged,
             "non-finite drift/diffusion at step " + std::to_string(step), step);
      }
    }
    std::copy(x.begin(), x.end(), values.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return Path(std::vector<double>(times.begin(), times.end()), std::move(values), d);
}

Path simulate_gbm_exact_at(const GbmParams& p, std::span<const double> times,
                           std::uint64_t seed, std::uint64_t replicate) {
  p.validate();
  check_times(times);
  Stream rng(seed, replicate);
  std::vector<double> values(times.size());
  const double drift = p.beta - 0.5 * p.sigma * p.sigma;
  double brownian = 0.0;
  values[0] = p.x0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    brownian += std::sqrt(times[k] - times[k - 1]) * rng.normal();
    const double elapsed = times[k] - times[0];
    values[k] = p.x0 * std::exp(drift * elapsed + p.sigma * brownian);
  }
  return Path(std::vector<double>(times.begin(), times.end()), std::move(values), 1);
}

Path simulate_gbm_exact(const GbmParams& p, const TimeGrid& grid, std::uint64_t seed,
                        std::uint64_t replicate) {
  grid.validate();
  const auto t = grid.times();
  return simulate_gbm_exact_at(p, t, seed, replicate);
}

GaussianMoments ou_transition_moments(const OuParams& p, double dt, double x) {
  const double decay = std::exp(-p.gamma * dt);
  const double variance =
      p.sigma * p.sigma * (-std::expm1(-2.0 * p.gamma * dt)) / (2.0 * p.gamma);
  return {p.beta_bar + (x - p.beta_bar) * decay, variance};
}

Path simulate_ou_at(const OuParams& p, std::span<const double> times, std::uint64_t seed,
                    std::uint64_t replicate) {
  p.validate();
  check_times(times);
  Stream rng(seed, replicate);
  std::vector<double> values(times.size());
  values[0] = p.b0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const auto m = ou_transition_moments(p, times[k] - times[k - 1], values[k - 1]);
    values[k] = m.mean + std::sqrt(m.variance) * rng.normal();
  }
  return Path(std::vector<double>(times.begin(), times.end()), std::move(values), 1);
}

Path simulate_ou(const OuParams& p, const TimeGrid& grid, std::uint64_t seed,
                 std::uint64_t replicate) {
  grid.validate();
  const auto t = grid.times();
  return simulate_ou_at(p, t, seed, replicate);
}

TvGrowthPaths simulate_tv_growth(const OuParams& ou, double x0, const TimeGrid& grid,
                                 std::uint64_t seed, std::uint64_t replicate) {
  require(std::isfinite(x0) && x0 > 0.0, "tv_growth: x0 must be > 0");
  Path beta = simulate_ou(ou, grid, seed, replicate);
  const double dt = grid.dt();
  std::vector<double> x(beta.size());
  x[0] = x0;
  for (std::size_t k = 0; k + 1 < beta.size(); ++k) {
    x[k + 1] = x[k] * std::exp(beta.at(k) * dt);
    if (!std::isfinite(x[k + 1]) || x[k + 1] <= 0.0) {
      fail(ErrorCode::simulation_diverged,
           "growth state left the representable range at step " + std::to_string(k), k);
    }
  }
  return {beta, Path(beta.times(), std::move(x), 1)};
}

double quadratic_variation(const Path& path) {
  if (path.size() < 2) {
    fail(ErrorCode::insufficient_data, "quadratic variation needs at least 2 points");
  }
  double qv = 0.0;
  const auto& v = path.data();
  const std::size_t d = path.dim();
  for (std::size_t i = d; i < v.size(); ++i) {
    const double inc = v[i] - v[i - d];
    qv += inc * inc;
  }
  return qv;
}

}  // namespace driftlab
