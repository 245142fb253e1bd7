#include "driftlab/likelihood/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "driftlab/core/error.hpp"
#include "driftlab/core/rng.hpp"

namespace driftlab {

namespace {

double log_normal_kernel(double r, double variance) {
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * r * r / variance;
}

}  // namespace

double bridge_log_density(const DiffusionSpec& spec, double dt, double x, double y,
                          std::size_t m_sub, std::size_t j_samples, std::uint64_t seed,
                          std::uint64_t pair_index) {
  require(spec.state_dim == 1, "bridge sampling supports scalar models only");
  require(m_sub >= 2, "bridge sampling requires m_sub >= 2");
  require(j_samples >= 1, "bridge sampling requires j_samples >= 1");
  require(dt > 0.0, "bridge sampling requires dt > 0");
  const double d = dt / static_cast<double>(m_sub);
  std::vector<double> log_w(j_samples);
  for (std::size_t j = 0; j < j_samples; ++j) {
    Stream rng(seed, pair_index, j);
    double cur = x;
    double lw = 0.0;
    for (std::size_t k = 0; k + 1 < m_sub; ++k) {
      const double remaining = dt - static_cast<double>(k) * d;
      const double s = spec.diffusion1(cur);
      const double mu = spec.drift1(cur);
      const double prop_mean = cur + (y - cur) * d / remaining;
      const double prop_var = s * s * d * (1.0 - d / remaining);
      const double next = prop_mean + std::sqrt(prop_var) * rng.normal();
      lw += log_normal_kernel(next - cur - mu * d, s * s * d) -
            log_normal_kernel(next - prop_mean, prop_var);
      cur = next;
    }
    const double s = spec.diffusion1(cur);
    lw += log_normal_kernel(y - cur - spec.drift1(cur) * d, s * s * d);
    log_w[j] = std::isfinite(lw) ? lw : -std::numeric_limits<double>::infinity();
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(top)) {
    fail(ErrorCode::degenerate_importance,
         "all importance weights vanish for pair " + std::to_string(pair_index), pair_index);
  }
  double acc = 0.0;
  for (double lw : log_w) acc += std::exp(lw - top);
  return top + std::log(acc / static_cast<double>(j_samples));
}

double bridge_loglikelihood(const DiffusionSpec& spec, const ObservationSet& obs,
                            std::size_t m_sub, std::size_t j_samples, std::uint64_t seed) {
  obs.validate();
  if (obs.size() < 2) fail(ErrorCode::insufficient_data, "need at least two observations");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < obs.size(); ++i) {
    total += bridge_log_density(spec, obs.times[i + 1] - obs.times[i], obs.values[i],
                                obs.values[i + 1], m_sub, j_samples, seed, i);
  }
  return total;
}

}  // namespace driftlab
