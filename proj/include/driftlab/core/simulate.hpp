#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "driftlab/core/model.hpp"

namespace driftlab {

// All simulators draw their standard normals from Stream(seed, replicate):
// the normal driving step k, coordinate c is draw number k * dim + c. Two
// simulators called with the same (seed, replicate) therefore share their
// Brownian increments, which is what paired (strong-error) comparisons need.

/// Euler-Maruyama: x_{k+1} = x_k + mu(x_k) dt + sigma(x_k) sqrt(dt) Z_k.
/// Throws simulation_diverged (index = step) on a non-finite evaluation.
Path simulate_euler(const DiffusionSpec& spec, const TimeGrid& grid, std::uint64_t seed,
                    std::uint64_t replicate = 0);

/// Euler-Maruyama at arbitrary increasing `times`, with `substeps` equal
/// internal steps per interval; only the requested times are returned.
Path simulate_euler_at(const DiffusionSpec& spec, std::span<const double> times,
                       std::size_t substeps, std::uint64_t seed, std::uint64_t replicate = 0);

/// Exact GBM solution x0 exp((beta - sigma^2/2) t + sigma B_t).
Path simulate_gbm_exact(const GbmParams& p, const TimeGrid& grid, std::uint64_t seed,
                        std::uint64_t replicate = 0);
Path simulate_gbm_exact_at(const GbmParams& p, std::span<const double> times,
                           std::uint64_t seed, std::uint64_t replicate = 0);

/// OU path by its exact Gaussian transition.
Path simulate_ou(const OuParams& p, const TimeGrid& grid, std::uint64_t seed,
                 std::uint64_t replicate = 0);
Path simulate_ou_at(const OuParams& p, std::span<const double> times, std::uint64_t seed,
                    std::uint64_t replicate = 0);

/// Growth with an OU growth rate: d(beta_t) as in simulate_ou, dX = beta_t X dt.
/// X is advanced with beta frozen over each step, x_{k+1} = x_k exp(beta_k dt).
struct TvGrowthPaths {
  Path beta;
  Path x;
};
TvGrowthPaths simulate_tv_growth(const OuParams& ou, double x0, const TimeGrid& grid,
                                 std::uint64_t seed, std::uint64_t replicate = 0);

/// Sum of squared increments, summed over coordinates.
double quadratic_variation(const Path& path);

/// Conditional OU moments over a gap dt.
struct GaussianMoments {
  double mean;
  double variance;
};
GaussianMoments ou_transition_moments(const OuParams& p, double dt, double x);

}  // namespace driftlab
