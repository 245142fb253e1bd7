#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "driftlab/core/model.hpp"
#include "driftlab/core/optimize.hpp"
#include "driftlab/likelihood/observations.hpp"

namespace driftlab {

/// psi(x_s, x_t, theta) -> out (length dim).
using PsiFn = std::function<void(double x_s, double x_t, std::span<const double> theta,
                                 std::span<double> out)>;
/// Closed-form E[psi(x, X_{s+dt}, theta) | X_s = x] -> out (length dim).
using ExpectationFn =
    std::function<void(double x, double dt, std::span<const double> theta, std::span<double> out)>;

struct EstimatingFunction {
  PsiFn psi;
  std::size_t dim = 1;
  /// Monte Carlo replicates per conditional expectation.
  std::size_t replicates = 1;
  /// When set, used in place of the Monte Carlo average (the J -> infinity
  /// reference).
  ExpectationFn exact_expectation;
};

/// psi = (y, y^2, ..., y^dim); centring by the conditional expectation turns
/// these into the moment conditions y^k - E[y^k | x].
EstimatingFunction polynomial_moments(std::size_t dim, std::size_t replicates);

/// psi = (y/x, (y/x)^2, ..., (y/x)^dim), moments of the growth factor. For
/// multiplicative models such as GBM these weight each pair equally; the
/// plain polynomial family weights pairs by the level x^k, which makes its
/// root noticeably biased on short, strongly trending series.
EstimatingFunction ratio_moments(std::size_t dim, std::size_t replicates);

/// Closed-form conditional moments E[Y^k | x] of GBM for k = 1..dim, with theta
/// = {beta, sigma}.
ExpectationFn gbm_moment_expectation(std::size_t dim);
/// Closed-form E[(Y/x)^k | x] of GBM for k = 1..dim.
ExpectationFn gbm_ratio_expectation(std::size_t dim);

struct McExpectation {
  std::vector<double> value;
  std::size_t used = 0;
  std::size_t diverged = 0;
};

/// Average of psi(x, X_t^{(j)}, theta) over J Euler paths started at x at time
/// s, each with `substeps` internal steps (at least 20). Path j draws from
/// Stream(seed, stream_index, j). Divergent paths are dropped and counted;
/// if all diverge, throws estimation_failed.
McExpectation mc_conditional_expectation(const DiffusionSpec& spec, const EstimatingFunction& ef,
                                         double s, double t, double x, std::uint64_t seed,
                                         std::uint64_t stream_index = 0,
                                         std::size_t substeps = 20);

struct EeOptions {
  RootOptions root{1e-6, 200, 1e-6};
  std::size_t substeps = 20;
};

/// Solves sum_i [psi(x_i, x_{i+1}, theta) - E_theta psi(x_i, X, theta)] = 0
/// over the free parameters. Pair i uses stream_index i for every theta, so
/// the residual is a deterministic smooth function of theta.
FitResult ee_solve(const DiffusionSpec& spec, const EstimatingFunction& ef,
                   const ObservationSet& obs, const ParameterSpace& space,
                   const std::vector<double>& init_theta, std::uint64_t seed,
                   const EeOptions& options = {});

}  // namespace driftlab
