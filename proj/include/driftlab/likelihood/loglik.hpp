#pragma once

#include <cstdint>
#include <vector>

#include "driftlab/core/optimize.hpp"
#include "driftlab/likelihood/density.hpp"
#include "driftlab/likelihood/observations.hpp"

namespace driftlab {

/// sum_i log p(t_{i+1} - t_i, x_i, x_{i+1}). The first observation is
/// conditioned on and contributes no term. Throws non_finite_term with the
/// offending pair index.
double discrete_loglikelihood(const TransitionDensity& td, const ObservationSet& obs);

struct MleOptions {
  NelderMeadOptions simplex{};
  /// Standard errors from the inverse observed information (numerical Hessian).
  bool standard_errors = true;
};

/// Maximum likelihood over the free parameters in `space`, by simplex search
/// on the log scale for positive parameters. Non-convergence is reported via
/// FitResult::converged; a non-finite objective at init_theta throws
/// invalid_start.
FitResult mle_fit(const TransitionDensity& td, const ObservationSet& obs,
                  const ParameterSpace& space, const std::vector<double>& init_theta,
                  const MleOptions& options = {});

}  // namespace driftlab
