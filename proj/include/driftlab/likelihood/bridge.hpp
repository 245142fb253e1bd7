#pragma once

#include <cstdint>
#include <vector>

#include "driftlab/core/model.hpp"
#include "driftlab/likelihood/observations.hpp"

namespace driftlab {

/// Importance-sampling estimate of log p(dt, x, y) with m_sub Euler substeps.
/// The m_sub - 1 interior values are proposed sequentially from the modified
/// diffusion bridge: from x_k at time s_k, with remaining time r_k = dt - s_k
/// and substep d,
///   x_{k+1} ~ Normal(x_k + (y - x_k) d / r_k, sigma(x_k)^2 d (1 - d / r_k)).
/// Each sample is weighted by the product of Euler substep densities over the
/// proposal density. Standard normals come from Stream(seed, pair_index,
/// sample), so the estimate is a smooth deterministic function of theta.
///
/// Throws degenerate_importance (index = pair_index) when every weight is zero
/// or non-finite.
double bridge_log_density(const DiffusionSpec& spec, double dt, double x, double y,
                          std::size_t m_sub, std::size_t j_samples, std::uint64_t seed,
                          std::uint64_t pair_index = 0);

/// Sum over consecutive observation pairs of bridge_log_density, pair i using
/// pair_index = i.
double bridge_loglikelihood(const DiffusionSpec& spec, const ObservationSet& obs,
                            std::size_t m_sub, std::size_t j_samples, std::uint64_t seed);

}  // namespace driftlab
