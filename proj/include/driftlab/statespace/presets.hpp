#pragma once

#include <cstddef>
#include <vector>

#include "driftlab/statespace/observation_model.hpp"
#include "driftlab/statespace/particle_filter.hpp"

namespace driftlab {

/// Settings for the integrated random walk movement preset. Defaults are
/// placeholders and should be set for each dataset.
struct IntegratedRwOptions {
  std::size_t coords = 1;
  /// Added to the velocity when integrating position.
  double mean_velocity = 0.0;
  /// Per-coordinate initial position and velocity (empty means zeros).
  std::vector<double> initial_position;
  std::vector<double> initial_velocity;
  double initial_position_sd = 1.0;
  double initial_velocity_sd = 0.1;
};

struct StateSpacePreset {
  DiscreteKernel model;
  ObservationModel om;
};

/// State per coordinate c is (position, velocity) at indices (2c, 2c + 1).
/// Across a gap dt: position += (velocity + mean_velocity) * dt, then
/// velocity += step_sd * sqrt(dt) * Z. Positions are observed with scaled
/// Student-t noise.
StateSpacePreset preset_integrated_rw_t(double step_sd, double t_scale, double t_dof,
                                        const IntegratedRwOptions& opts = {});

}  // namespace driftlab
