#pragma once

#include <span>
#include <string>
#include <vector>

#include "driftlab/core/model.hpp"

namespace driftlab {

struct FokkerPlanckOptions {
  std::size_t time_steps = 200;
  /// |trapezoid mass - 1| above this attaches a boundary-truncation warning.
  double mass_tolerance = 1e-3;
  /// Densities above this at either grid end also attach the warning.
  double boundary_tolerance = 1e-12;
};

struct FokkerPlanckResult {
  std::vector<double> y;
  /// Density on y, clipped at zero.
  std::vector<double> density;
  /// Smallest unclipped value; tiny negative values come from the scheme.
  double min_raw = 0.0;
  double mass = 0.0;
  bool boundary_warning = false;
  std::string warning;

  /// Linear interpolation of the density; zero outside the grid.
  [[nodiscard]] double at(double y_value) const;
};

/// Transition density p(dt, x, .) of a scalar diffusion on a uniform grid,
/// from the forward equation
///   dp/dt = -d(mu p)/dy + 1/2 d^2(sigma^2 p)/dy^2
/// with Crank-Nicolson in time, central differences in space and zero
/// Dirichlet boundaries. The start is a one-cell-wide Gaussian centred at x,
/// placed at the time tau = h^2 / sigma(x)^2 at which the diffusion alone
/// reaches that width; the solver then integrates over [tau, dt].
///
/// Throws invalid_grid for fewer than 50 cells or a non-uniform grid and
/// unsupported_dimension for vector models.
FokkerPlanckResult fokker_planck_transition_density(const DiffusionSpec& spec, double dt, double x,
                                                    std::span<const double> y_grid,
                                                    const FokkerPlanckOptions& options = {});

}  // namespace driftlab
