#include "driftlab/statespace/presets.hpp"

#include <cmath>

#include "driftlab/core/error.hpp"

namespace driftlab {

StateSpacePreset preset_integrated_rw_t(double step_sd, double t_scale, double t_dof,
                                        const IntegratedRwOptions& opts) {
  require(step_sd >= 0.0 && std::isfinite(step_sd), "step_sd must be >= 0");
  require(opts.coords >= 1, "coords must be >= 1");
  require(opts.initial_position.empty() || opts.initial_position.size() == opts.coords,
          "initial_position must have one entry per coordinate");
  require(opts.initial_velocity.empty() || opts.initial_velocity.size() == opts.coords,
          "initial_velocity must have one entry per coordinate");
  require(opts.initial_position_sd >= 0.0 && opts.initial_velocity_sd >= 0.0,
          "initial spreads must be >= 0");
  const std::size_t coords = opts.coords;
  const std::vector<double> pos0 =
      opts.initial_position.empty() ? std::vector<double>(coords, 0.0) : opts.initial_position;
  const std::vector<double> vel0 =
      opts.initial_velocity.empty() ? std::vector<double>(coords, 0.0) : opts.initial_velocity;

  StateSpacePreset preset;
  preset.model.state_dim = 2 * coords;
  preset.model.initial = [=, pos_sd = opts.initial_position_sd,
                          vel_sd = opts.initial_velocity_sd](std::span<double> x, Stream& rng) {
    for (std::size_t c = 0; c < coords; ++c) {
      x[2 * c] = pos0[c] + pos_sd * rng.normal();
      x[2 * c + 1] = vel0[c] + vel_sd * rng.normal();
    }
  };
  preset.model.transition = [=, drift = opts.mean_velocity](std::span<double> x, double t_from,
                                                            double t_to, Stream& rng) {
    const double dt = t_to - t_from;
    if (dt <= 0.0) return;
    const double sd = step_sd * std::sqrt(dt);
    for (std::size_t c = 0; c < coords; ++c) {
      x[2 * c] += (x[2 * c + 1] + drift) * dt;
      x[2 * c + 1] += sd * rng.normal();
    }
  };
  preset.om = student_t_observations(t_scale, t_dof, coords);
  preset.om.link = [coords](std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < coords; ++c) out[c] = x[2 * c];
  };
  return preset;
}

}  // namespace driftlab
