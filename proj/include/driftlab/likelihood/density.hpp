#pragma once

#include <cstdint>
#include <span>

#include "driftlab/core/model.hpp"
#include "driftlab/likelihood/fokker_planck.hpp"

namespace driftlab {

/// log y - log x ~ Normal((beta - sigma^2/2) dt, sigma^2 dt), as a density in y.
/// Throws degenerate_density when sigma == 0.
double gbm_transition_logdensity(const GbmParams& p, double dt, double x, double y);

/// Exact OU Gaussian transition. Throws degenerate_density when sigma == 0.
double ou_transition_logdensity(const OuParams& p, double dt, double x, double y);

/// One-step Euler approximation Normal(x + mu(x) dt, sigma(x)^2 dt).
double euler_transition_logdensity(const DiffusionSpec& spec, double dt, double x, double y);

enum class DensityKind { closed_form_gbm, closed_form_ou, euler, fokker_planck, bridge_mc };

struct FokkerPlanckSettings {
  std::size_t cells = 400;
  std::size_t time_steps = 200;
  /// Spatial range; when lower >= upper it is chosen per transition as
  /// mean +/- `auto_width` standard deviations of the Euler step.
  double lower = 0.0;
  double upper = 0.0;
  double auto_width = 12.0;
};

struct BridgeSettings {
  std::size_t m_sub = 8;
  std::size_t j_samples = 200;
  std::uint64_t seed = 0;
};

/// A transition density p_theta(dt, x, y) of one of the supported kinds. For
/// the closed-form kinds `model` must be the matching built-in family.
struct TransitionDensity {
  DensityKind kind = DensityKind::euler;
  DiffusionSpec model;
  FokkerPlanckSettings fokker_planck;
  BridgeSettings bridge;

  /// `pair_index` keys the random streams of the bridge estimator.
  [[nodiscard]] double log_density(double dt, double x, double y,
                                   std::uint64_t pair_index = 0) const;
  [[nodiscard]] TransitionDensity with_theta(std::span<const double> theta) const;
};

}  // namespace driftlab
