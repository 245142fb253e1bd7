#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "driftlab/core/model.hpp"
#include "driftlab/core/rng.hpp"
#include "driftlab/statespace/observation_model.hpp"

namespace driftlab {

/// Discrete-time Markov state model, an alternative to a DiffusionSpec.
struct DiscreteKernel {
  std::size_t state_dim = 1;
  /// Draws the state at the first observation time.
  std::function<void(std::span<double> state, Stream& rng)> initial;
  /// Moves the state from t_from to t_to in place.
  std::function<void(std::span<double> state, double t_from, double t_to, Stream& rng)> transition;

  void validate() const;
};

using StateModel = std::variant<DiffusionSpec, DiscreteKernel>;

/// Weighted particle cloud at one observation time.
struct ParticleCloud {
  std::size_t dim = 1;
  std::vector<double> states;  // row-major, one row per particle
  std::vector<double> log_weights;

  [[nodiscard]] std::size_t size() const noexcept { return log_weights.size(); }
  [[nodiscard]] std::span<const double> state(std::size_t k) const {
    return {states.data() + k * dim, dim};
  }
  [[nodiscard]] std::vector<double> normalized_weights() const;
  [[nodiscard]] double ess() const;
  [[nodiscard]] std::vector<double> weighted_mean() const;
};

/// Indices selected by systematic resampling with offset u in (0, 1).
std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u);

struct FilterOptions {
  std::size_t n_particles = 1000;
  /// Euler steps per inter-observation gap (diffusion models only).
  std::size_t substeps = 10;
  /// Resample when ess < resample_fraction * N.
  double resample_fraction = 0.5;
  /// Time at which diffusion particles sit at x0.
  double t_start = 0.0;
  /// Keep the weighted cloud at every observation time (before resampling).
  bool keep_clouds = false;
};

struct FilterResult {
  double loglik = 0.0;
  Path filtered_means;
  /// ESS after weighting at each observation (the resampling trigger).
  std::vector<double> ess_trace;
  /// ESS of the cloud carried to the next step (N after resampling).
  std::vector<double> ess_carried;
  std::vector<std::size_t> resample_steps;
  std::uint64_t seed = 0;
  std::vector<ParticleCloud> clouds;
};

/// Bootstrap particle filter. Particle k's moves into observation i use the
/// stream (seed, i + 1, k), so results do not depend on the worker count.
FilterResult particle_filter(const StateModel& model, const ObservationModel& om,
                             const NoisyObservationSet& obs, const FilterOptions& opts,
                             std::uint64_t seed);

FilterResult particle_filter(const DiffusionSpec& spec, const ObservationModel& om,
                             const NoisyObservationSet& obs, std::size_t n_particles,
                             std::size_t substeps, std::uint64_t seed);

/// Draws a latent trajectory and noisy observations at `times`.
struct StateSpaceSample {
  Path latent;
  NoisyObservationSet observations;
};
StateSpaceSample simulate_state_space(const StateModel& model, const ObservationModel& om,
                                      std::span<const double> times, std::uint64_t seed,
                                      std::size_t substeps = 10, double t_start = 0.0);

/// Grid search of the filter log-likelihood over candidate parameter vectors.
/// Every candidate uses the same seed.
struct ProfileResult {
  std::vector<double> loglik;
  std::size_t best = 0;
};
ProfileResult profile_loglik(const std::function<StateModel(std::span<const double>)>& make_model,
                             const ObservationModel& om, const NoisyObservationSet& obs,
                             const std::vector<std::vector<double>>& candidates,
                             const FilterOptions& opts, std::uint64_t seed);

}  // namespace driftlab
