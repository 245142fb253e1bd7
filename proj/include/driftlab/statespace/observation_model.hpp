#pragma once

#include <functional>
#include <span>
#include <vector>

#include "driftlab/core/path_io.hpp"
#include "driftlab/core/rng.hpp"

namespace driftlab {

enum class ObservationKind { gaussian, student_t };

/// Conditionally independent observation density f(y | x). Each observed
/// coordinate is link(x)_c plus Gaussian or scaled Student-t noise.
struct ObservationModel {
  ObservationKind kind = ObservationKind::gaussian;
  double scale = 1.0;
  double dof = 5.0;
  std::size_t obs_dim = 1;
  /// State -> observation mean (length obs_dim). Empty means the first
  /// obs_dim state coordinates.
  std::function<void(std::span<const double> state, std::span<double> mean)> link;

  void validate() const;
  [[nodiscard]] double log_density(std::span<const double> y, std::span<const double> state) const;
  void mean(std::span<const double> state, std::span<double> out) const;
  /// Draws y given the state.
  void sample(std::span<const double> state, Stream& rng, std::span<double> y) const;
};

ObservationModel gaussian_observations(double scale, std::size_t obs_dim = 1);
ObservationModel student_t_observations(double scale, double dof, std::size_t obs_dim = 1);

/// Noisy observations y_i at strictly increasing times, stored row-major.
struct NoisyObservationSet {
  std::vector<double> times;
  std::vector<double> y;
  std::size_t dim = 1;

  void validate() const;
  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] std::span<const double> at(std::size_t i) const { return {y.data() + i * dim, dim}; }
};

/// Header `t,y1[,y2,...]`.
Table noisy_to_table(const NoisyObservationSet& obs);
NoisyObservationSet noisy_from_table(const Table& table);

}  // namespace driftlab
