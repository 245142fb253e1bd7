#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "driftlab/core/model.hpp"
#include "driftlab/statespace/observation_model.hpp"

namespace driftlab {

/// x_i = F_i x_{i-1} + c_i + N(0, Q_i),  y_i = H x_i + N(0, R).
/// Step i maps the state before observation i-1 (or the initial state for
/// i = 0) to the state at observation i.
struct LinearGaussianSSM {
  Eigen::VectorXd initial_mean;
  Eigen::MatrixXd initial_cov;
  std::vector<Eigen::MatrixXd> transition;
  std::vector<Eigen::VectorXd> offset;
  std::vector<Eigen::MatrixXd> noise_cov;
  Eigen::MatrixXd observation;
  Eigen::MatrixXd observation_cov;

  [[nodiscard]] std::size_t steps() const noexcept { return transition.size(); }
  void validate() const;
};

struct KalmanResult {
  double loglik = 0.0;
  std::vector<Eigen::VectorXd> filtered_means;
  std::vector<Eigen::MatrixXd> filtered_covs;

  /// Filtered means as a Path at the given times.
  [[nodiscard]] Path means_path(std::span<const double> times) const;
};

/// Prediction-error decomposition. A non-positive-definite innovation
/// covariance raises numerical_singularity.
KalmanResult kalman_filter(const LinearGaussianSSM& ssm, const NoisyObservationSet& obs);
double kalman_loglik(const LinearGaussianSSM& ssm, const NoisyObservationSet& obs);

/// Exact OU discretization between consecutive times, starting from the
/// known state b0 at t_start. `om` must be gaussian.
LinearGaussianSSM ou_to_ssm(const OuParams& p, const ObservationModel& om,
                            std::span<const double> times, double t_start = 0.0);

}  // namespace driftlab
