#include "driftlab/statespace/kalman.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "driftlab/core/error.hpp"
#include "driftlab/core/simulate.hpp"

namespace driftlab {

namespace {

bool is_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (!m.isApprox(m.transpose(), 1e-10) && m.size() > 0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace

void LinearGaussianSSM::validate() const {
  const auto d = initial_mean.size();
  require(d >= 1, "state dimension must be positive");
  require(initial_cov.rows() == d && initial_cov.cols() == d, "initial covariance has wrong shape");
  require(is_psd(initial_cov), "initial covariance must be positive semi-definite");
  require(offset.size() == transition.size() && noise_cov.size() == transition.size(),
          "per-step transition, offset and noise lists must have equal length");
  for (std::size_t i = 0; i < transition.size(); ++i) {
    require(transition[i].rows() == d && transition[i].cols() == d, "transition has wrong shape");
    require(offset[i].size() == d, "offset has wrong length");
    require(noise_cov[i].rows() == d && noise_cov[i].cols() == d, "noise covariance has wrong shape");
    require(is_psd(noise_cov[i]), "noise covariance must be positive semi-definite");
  }
  require(observation.cols() == d, "observation matrix has wrong width");
  require(observation_cov.rows() == observation.rows() &&
              observation_cov.cols() == observation.rows(),
          "observation covariance has wrong shape");
  require(is_psd(observation_cov), "observation covariance must be positive semi-definite");
}

Path KalmanResult::means_path(std::span<const double> times) const {
  require(times.size() == filtered_means.size(), "times do not match the filtered means");
  const std::size_t d = filtered_means.empty() ? 1 : static_cast<std::size_t>(filtered_means[0].size());
  std::vector<double> values;
  for (const auto& m : filtered_means) values.insert(values.end(), m.data(), m.data() + m.size());
  return Path(std::vector<double>(times.begin(), times.end()), std::move(values), d);
}

KalmanResult kalman_filter(const LinearGaussianSSM& ssm, const NoisyObservationSet& obs) {
  ssm.validate();
  obs.validate();
  require(obs.size() == ssm.steps(), "number of observations must equal the number of steps");
  require(static_cast<Eigen::Index>(obs.dim) == ssm.observation.rows(),
          "observation dimension does not match the observation matrix");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const auto& H = ssm.observation;
  KalmanResult res;
  Eigen::VectorXd m = ssm.initial_mean;
  Eigen::MatrixXd P = ssm.initial_cov;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    m = ssm.transition[i] * m + ssm.offset[i];
    P = ssm.transition[i] * P * ssm.transition[i].transpose() + ssm.noise_cov[i];
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(obs.at(i).data(), static_cast<Eigen::Index>(obs.dim));
    const Eigen::VectorXd v = y - H * m;
    Eigen::MatrixXd S = H * P * H.transpose() + ssm.observation_cov;
    S = 0.5 * (S + S.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    const Eigen::VectorXd l_diag = llt.matrixL().toDenseMatrix().diagonal();
    if (llt.info() != Eigen::Success || !(l_diag.minCoeff() > 1e-150)) {
      fail(ErrorCode::numerical_singularity,
           "innovation covariance is singular at step " + std::to_string(i), i);
    }
    const Eigen::VectorXd Sinv_v = llt.solve(v);
    const double logdet = 2.0 * l_diag.array().log().sum();
    res.loglik += -0.5 * (static_cast<double>(v.size()) * log_2pi + logdet + v.dot(Sinv_v));
    const Eigen::MatrixXd K = llt.solve(H * P).transpose();
    m += K * v;
    P = P - K * H * P;
    P = 0.5 * (P + P.transpose());
    res.filtered_means.push_back(m);
    res.filtered_covs.push_back(P);
  }
  return res;
}

double kalman_loglik(const LinearGaussianSSM& ssm, const NoisyObservationSet& obs) {
  return kalman_filter(ssm, obs).loglik;
}

LinearGaussianSSM ou_to_ssm(const OuParams& p, const ObservationModel& om,
                            std::span<const double> times, double t_start) {
  p.validate();
  om.validate();
  require(om.kind == ObservationKind::gaussian, "the Kalman route needs gaussian observations");
  require(om.obs_dim == 1 && !om.link, "the Kalman route needs a scalar identity link");
  require(!times.empty() && times.front() >= t_start, "times must start at or after t_start");
  LinearGaussianSSM ssm;
  ssm.initial_mean = Eigen::VectorXd::Constant(1, p.b0);
  ssm.initial_cov = Eigen::MatrixXd::Zero(1, 1);
  double prev = t_start;
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(i == 0 || times[i] > times[i - 1], "times must be strictly increasing");
    const double dt = times[i] - prev;
    const double decay = std::exp(-p.gamma * dt);
    const auto moments = ou_transition_moments(p, dt, 0.0);
    ssm.transition.push_back(Eigen::MatrixXd::Constant(1, 1, decay));
    ssm.offset.push_back(Eigen::VectorXd::Constant(1, p.beta_bar * (1.0 - decay)));
    ssm.noise_cov.push_back(Eigen::MatrixXd::Constant(1, 1, moments.variance));
    prev = times[i];
  }
  ssm.observation = Eigen::MatrixXd::Identity(1, 1);
  ssm.observation_cov = Eigen::MatrixXd::Constant(1, 1, om.scale * om.scale);
  return ssm;
}

}  // namespace driftlab
