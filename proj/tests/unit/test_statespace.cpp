#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "driftlab/core/error.hpp"
#include "driftlab/core/parallel.hpp"
#include "driftlab/core/simulate.hpp"
#include "driftlab/statespace/kalman.hpp"
#include "driftlab/statespace/particle_filter.hpp"
#include "driftlab/statespace/presets.hpp"
#include "unit/oracles.hpp"

using namespace driftlab;

namespace {

std::vector<double> even_times(std::size_t n, double dt) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = dt * static_cast<double>(i + 1);
  return t;
}

struct OuCase {
  OuParams p{1.0, 0.0, 0.5, 0.0};
  ObservationModel om = gaussian_observations(0.3);
  std::vector<double> times;
  StateSpaceSample data;
};

OuCase ou_case(std::size_t n, double dt, std::uint64_t seed) {
  OuCase c;
  c.times = even_times(n, dt);
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), c.times.begin(), c.times.end());
  const Path latent = simulate_ou_at(c.p, grid, seed, 0);
  Stream noise(seed, 1, 0);
  NoisyObservationSet obs;
  std::vector<double> lv;
  for (std::size_t i = 0; i < n; ++i) {
    obs.times.push_back(c.times[i]);
    obs.y.push_back(latent.at(i + 1) + c.om.scale * noise.normal());
    lv.push_back(latent.at(i + 1));
  }
  c.data = {Path(c.times, lv, 1), obs};
  return c;
}

std::vector<double> pf_logliks(const StateModel& model, const ObservationModel& om,
                               const NoisyObservationSet& obs, FilterOptions opts,
                               std::size_t seeds, std::uint64_t base) {
  std::vector<double> out;
  for (std::size_t s = 0; s < seeds; ++s) {
    out.push_back(particle_filter(model, om, obs, opts, base + s).loglik);
  }
  return out;
}

}  // namespace

TEST_CASE("kalman: single observation closed form") {
  LinearGaussianSSM ssm;
  ssm.initial_mean = Eigen::VectorXd::Constant(1, 0.7);
  ssm.initial_cov = Eigen::MatrixXd::Constant(1, 1, 2.0);
  ssm.transition = {Eigen::MatrixXd::Identity(1, 1)};
  ssm.offset = {Eigen::VectorXd::Zero(1)};
  ssm.noise_cov = {Eigen::MatrixXd::Zero(1, 1)};
  ssm.observation = Eigen::MatrixXd::Identity(1, 1);
  ssm.observation_cov = Eigen::MatrixXd::Constant(1, 1, 0.5);
  NoisyObservationSet obs{{1.0}, {1.9}, 1};
  CHECK(kalman_loglik(ssm, obs) == doctest::Approx(oracle::normal_logpdf(1.9, 0.7, 2.5)).epsilon(1e-14));
}

TEST_CASE("kalman: zero noise and identity dynamics is singular") {
  LinearGaussianSSM ssm;
  ssm.initial_mean = Eigen::VectorXd::Zero(1);
  ssm.initial_cov = Eigen::MatrixXd::Zero(1, 1);
  ssm.transition = {Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)};
  ssm.offset = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  ssm.noise_cov = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
  ssm.observation = Eigen::MatrixXd::Identity(1, 1);
  ssm.observation_cov = Eigen::MatrixXd::Zero(1, 1);
  NoisyObservationSet obs{{1.0, 2.0}, {0.0, 0.0}, 1};
  try {
    (void)kalman_loglik(ssm, obs);
    FAIL("expected a singularity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numerical_singularity);
  }
}

TEST_CASE("kalman: matches the dense joint Gaussian density") {
  // Random time-varying scalar model; the joint law of (y_1..y_n) is built
  // directly from the state recursion as a dense covariance.
  const std::size_t n = 100;
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  LinearGaussianSSM ssm;
  ssm.initial_mean = Eigen::VectorXd::Constant(1, 0.3);
  ssm.initial_cov = Eigen::MatrixXd::Constant(1, 1, 0.8);
  const double r = 0.4;
  ssm.observation = Eigen::MatrixXd::Constant(1, 1, 1.3);
  ssm.observation_cov = Eigen::MatrixXd::Constant(1, 1, r);
  std::vector<double> a(n), c(n), q(n);
  NoisyObservationSet obs;
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = 0.5 + 0.6 * unif(gen);
    c[i] = unif(gen) - 0.5;
    q[i] = 0.1 + unif(gen);
    ssm.transition.push_back(Eigen::MatrixXd::Constant(1, 1, a[i]));
    ssm.offset.push_back(Eigen::VectorXd::Constant(1, c[i]));
    ssm.noise_cov.push_back(Eigen::MatrixXd::Constant(1, 1, q[i]));
    obs.times.push_back(static_cast<double>(i + 1));
    obs.y.push_back(3.0 * (unif(gen) - 0.5));
  }
  // x_i = A_i x_0 + sum_j (prod_{l=j+1..i} a_l)(c_j + e_j)
  Eigen::VectorXd mean_x(n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n + 1);  // loadings on (x0 - m0, e_0..e_{n-1})
  double m = 0.3;
  for (std::size_t i = 0; i < n; ++i) {
    m = a[i] * m + c[i];
    mean_x(i) = m;
    for (std::size_t j = 0; j <= n; ++j) L(i, j) = (i > 0 ? a[i] * L(i - 1, j) : (j == 0 ? a[0] : 0.0));
    L(i, i + 1) += 1.0;
  }
  Eigen::VectorXd var_src(n + 1);
  var_src(0) = 0.8;
  for (std::size_t i = 0; i < n; ++i) var_src(i + 1) = q[i];
  const Eigen::MatrixXd cov_y =
      1.69 * L * var_src.asDiagonal() * L.transpose() + r * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd resid =
      Eigen::Map<const Eigen::VectorXd>(obs.y.data(), static_cast<Eigen::Index>(n)) - 1.3 * mean_x;
  Eigen::LLT<Eigen::MatrixXd> llt(cov_y);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double dense = -0.5 * (static_cast<double>(n) * std::log(2.0 * oracle::kPi) + logdet +
                               resid.dot(llt.solve(resid)));
  CHECK(std::abs(kalman_loglik(ssm, obs) - dense) < 1e-8);
}

TEST_CASE("ou_to_ssm: equal gaps and the fast-reversion limit") {
  const OuParams p{2.0, 0.5, 0.4, 0.1};
  const auto times = even_times(5, 0.25);
  const auto ssm = ou_to_ssm(p, gaussian_observations(0.1), times);
  for (std::size_t i = 1; i < ssm.steps(); ++i) {
    CHECK(ssm.transition[i](0, 0) == ssm.transition[1](0, 0));
    CHECK(ssm.offset[i](0) == ssm.offset[1](0));
    CHECK(ssm.noise_cov[i](0, 0) == ssm.noise_cov[1](0, 0));
  }
  const OuParams fast{200.0, 0.5, 0.4, 0.1};
  const auto lim = ou_to_ssm(fast, gaussian_observations(0.1), times);
  CHECK(lim.transition[2](0, 0) < 1e-20);
  CHECK(lim.noise_cov[2](0, 0) == doctest::Approx(0.16 / 400.0).epsilon(1e-12));
  CHECK_THROWS_AS(ou_to_ssm(p, student_t_observations(0.1, 4.0), times), Error);
}

TEST_CASE("kalman: filtered means beat raw observations on OU data") {
  // Observation noise comparable to the stationary sd 0.5/sqrt(2).
  OuCase c = ou_case(400, 0.2, 7);
  c.om = gaussian_observations(0.35);
  Stream noise(7, 2, 0);
  for (std::size_t i = 0; i < c.data.observations.size(); ++i) {
    c.data.observations.y[i] = c.data.latent.at(i) + 0.35 * noise.normal();
  }
  const auto kf = kalman_filter(ou_to_ssm(c.p, c.om, c.times), c.data.observations);
  double se_filter = 0.0, se_raw = 0.0;
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    se_filter += std::pow(kf.filtered_means[i](0) - c.data.latent.at(i), 2);
    se_raw += std::pow(c.data.observations.y[i] - c.data.latent.at(i), 2);
  }
  CHECK(se_filter < 0.7 * se_raw);
}

TEST_CASE("particle filter: agrees with the Kalman log-likelihood") {
  const OuCase c = ou_case(50, 0.5, 11);
  const double exact = kalman_loglik(ou_to_ssm(c.p, c.om, c.times), c.data.observations);
  FilterOptions opts;
  opts.n_particles = 500;
  opts.substeps = 20;
  const auto ll = pf_logliks(StateModel{ou_spec(c.p)}, c.om, c.data.observations, opts, 20, 100);
  const double sd = std::sqrt(oracle::variance(ll));
  MESSAGE("pf mean " << oracle::mean(ll) << " sd " << sd << " kalman " << exact);
  CHECK(std::abs(oracle::mean(ll) - exact) <= 3.0 * sd);
}

TEST_CASE("particle filter: loglik spread shrinks when N quadruples") {
  const OuCase c = ou_case(50, 0.5, 12);
  FilterOptions opts;
  opts.substeps = 10;
  opts.n_particles = 100;
  const auto small = pf_logliks(StateModel{ou_spec(c.p)}, c.om, c.data.observations, opts, 20, 500);
  opts.n_particles = 400;
  const auto large = pf_logliks(StateModel{ou_spec(c.p)}, c.om, c.data.observations, opts, 20, 900);
  const double ratio = std::sqrt(oracle::variance(large) / oracle::variance(small));
  MESSAGE("sd ratio " << ratio);
  CHECK(ratio >= 0.3);
  CHECK(ratio <= 0.8);
}

TEST_CASE("particle filter: ess trace, resampling reset and convex hull") {
  const OuCase c = ou_case(60, 0.5, 13);
  FilterOptions opts;
  opts.n_particles = 300;
  opts.keep_clouds = true;
  const auto res = particle_filter(StateModel{ou_spec(c.p)}, c.om, c.data.observations, opts, 5);
  const double n = 300.0;
  REQUIRE(res.ess_trace.size() == 60);
  REQUIRE(!res.resample_steps.empty());
  for (double e : res.ess_trace) {
    CHECK(e > 0.0);
    CHECK(e <= n * (1.0 + 1e-12));
  }
  for (std::size_t i : res.resample_steps) {
    CHECK(res.ess_trace[i] < 0.5 * n);
    CHECK(res.ess_carried[i] == n);
  }
  REQUIRE(res.clouds.size() == 60);
  for (std::size_t i = 0; i < res.clouds.size(); ++i) {
    const auto& cloud = res.clouds[i];
    const auto w = cloud.normalized_weights();
    double sum = 0.0, s2 = 0.0;
    for (double v : w) {
      sum += v;
      s2 += v * v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(cloud.ess() == doctest::Approx(1.0 / s2).epsilon(1e-12));
    const auto [lo, hi] = std::minmax_element(cloud.states.begin(), cloud.states.end());
    CHECK(res.filtered_means.at(i) >= *lo);
    CHECK(res.filtered_means.at(i) <= *hi);
  }
}

TEST_CASE("particle filter: ess resets near N after resampling under weak observations") {
  const OuCase c = ou_case(80, 0.5, 14);
  FilterOptions opts;
  opts.n_particles = 400;
  opts.resample_fraction = 0.9;
  const auto res = particle_filter(StateModel{ou_spec(c.p)}, gaussian_observations(2.0),
                                   c.data.observations, opts, 6);
  REQUIRE(!res.resample_steps.empty());
  for (std::size_t i : res.resample_steps) {
    if (i + 1 < res.ess_trace.size()) CHECK(res.ess_trace[i + 1] > 0.8 * 400.0);
  }
}

TEST_CASE("systematic resampling preserves the weighted mean") {
  const std::size_t n = 50;
  std::vector<double> x(n), w(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = std::sin(static_cast<double>(k)) * 3.0;
    w[k] = 1.0 + static_cast<double>(k % 7);
    total += w[k];
  }
  double target = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    w[k] /= total;
    target += w[k] * x[k];
  }
  std::vector<double> means;
  Stream rng(99, 0, 0);
  for (int r = 0; r < 10000; ++r) {
    const auto idx = systematic_resample(w, rng.uniform());
    double m = 0.0;
    for (auto i : idx) m += x[i];
    means.push_back(m / static_cast<double>(n));
  }
  CHECK(std::abs(oracle::mean(means) - target) <= 3.0 * oracle::std_error(means));
}

TEST_CASE("particle filter: noise-free limit reproduces exact observations") {
  const auto spec = make_scalar_spec([](double x, std::span<const double> th) { return th[0] * x; },
                                     [](double, std::span<const double>) { return 0.0; }, {0.3},
                                     1.0);
  std::vector<double> grid{0.0};
  const auto times = even_times(20, 0.1);
  grid.insert(grid.end(), times.begin(), times.end());
  const Path truth = simulate_euler_at(spec, grid, 10, 1, 0);
  NoisyObservationSet obs;
  for (std::size_t i = 0; i < times.size(); ++i) {
    obs.times.push_back(times[i]);
    obs.y.push_back(truth.at(i + 1));
  }
  const auto res = particle_filter(spec, gaussian_observations(1e-9), obs, 50, 10, 3);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::abs(res.filtered_means.at(i) - obs.y[i]) < 1e-6);
  }
}

TEST_CASE("particle filter: degenerate weights name the step") {
  const OuCase c = ou_case(10, 0.5, 15);
  NoisyObservationSet obs = c.data.observations;
  obs.y[4] = 1e200;
  try {
    (void)particle_filter(ou_spec(c.p), gaussian_observations(1e-200), obs, 50, 5, 1);
    FAIL("expected a degenerate filter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::filter_degenerate);
    // The first step already fails: every residual overflows at this scale.
    REQUIRE(e.index().has_value());
    CHECK(std::string(e.what()).find("step " + std::to_string(*e.index())) != std::string::npos);
  }
}

TEST_CASE("particle filter: results do not depend on the worker count") {
  const OuCase c = ou_case(40, 0.5, 16);
  FilterOptions opts;
  opts.n_particles = 700;
  set_thread_count(1);
  const auto a = particle_filter(StateModel{ou_spec(c.p)}, c.om, c.data.observations, opts, 8);
  set_thread_count(4);
  const auto b = particle_filter(StateModel{ou_spec(c.p)}, c.om, c.data.observations, opts, 8);
  set_thread_count(0);
  CHECK(a.loglik == b.loglik);
  CHECK(a.filtered_means == b.filtered_means);
  CHECK(a.ess_trace == b.ess_trace);
  CHECK(a.resample_steps == b.resample_steps);
}

TEST_CASE("preset: zero step_sd moves linearly at the initial velocity") {
  IntegratedRwOptions o;
  o.coords = 2;
  o.initial_position = {1.0, -2.0};
  o.initial_velocity = {0.5, 0.25};
  o.initial_position_sd = 0.0;
  o.initial_velocity_sd = 0.0;
  const auto preset = preset_integrated_rw_t(0.0, 0.1, 4.0, o);
  std::vector<double> x(4);
  Stream rng(1, 0, 0);
  preset.model.initial(x, rng);
  double t = 0.0;
  for (int k = 0; k < 10; ++k) {
    preset.model.transition(x, t, t + 0.7, rng);
    t += 0.7;
  }
  CHECK(x[0] == doctest::Approx(1.0 + 0.5 * t).epsilon(1e-12));
  CHECK(x[2] == doctest::Approx(-2.0 + 0.25 * t).epsilon(1e-12));
  CHECK(x[1] == 0.5);
  CHECK(x[3] == 0.25);
  std::vector<double> y(2);
  preset.om.mean(x, y);
  CHECK(y[0] == x[0]);
  CHECK(y[1] == x[2]);
}

TEST_CASE("preset: large dof approaches the gaussian observation model") {
  const auto times = even_times(30, 1.0);
  const auto base = preset_integrated_rw_t(0.3, 0.5, 4.0);
  const auto data = simulate_state_space(StateModel{base.model}, base.om, times, 21);
  FilterOptions opts;
  opts.n_particles = 300;
  ObservationModel gauss = gaussian_observations(0.5);
  gauss.link = base.om.link;
  double gap_mid = 0.0, gap_big = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const double g = particle_filter(StateModel{base.model}, gauss, data.observations, opts, s).loglik;
    const auto mid = preset_integrated_rw_t(0.3, 0.5, 50.0);
    const auto big = preset_integrated_rw_t(0.3, 0.5, 1e7);
    gap_mid += std::abs(particle_filter(StateModel{mid.model}, mid.om, data.observations, opts, s).loglik - g);
    gap_big += std::abs(particle_filter(StateModel{big.model}, big.om, data.observations, opts, s).loglik - g);
  }
  MESSAGE("gap dof=50 " << gap_mid / 10 << " dof=1e7 " << gap_big / 10);
  CHECK(gap_big < 0.1 * gap_mid);
  CHECK(gap_big / 10.0 < 1e-3);
}

TEST_CASE("preset: student-t observations resist an injected outlier") {
  const double scale = 0.2;
  int wins = 0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto preset = preset_integrated_rw_t(0.3, scale, 4.0);
    const auto times = even_times(30, 1.0);
    auto data = simulate_state_space(StateModel{preset.model}, preset.om, times, 300 + r);
    data.observations.y[15] += 10.0 * scale;
    ObservationModel gauss = gaussian_observations(scale);
    gauss.link = preset.om.link;
    FilterOptions opts;
    opts.n_particles = 500;
    const auto t_res = particle_filter(StateModel{preset.model}, preset.om, data.observations, opts, r);
    const auto g_res = particle_filter(StateModel{preset.model}, gauss, data.observations, opts, r);
    const double truth = data.latent.at(15, 0);
    if (std::abs(t_res.filtered_means.at(15, 0) - truth) <
        std::abs(g_res.filtered_means.at(15, 0) - truth)) {
      ++wins;
    }
  }
  CHECK(wins >= 9);
}

TEST_CASE("profile search prefers values near the truth") {
  const OuCase c = ou_case(150, 0.5, 17);
  FilterOptions opts;
  opts.n_particles = 300;
  opts.substeps = 10;
  const auto prof = profile_loglik(
      [&](std::span<const double> th) {
        return StateModel{ou_spec(OuParams{1.0, 0.0, th[0], 0.0})};
      },
      c.om, c.data.observations, {{0.1}, {0.5}, {2.0}}, opts, 3);
  CHECK(prof.best == 1);
}

TEST_CASE("noisy observations: csv round trip and validation") {
  NoisyObservationSet obs{{0.5, 1.0, 2.5}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, 2};
  const auto table = noisy_to_table(obs);
  CHECK(table.header == std::vector<std::string>{"t", "y1", "y2"});
  std::istringstream in(table_to_csv(table));
  const auto back = noisy_from_table(parse_table(in));
  CHECK(back.times == obs.times);
  CHECK(back.y == obs.y);
  CHECK(back.dim == 2);
  NoisyObservationSet bad{{1.0, 1.0}, {0.0, 0.0}, 1};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(gaussian_observations(0.0), Error);
  CHECK_THROWS_AS(student_t_observations(1.0, -1.0), Error);
}

TEST_CASE("observation densities: gaussian and student-t closed forms") {
  const auto g = gaussian_observations(0.4);
  const double y = 1.3, x = 0.9;
  CHECK(g.log_density(std::span<const double>(&y, 1), std::span<const double>(&x, 1)) ==
        doctest::Approx(oracle::normal_logpdf(y, x, 0.16)).epsilon(1e-14));
  const auto t = student_t_observations(0.4, 3.0);
  const double z = (y - x) / 0.4;
  const double expected = std::lgamma(2.0) - std::lgamma(1.5) - 0.5 * std::log(3.0 * oracle::kPi) -
                          std::log(0.4) - 2.0 * std::log1p(z * z / 3.0);
  CHECK(t.log_density(std::span<const double>(&y, 1), std::span<const double>(&x, 1)) ==
        doctest::Approx(expected).epsilon(1e-14));
}
