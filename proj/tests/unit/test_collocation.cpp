#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "driftlab/collocation/collocation.hpp"
#include "driftlab/core/error.hpp"
#include "unit/oracles.hpp"

using namespace driftlab;

namespace {

// dx = beta x dt + sigma dB with theta = {beta, sigma}.
DiffusionSpec linear_growth(double beta, double sigma) {
  return make_scalar_spec([](double x, std::span<const double> th) { return th[0] * x; },
                          [](double, std::span<const double> th) { return th[1]; },
                          {beta, sigma}, 1.0);
}

NoisyObservationSet exp_data(double beta, std::size_t n, double t_end, double noise,
                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  NoisyObservationSet obs;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
    obs.times.push_back(t);
    obs.y.push_back(std::exp(beta * t) + noise * z(gen));
  }
  return obs;
}

CollocationOptions beta_only() {
  CollocationOptions o;
  o.space.free = {0};
  o.space.positive = {false};
  return o;
}

}  // namespace

TEST_CASE("bspline: partition of unity, derivative and size") {
  const BSplineBasis basis({0.0, 0.3, 0.5, 1.2, 2.0});
  CHECK(basis.size() == 3 + 4);
  std::vector<double> ones(basis.size(), 1.0), lin(basis.size());
  // Greville abscissae reproduce the identity function.
  const auto& k = basis.knots();
  for (std::size_t j = 0; j < basis.size(); ++j) lin[j] = (k[j + 1] + k[j + 2] + k[j + 3]) / 3.0;
  for (double t = 0.0; t <= 2.0; t += 0.0625) {
    CHECK(basis.value(ones, t) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(basis.derivative(ones, t) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(basis.value(lin, t) == doctest::Approx(t).epsilon(1e-13));
    CHECK(basis.derivative(lin, t) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(BSplineBasis({0.0, 0.0, 1.0}), Error);
}

TEST_CASE("bspline: derivative matches finite differences") {
  const BSplineBasis basis({0.0, 0.2, 0.7, 1.0, 1.6});
  std::vector<double> c{0.3, -1.0, 2.0, 0.5, 0.1, 1.4, -0.6};
  for (double t : {0.05, 0.33, 0.9, 1.2, 1.55}) {
    const double h = 1e-6;
    const double fd = (basis.value(c, t + h) - basis.value(c, t - h)) / (2.0 * h);
    CHECK(basis.derivative(c, t) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("bspline: knot insertion preserves the curve") {
  const BSplineBasis basis({0.0, 0.5, 1.0, 2.0});
  std::vector<double> c{1.0, 0.2, 3.0, -1.0, 0.5, 2.0};
  const auto [fine, fc] = basis.insert_knot(0.8, c);
  CHECK(fine.size() == basis.size() + 1);
  for (double t = 0.0; t <= 2.0; t += 0.03125) {
    CHECK(fine.value(fc, t) == doctest::Approx(basis.value(c, t)).epsilon(1e-13));
  }
}

TEST_CASE("objective: exact solution of a linear drift has zero penalty") {
  // Constant drift: the solution 1 + 0.5 t lies in the spline space.
  const auto spec = make_scalar_spec([](double, std::span<const double> th) { return th[0]; },
                                     [](double, std::span<const double>) { return 1.0; }, {0.5}, 1.0);
  const BSplineBasis basis({0.0, 0.4, 1.0, 1.5, 2.0});
  const auto& k = basis.knots();
  std::vector<double> c(basis.size());
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = 1.0 + 0.5 * (k[j + 1] + k[j + 2] + k[j + 3]) / 3.0;
  NoisyObservationSet obs{{0.0, 1.0, 2.0}, {1.0, 1.5, 2.0}, 1};
  const CollocationProblem prob(basis, obs, gaussian_observations(0.1), spec, {1e3});
  const auto parts = prob.evaluate(c, spec.theta);
  CHECK(parts.penalty <= 1e-10);
  CHECK(parts.total() == doctest::Approx(parts.data + parts.penalty).epsilon(1e-12));
}

TEST_CASE("objective: lambda zero is the smoother's negative log-likelihood") {
  const auto obs = exp_data(0.3, 12, 2.0, 0.05, 1);
  const auto basis = basis_from_observations(obs);
  const auto om = gaussian_observations(0.05);
  const auto spec = linear_growth(0.3, 0.1);
  const CollocationProblem prob(basis, obs, om, spec, {0.0});
  const auto c = prob.initial_coeffs();
  double nll = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    nll -= oracle::normal_logpdf(obs.y[i], basis.value(c, obs.times[i]), 0.0025);
  }
  CHECK(prob.objective(c, spec.theta) == doctest::Approx(nll).epsilon(1e-12));
}

TEST_CASE("objective: sigma-weighted penalty algebra") {
  const auto obs = exp_data(0.3, 15, 2.0, 0.05, 2);
  const auto basis = basis_from_observations(obs);
  const auto om = gaussian_observations(0.05);
  for (double lam_prime : {0.5, 3.0, 1e4}) {
    const auto spec = linear_growth(0.25, map_equivalent_sigma(lam_prime));
    const CollocationProblem plain(basis, obs, om, spec, {1.0, WeightMode::unweighted});
    const CollocationProblem weighted(basis, obs, om, spec, {1.0, WeightMode::sigma_weighted});
    const auto c = plain.initial_coeffs();
    const double a = weighted.evaluate(c, spec.theta).penalty;
    const double b = 2.0 * lam_prime * plain.evaluate(c, spec.theta).penalty;
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
  }
  const auto degenerate = linear_growth(0.25, 0.0);
  const CollocationProblem bad(basis, obs, om, degenerate, {1.0, WeightMode::sigma_weighted});
  try {
    (void)bad.objective(bad.initial_coeffs(), degenerate.theta);
    FAIL("expected a weight singularity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::weight_singularity);
  }
}

TEST_CASE("map_equivalent_sigma") {
  CHECK(map_equivalent_sigma(0.5) == 1.0);
  CHECK(map_equivalent_sigma(2.0) == 0.5);
  for (double lam : {1e-3, 0.7, 12.0, 1e6}) {
    CHECK(std::abs(lambda_from_sigma(map_equivalent_sigma(lam)) - lam) <= 1e-15 * lam);
  }
  CHECK_THROWS_AS(map_equivalent_sigma(0.0), Error);
}

TEST_CASE("objective: working gradient matches finite differences") {
  const auto obs = exp_data(0.3, 10, 2.0, 0.05, 3);
  const auto basis = basis_from_observations(obs);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const auto spec = make_scalar_spec(
      [](double x, std::span<const double> th) { return th[0] * x * (1.0 - x / 4.0); },
      [](double x, std::span<const double> th) { return th[1] * (1.0 + 0.2 * x * x); }, {0.4, 0.3},
      1.0);
  for (auto mode : {WeightMode::unweighted, WeightMode::sigma_weighted}) {
    for (const auto& om : {gaussian_observations(0.1), student_t_observations(0.1, 4.0)}) {
      const CollocationProblem prob(basis, obs, om, spec, {50.0, mode});
      for (int trial = 0; trial < 3; ++trial) {
        auto c = prob.initial_coeffs();
        for (double& v : c) v += u(gen);
        std::vector<double> g(c.size());
        prob.gradient(c, spec.theta, g);
        for (std::size_t j = 0; j < c.size(); ++j) {
          const double h = 1e-6;
          auto cp = c, cm = c;
          cp[j] += h;
          cm[j] -= h;
          const double fd = (prob.objective(cp, spec.theta) - prob.objective(cm, spec.theta)) / (2.0 * h);
          CHECK(std::abs(g[j] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }
}

TEST_CASE("collocation fit: recovers beta from noiseless exponential data") {
  const auto obs = exp_data(0.3, 50, 2.0, 0.0, 0);
  const auto fit = collocation_fit(obs, gaussian_observations(1e-6), linear_growth(0.1, 1.0),
                                   basis_from_observations(obs), {1e4}, {}, beta_only());
  MESSAGE("beta_hat " << fit.fit.theta_hat[0] << " iterations " << fit.fit.iterations);
  CHECK(fit.fit.converged);
  CHECK(std::abs(fit.fit.theta_hat[0] - 0.3) / 0.3 <= 0.01);
  CHECK(fit.fit.objective == doctest::Approx(fit.parts.data + fit.parts.penalty).epsilon(1e-12));
  const auto table = trajectory_table(fit);
  CHECK(table.header == std::vector<std::string>{"t", "x_fit", "dxdt_fit"});
}

TEST_CASE("collocation fit: residual integral falls as lambda grows") {
  const auto obs = exp_data(0.3, 30, 2.0, 0.05, 9);
  const auto basis = basis_from_observations(obs);
  const auto om = gaussian_observations(0.05);
  std::vector<double> integrals;
  double data_free = 0.0;
  std::vector<double> data_terms;
  for (double lam : {1e-6, 1e-2, 1.0, 1e2, 1e4}) {
    const auto fit = collocation_fit(obs, om, linear_growth(0.1, 1.0), basis, {lam}, {}, beta_only());
    MESSAGE("lambda " << lam << " integral " << fit.parts.residual_integral << " data "
                      << fit.parts.data << " beta " << fit.fit.theta_hat[0] << " outer "
                      << fit.fit.iterations << " conv " << fit.fit.converged);
    if (lam == 1e-6) {
      data_free = fit.parts.data;
    } else {
      integrals.push_back(fit.parts.residual_integral);
      data_terms.push_back(fit.parts.data);
    }
  }
  for (std::size_t i = 1; i < integrals.size(); ++i) {
    CHECK(integrals[i] <= integrals[i - 1] * (1.0 + 1e-6) + 1e-12);
  }
  for (double d : data_terms) CHECK(d >= data_free - 1e-6);
}

TEST_CASE("collocation fit: quadrature refinement on a smooth fit") {
  const auto obs = exp_data(0.3, 20, 2.0, 0.0, 4);
  const auto basis = basis_from_observations(obs);
  const auto om = gaussian_observations(1e-4);
  const auto spec = linear_growth(0.1, 1.0);
  const auto fit = collocation_fit(obs, om, spec, basis, {1e4}, {}, beta_only());
  PenaltySpec fine{1e4};
  fine.nodes_per_interval = 20;
  const CollocationProblem coarse_prob(basis, obs, om, spec, {1e4});
  const CollocationProblem fine_prob(basis, obs, om, spec, fine);
  const double coarse = coarse_prob.evaluate(fit.coeffs, fit.fit.theta_full).penalty;
  const double refined = fine_prob.evaluate(fit.coeffs, fit.fit.theta_full).penalty;
  MESSAGE("penalty " << coarse << " refined " << refined);
  CHECK(std::abs(coarse - refined) < 1e-8);
}

TEST_CASE("collocation fit: knot insertion cannot worsen the optimum") {
  const auto obs = exp_data(0.3, 20, 2.0, 0.02, 4);
  const auto basis = basis_from_observations(obs);
  const auto om = gaussian_observations(0.02);
  const auto spec = linear_growth(0.1, 1.0);
  const auto fit = collocation_fit(obs, om, spec, basis, {10.0}, {}, beta_only());
  const auto [bigger, start] = basis.insert_knot(0.5 * (obs.times[3] + obs.times[4]), fit.coeffs);
  const auto refit = collocation_fit(obs, om, spec, bigger, {10.0}, {start, fit.fit.theta_full},
                                     beta_only());
  CHECK(refit.fit.objective <= fit.fit.objective + 1e-9 * (1.0 + std::abs(fit.fit.objective)));
}

TEST_CASE("collocation fit: weighted fit equals unweighted fit with rescaled lambda") {
  const auto obs = exp_data(0.3, 25, 2.0, 0.03, 6);
  const auto basis = basis_from_observations(obs);
  const auto om = gaussian_observations(0.03);
  const double s = 0.4;
  const auto spec = linear_growth(0.1, s);
  const auto w = collocation_fit(obs, om, spec, basis, {5.0, WeightMode::sigma_weighted}, {}, beta_only());
  const auto u = collocation_fit(obs, om, spec, basis, {5.0 / (s * s)}, {}, beta_only());
  CHECK(w.fit.theta_hat[0] == doctest::Approx(u.fit.theta_hat[0]).epsilon(1e-6));
  double max_gap = 0.0;
  for (std::size_t j = 0; j < w.coeffs.size(); ++j) max_gap = std::max(max_gap, std::abs(w.coeffs[j] - u.coeffs[j]));
  CHECK(max_gap < 1e-6);
}
