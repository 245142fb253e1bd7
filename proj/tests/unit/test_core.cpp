#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "driftlab/core/error.hpp"
#include "driftlab/core/lamperti.hpp"
#include "driftlab/core/optimize.hpp"
#include "driftlab/core/path_io.hpp"
#include "driftlab/core/rng.hpp"
#include "driftlab/core/simulate.hpp"
#include "unit/oracles.hpp"

using namespace driftlab;

TEST_CASE("stream draws are pure functions of key and counter") {
  Stream a(42, 3, 7), b(42, 3, 7), c(42, 3, 8);
  std::vector<double> va, vb;
  for (int i = 0; i < 10; ++i) {
    va.push_back(a.normal());
    vb.push_back(b.normal());
  }
  CHECK(va == vb);
  CHECK(c.normal() != va.front());
  Stream d(42, 3, 7);
  d.seek(4);
  CHECK(d.normal() == va[2]);
}

TEST_CASE("stream normals have unit moments") {
  Stream s(1, 0);
  std::vector<double> z(200000);
  for (auto& v : z) v = s.normal();
  CHECK(std::abs(oracle::mean(z)) < 4.0 / std::sqrt(200000.0));
  CHECK(oracle::variance(z) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("simulate_euler: noise-free GBM follows the Euler recursion") {
  const auto spec = gbm_spec({0.1, 0.0, 1.0});
  const Path p = simulate_euler(spec, {0.0, 1.0, 10}, 3);
  CHECK(p.size() == 11);
  CHECK(p.at(0) == 1.0);
  CHECK(p.back() == doctest::Approx(std::pow(1.01, 10)).epsilon(1e-14));
  CHECK(p.back() == doctest::Approx(1.1046221254112045).epsilon(1e-14));
}

TEST_CASE("simulate_euler: first value is x0 and repeated calls are bit-identical") {
  const auto spec = ou_spec({2.0, 0.3, 0.5, -1.25});
  const TimeGrid grid{0.0, 3.0, 57};
  const Path a = simulate_euler(spec, grid, 99, 4);
  const Path b = simulate_euler(spec, grid, 99, 4);
  CHECK(a.at(0) == -1.25);
  CHECK(a == b);
  CHECK(!(a == simulate_euler(spec, grid, 99, 5)));
}

TEST_CASE("simulate_euler: GBM mean matches x0 exp(beta T)") {
  const auto spec = gbm_spec({0.05, 0.2, 1.0});
  const TimeGrid grid{0.0, 1.0, 100};
  std::vector<double> ends(100000);
  for (std::size_t r = 0; r < ends.size(); ++r) ends[r] = simulate_euler(spec, grid, 2024, r).back();
  CHECK(std::abs(oracle::mean(ends) - std::exp(0.05)) < 3.0 * oracle::std_error(ends));
}

TEST_CASE("simulate_euler: non-finite drift reports the step") {
  auto spec = make_scalar_spec(
      [](double x, std::span<const double>) { return x > 2.05 ? std::nan("") : 1.0; },
      [](double, std::span<const double>) { return 0.0; }, {}, 0.0);
  try {
    (void)simulate_euler(spec, {0.0, 5.0, 50}, 1);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::simulation_diverged);
    REQUIRE(e.index().has_value());
    // x_k = 0.1 k first exceeds 2.05 at k = 21, the first NaN evaluation.
    CHECK(*e.index() == 21);
  }
}

TEST_CASE("simulate_gbm_exact: noise-free and drift-cancelling cases") {
  const Path p = simulate_gbm_exact({0.3, 0.0, 2.0}, {0.0, 2.0, 8}, 5);
  for (std::size_t k = 0; k < p.size(); ++k) {
    CHECK(p.at(k) == doctest::Approx(2.0 * std::exp(0.3 * p.time(k))).epsilon(1e-14));
  }
  const GbmParams cancel{0.045, 0.3, 1.0};
  std::vector<double> logs(20000);
  for (std::size_t r = 0; r < logs.size(); ++r) {
    logs[r] = std::log(simulate_gbm_exact(cancel, {0.0, 1.0, 4}, 17, r).back());
  }
  CHECK(std::abs(oracle::mean(logs)) < 3.0 * oracle::std_error(logs));
}

TEST_CASE("simulate_gbm_exact: log-variance matches sigma^2 T") {
  const GbmParams p{0.1, 0.3, 1.0};
  std::vector<double> logs(100000);
  for (std::size_t r = 0; r < logs.size(); ++r) {
    const Path path = simulate_gbm_exact(p, {0.0, 2.0, 2}, 8, r);
    logs[r] = std::log(path.back());
    REQUIRE(path.at(1) > 0.0);
  }
  // Sampling sd of a variance estimate from n normals is var * sqrt(2/(n-1)).
  const double se = 0.18 * std::sqrt(2.0 / (logs.size() - 1.0));
  CHECK(std::abs(oracle::variance(logs) - 0.18) < 4.0 * se);
}

TEST_CASE("simulate_ou: deterministic relaxation and stationary moments") {
  const Path flat = simulate_ou({1.5, 0.7, 0.0, 0.7}, {0.0, 4.0, 40}, 1);
  for (std::size_t k = 0; k < flat.size(); ++k) CHECK(flat.at(k) == doctest::Approx(0.7));
  const Path relax = simulate_ou({1.5, 0.7, 0.0, -0.3}, {0.0, 4.0, 40}, 1);
  for (std::size_t k = 0; k < relax.size(); ++k) {
    CHECK(relax.at(k) == doctest::Approx(0.7 - std::exp(-1.5 * relax.time(k))).epsilon(1e-13));
  }
  std::vector<double> ends(40000);
  for (std::size_t r = 0; r < ends.size(); ++r) {
    ends[r] = simulate_ou({1.0, 0.5, 0.2, 3.0}, {0.0, 30.0, 30}, 11, r).back();
  }
  CHECK(std::abs(oracle::mean(ends) - 0.5) < 3.0 * oracle::std_error(ends));
  const double se_var = 0.02 * std::sqrt(2.0 / (ends.size() - 1.0));
  CHECK(std::abs(oracle::variance(ends) - 0.02) < 4.0 * se_var);
}

TEST_CASE("simulate_ou: marginals pass a Kolmogorov-Smirnov test") {
  const OuParams p{0.8, -0.2, 0.6, 1.0};
  const TimeGrid grid{0.0, 2.0, 16};
  for (std::size_t k : {1U, 7U, 16U}) {
    std::vector<double> xs(10000);
    for (std::size_t r = 0; r < xs.size(); ++r) xs[r] = simulate_ou(p, grid, 77, r).at(k);
    const double t = grid.time(k);
    const double m = p.beta_bar + (p.b0 - p.beta_bar) * std::exp(-p.gamma * t);
    const double v = p.sigma * p.sigma * (1.0 - std::exp(-2.0 * p.gamma * t)) / (2.0 * p.gamma);
    const double pv =
        oracle::ks_pvalue(xs, [&](double x) { return oracle::normal_cdf((x - m) / std::sqrt(v)); });
    CHECK(pv > 0.01);
  }
}

TEST_CASE("simulate_tv_growth: deterministic limit, positivity and mean log-growth") {
  const TimeGrid grid{0.0, 5.0, 50};
  const auto det = simulate_tv_growth({1.0, 0.2, 0.0, 0.2}, 3.0, grid, 1);
  for (std::size_t k = 0; k < det.x.size(); ++k) {
    CHECK(det.x.at(k) == doctest::Approx(3.0 * std::exp(0.2 * det.x.time(k))).epsilon(1e-12));
  }
  // Wild volatility produces negative growth rates; the state stays positive.
  const auto wild = simulate_tv_growth({0.5, 0.0, 3.0, -2.0}, 1.0, grid, 9);
  for (std::size_t k = 0; k < wild.x.size(); ++k) CHECK(wild.x.at(k) > 0.0);

  const OuParams ou{2.0, 0.1, 0.05, 0.1};
  const TimeGrid long_grid{0.0, 20.0, 50};
  std::vector<double> growth(100000);
  for (std::size_t r = 0; r < growth.size(); ++r) {
    growth[r] = std::log(simulate_tv_growth(ou, 1.0, long_grid, 5, r).x.back());
  }
  CHECK(std::abs(oracle::mean(growth) - 0.1 * 20.0) < 3.0 * oracle::std_error(growth));
}

TEST_CASE("simulate_tv_growth: overflow is reported") {
  CHECK_THROWS_AS(simulate_tv_growth({1.0, 400.0, 0.0, 400.0}, 1.0, {0.0, 10.0, 10}, 1), Error);
}

TEST_CASE("quadratic_variation") {
  CHECK(quadratic_variation(Path({0, 1, 2}, {5, 5, 5})) == 0.0);
  CHECK(quadratic_variation(Path({0, 1, 2}, {0, 1, 0})) == 2.0);
  CHECK(quadratic_variation(Path({0, 1}, {0, 0, 1, 2}, 2)) == 5.0);
  CHECK_THROWS_AS(quadratic_variation(Path({0}, {1})), Error);
  const auto bm = make_scalar_spec([](double, std::span<const double>) { return 0.0; },
                                   [](double, std::span<const double>) { return 1.0; }, {}, 0.0);
  const double qv = quadratic_variation(simulate_euler(bm, {0.0, 1.0, 10000}, 3));
  CHECK(qv == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("Euler strong error against exact GBM shrinks like sqrt(dt)") {
  const GbmParams p{0.05, 0.5, 1.0};
  const auto spec = gbm_spec(p);
  std::vector<double> rms;
  for (std::size_t steps : {50U, 100U, 200U}) {
    double sse = 0.0;
    const int seeds = 4000;
    for (int r = 0; r < seeds; ++r) {
      const double e = simulate_euler(spec, {0.0, 1.0, steps}, 31, r).back() -
                       simulate_gbm_exact(p, {0.0, 1.0, steps}, 31, r).back();
      sse += e * e;
    }
    rms.push_back(std::sqrt(sse / seeds));
  }
  for (std::size_t i = 0; i + 1 < rms.size(); ++i) {
    const double ratio = rms[i] / rms[i + 1];
    CHECK(ratio >= 1.2);
    CHECK(ratio <= 1.7);
  }
}

TEST_CASE("Euler weak bias shrinks monotonically with dt") {
  const auto spec = gbm_spec({1.0, 0.2, 1.0});
  std::vector<double> bias;
  for (std::size_t steps : {10U, 20U, 40U}) {
    std::vector<double> ends(20000);
    for (std::size_t r = 0; r < ends.size(); ++r) ends[r] = simulate_euler(spec, {0.0, 1.0, steps}, 8, r).back();
    bias.push_back(std::abs(oracle::mean(ends) - std::exp(1.0)));
  }
  CHECK(bias[0] > bias[1]);
  CHECK(bias[1] > bias[2]);
}

TEST_CASE("lamperti: GBM log transform") {
  const GbmParams p{0.1, 0.3, 1.0};
  const auto lt = lamperti_transform(gbm_spec(p), {1.0, 0.0, 1e3});
  for (double x : {0.05, 0.5, 1.0, 2.0, 17.0}) {
    CHECK(lt.forward(x) == doctest::Approx(std::log(x) / 0.3).epsilon(1e-6));
    CHECK(lt.transformed_drift(lt.forward(x)) ==
          doctest::Approx(0.1 / 0.3 - 0.15).epsilon(1e-6));
  }
  double unit = 0.0;
  const double z = 0.4;
  lt.transformed().diffusion(std::span<const double>(&z, 1), lt.transformed().theta,
                             std::span<double>(&unit, 1));
  CHECK(unit == 1.0);
}

TEST_CASE("lamperti: constant diffusion gives an affine map") {
  const auto spec = make_scalar_spec([](double x, std::span<const double>) { return 1.0 - x; },
                                     [](double, std::span<const double>) { return 2.0; }, {}, 0.0);
  const auto lt = lamperti_transform(spec, {0.0, -50.0, 50.0});
  for (double x : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
    CHECK(lt.forward(x) == doctest::Approx(x / 2.0).epsilon(1e-10));
    CHECK(lt.transformed_drift(lt.forward(x)) == doctest::Approx((1.0 - x) / 2.0).epsilon(1e-7));
  }
}

TEST_CASE("lamperti: forward/inverse round trip on random states") {
  const auto lt = lamperti_transform(gbm_spec({0.1, 0.3, 1.0}), {1.0, 0.0, 1e3});
  Stream s(2718, 0);
  for (int i = 0; i < 200; ++i) {
    const double x = std::exp(4.0 * (s.uniform() - 0.5));
    CHECK(std::abs(lt.inverse(lt.forward(x)) - x) < 1e-8);
  }
}

TEST_CASE("lamperti: transformed fine path has unit quadratic variation") {
  const GbmParams p{0.1, 0.3, 1.0};
  const auto lt = lamperti_transform(gbm_spec(p), {1.0, 0.0, 1e3});
  const Path x = simulate_euler(gbm_spec(p), {0.0, 1.0, 10000}, 12);
  CHECK(quadratic_variation(transform_path(lt, x)) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("lamperti: error paths") {
  const auto zero_sigma = make_scalar_spec([](double, std::span<const double>) { return 0.0; },
                                           [](double x, std::span<const double>) { return x; }, {},
                                           1.0);
  try {
    (void)lamperti_transform(zero_sigma, {1.0, -1.0, 2.0});
    FAIL("expected transform_undefined");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::transform_undefined);
  }
  DiffusionSpec two = gbm_spec({0.1, 0.2, 1.0});
  two.state_dim = 2;
  two.x0 = {1.0, 1.0};
  try {
    (void)lamperti_transform(two);
    FAIL("expected unsupported_dimension");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported_dimension);
  }
}

TEST_CASE("path CSV round trip preserves every bit") {
  const Path p = simulate_euler(ou_spec({1.0, 0.0, 1.0, 0.1}), {0.0, 1.0, 33}, 4);
  std::istringstream in(table_to_csv(path_to_table(p)));
  const Table t = parse_table(in);
  CHECK(t.header == std::vector<std::string>{"t", "x1"});
  CHECK(path_from_table(t) == p);
}

TEST_CASE("nelder_mead minimizes the Rosenbrock function") {
  const auto rosen = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto r = nelder_mead(rosen, {-1.2, 1.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("bfgs and broyden on small problems") {
  const auto quad = [](std::span<const double> x) {
    return 3.0 * x[0] * x[0] + x[0] * x[1] + 2.0 * x[1] * x[1] - x[0];
  };
  const auto grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = 6.0 * x[0] + x[1] - 1.0;
    g[1] = x[0] + 4.0 * x[1];
  };
  const auto r = bfgs(quad, grad, {1.0, 1.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(4.0 / 23.0).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(-1.0 / 23.0).epsilon(1e-8));

  const auto root = broyden_solve(
      [](std::span<const double> x) {
        return std::vector<double>{x[0] * x[0] + x[1] - 3.0, x[0] - x[1] * x[1] + 3.0};
      },
      {1.5, 1.5}, {1e-12, 100, 1e-7});
  CHECK(root.converged);
  CHECK(root.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(root.x[1] == doctest::Approx(2.0).epsilon(1e-9));
}
