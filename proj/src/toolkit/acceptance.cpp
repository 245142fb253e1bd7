#include "driftlab/toolkit/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "driftlab/collocation/collocation.hpp"
#include "driftlab/core/error.hpp"
#include "driftlab/core/parallel.hpp"
#include "driftlab/core/simulate.hpp"
#include "driftlab/likelihood/bridge.hpp"
#include "driftlab/likelihood/density.hpp"
#include "driftlab/likelihood/estimating.hpp"
#include "driftlab/likelihood/fokker_planck.hpp"
#include "driftlab/likelihood/loglik.hpp"
#include "driftlab/statespace/kalman.hpp"
#include "driftlab/statespace/presets.hpp"
#include "driftlab/toolkit/adequacy.hpp"

namespace driftlab {

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

ObservationSet gbm_dataset(const GbmParams& p, std::size_t n, double dt, std::uint64_t seed,
                           std::uint64_t rep) {
  return ObservationSet::from_path(
      simulate_gbm_exact(p, {0.0, dt * static_cast<double>(n - 1), n - 1}, seed, rep));
}

// 1. Monte Carlo estimating functions: variance of the root grows by 1 + 1/J.
CriterionResult variance_inflation(std::uint64_t seed) {
  CriterionResult r{1, "variance inflation law", false, {}, {}, 0.0, 300.0};
  const GbmParams p{0.1, 0.3, 1.0};
  const std::size_t reps = 500;
  const ParameterSpace space{{0}, {false}};
  const auto spec = gbm_spec(p);
  std::vector<double> base(reps), j1(reps), j4(reps);
  parallel_for(reps, [&](std::size_t k) {
    const auto obs = gbm_dataset(p, 200, 0.1, seed, k);
    const std::uint64_t mc_seed = derive_key(seed, 1000000 + k);
    auto exact = ratio_moments(1, 1);
    exact.exact_expectation = gbm_ratio_expectation(1);
    base[k] = ee_solve(spec, exact, obs, space, {0.1}, mc_seed).theta_hat[0];
    j1[k] = ee_solve(spec, ratio_moments(1, 1), obs, space, {0.1}, mc_seed).theta_hat[0];
    j4[k] = ee_solve(spec, ratio_moments(1, 4), obs, space, {0.1}, mc_seed).theta_hat[0];
  });
  const double v0 = variance(base);
  const double r1 = variance(j1) / v0;
  const double r4 = variance(j4) / v0;
  r.metrics = {{"ratio_j1", r1}, {"ratio_j4", r4}, {"baseline_var", v0}};
  r.passed = r1 >= 1.7 && r1 <= 2.3 && r4 >= 1.1 && r4 <= 1.4;
  r.summary = fmt("var ratio J=1 %.4f in [1.7, 2.3], J=4 %.4f in [1.1, 1.4]", r1, r4);
  return r;
}

// 2. Particle filter log-likelihood against the exact Kalman value.
CriterionResult filter_vs_kalman(std::uint64_t seed) {
  CriterionResult r{2, "particle filter vs Kalman", false, {}, {}, 0.0, 60.0};
  const OuParams p{1.0, 0.0, 0.5, 0.0};
  const auto om = gaussian_observations(0.3);
  std::vector<double> times(100);
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = 0.5 * static_cast<double>(i + 1);
  const auto data = simulate_state_space(StateModel{ou_spec(p)}, om, times, seed);
  const double exact = kalman_loglik(ou_to_ssm(p, om, times), data.observations);
  FilterOptions opts;
  opts.n_particles = 2000;
  opts.substeps = 20;
  std::vector<double> ll;
  for (std::uint64_t s = 0; s < 20; ++s) {
    ll.push_back(particle_filter(StateModel{ou_spec(p)}, om, data.observations, opts,
                                 derive_key(seed, 2, s))
                     .loglik);
  }
  const double m = mean(ll);
  const double sd = std::sqrt(variance(ll));
  r.metrics = {{"kalman_loglik", exact}, {"pf_mean", m}, {"pf_sd", sd}};
  r.passed = std::abs(m - exact) <= 3.0 * sd && sd <= 0.5;
  r.summary = fmt("|%.4f - %.4f| = %.4f <= 3 sd (sd %.4f <= 0.5)", m, exact, std::abs(m - exact), sd);
  return r;
}

// 3. Fokker-Planck density against the closed-form GBM density.
CriterionResult fokker_planck_accuracy(std::uint64_t) {
  CriterionResult r{3, "Fokker-Planck accuracy", false, {}, {}, 0.0, 10.0};
  const GbmParams p{0.1, 0.2, 1.0};
  std::vector<double> grid(401);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.2 + 2.8 * static_cast<double>(i) / 400.0;
  FokkerPlanckOptions opts;
  opts.time_steps = 200;
  const auto res = fokker_planck_transition_density(gbm_spec(p), 0.5, 1.0, grid, opts);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    err = std::max(err, std::abs(res.density[i] - std::exp(gbm_transition_logdensity(p, 0.5, 1.0, grid[i]))));
  }
  r.metrics = {{"max_abs_error", err}, {"mass", res.mass}};
  r.passed = err <= 1e-3 && std::abs(res.mass - 1.0) <= 1e-3;
  r.summary = fmt("max abs error %.3e <= 1e-3, |mass - 1| = %.3e <= 1e-3", err, std::abs(res.mass - 1.0));
  return r;
}

// 4. Bridge importance sampling against the closed-form GBM density.
CriterionResult bridge_accuracy(std::uint64_t seed) {
  CriterionResult r{4, "bridge likelihood accuracy", false, {}, {}, 0.0, 30.0};
  const GbmParams p{0.1, 0.3, 1.0};
  const auto obs = gbm_dataset(p, 51, 0.5, seed, 4);
  std::vector<double> rel(50);
  parallel_for(50, [&](std::size_t i) {
    const double x = obs.values[i], y = obs.values[i + 1];
    const double est = bridge_log_density(gbm_spec(p), 0.5, x, y, 8, 200, seed, i);
    const double exact = gbm_transition_logdensity(p, 0.5, x, y);
    rel[i] = std::abs(std::exp(est - exact) - 1.0);
  });
  const double m = mean(rel);
  r.metrics = {{"mean_relative_error", m}, {"max_relative_error", *std::max_element(rel.begin(), rel.end())}};
  r.passed = m <= 0.05;
  r.summary = fmt("mean relative error %.4f <= 0.05 over 50 pairs", m);
  return r;
}

// 5. Strong order 1/2 of Euler for GBM with paired increments.
CriterionResult euler_order(std::uint64_t seed) {
  CriterionResult r{5, "Euler strong order", false, {}, {}, 0.0, 60.0};
  const GbmParams p{0.05, 0.5, 1.0};
  const std::size_t seeds = 10000;
  const std::vector<std::size_t> steps{50, 100, 200};
  std::vector<double> rms;
  for (std::size_t n : steps) {
    std::vector<double> sq(seeds);
    const TimeGrid grid{0.0, 1.0, n};
    parallel_for(seeds, [&](std::size_t s) {
      const double e = simulate_euler(gbm_spec(p), grid, seed, s).back() -
                       simulate_gbm_exact(p, grid, seed, s).back();
      sq[s] = e * e;
    });
    rms.push_back(std::sqrt(mean(sq)));
  }
  const double q1 = rms[0] / rms[1], q2 = rms[1] / rms[2];
  r.metrics = {{"rms_dt_0.02", rms[0]}, {"rms_dt_0.01", rms[1]}, {"rms_dt_0.005", rms[2]},
               {"ratio_1", q1}, {"ratio_2", q2}};
  r.passed = q1 >= 1.2 && q1 <= 1.7 && q2 >= 1.2 && q2 <= 1.7;
  r.summary = fmt("rms error ratios %.4f, %.4f in [1.2, 1.7]", q1, q2);
  return r;
}

// 6. Collocation recovery of beta and the MAP penalty identity.
CriterionResult collocation_recovery(std::uint64_t) {
  CriterionResult r{6, "collocation recovery", false, {}, {}, 0.0, 60.0};
  NoisyObservationSet obs;
  for (std::size_t i = 0; i < 50; ++i) {
    const double t = 2.0 * static_cast<double>(i) / 49.0;
    obs.times.push_back(t);
    obs.y.push_back(std::exp(0.3 * t));
  }
  const auto spec = make_scalar_spec([](double x, std::span<const double> th) { return th[0] * x; },
                                     [](double, std::span<const double> th) { return th[1]; },
                                     {0.1, 1.0}, 1.0);
  const auto om = gaussian_observations(1e-6);
  const auto basis = basis_from_observations(obs);
  CollocationOptions opts;
  opts.space = ParameterSpace{{0}, {false}};
  const auto fit = collocation_fit(obs, om, spec, basis, {1e4}, {}, opts);
  const double rel = std::abs(fit.fit.theta_hat[0] - 0.3) / 0.3;

  const double lam_prime = 1e4;
  const auto map_spec = spec.with_theta(std::vector<double>{fit.fit.theta_hat[0], map_equivalent_sigma(lam_prime)});
  const CollocationProblem weighted(basis, obs, om, map_spec, {1.0, WeightMode::sigma_weighted});
  const CollocationProblem plain(basis, obs, om, map_spec, {1.0, WeightMode::unweighted});
  const double a = weighted.evaluate(fit.coeffs, map_spec.theta).penalty;
  const double b = 2.0 * lam_prime * plain.evaluate(fit.coeffs, map_spec.theta).penalty;
  const double identity_gap = std::abs(a - b) / std::max(std::abs(b), 1e-300);
  r.metrics = {{"beta_hat", fit.fit.theta_hat[0]}, {"relative_error", rel}, {"identity_relative_gap", identity_gap}};
  r.passed = rel <= 0.01 && identity_gap <= 1e-12 && fit.fit.converged;
  r.summary = fmt("beta_hat %.6f, relative error %.2e <= 0.01; penalty identity gap %.1e <= 1e-12",
                  fit.fit.theta_hat[0], rel, identity_gap);
  return r;
}

// 7. MLE calibration and agreement with the closed-form estimator.
CriterionResult mle_calibration(std::uint64_t seed) {
  CriterionResult r{7, "MLE calibration", false, {}, {}, 0.0, 120.0};
  const GbmParams p{0.1, 0.3, 1.0};
  const double dt = 0.1;
  const std::size_t datasets = 100;
  std::vector<int> covered(datasets, 0);
  std::vector<double> gap(datasets, 0.0);
  parallel_for(datasets, [&](std::size_t k) {
    const auto obs = gbm_dataset(p, 500, dt, seed, 7000 + k);
    TransitionDensity td;
    td.kind = DensityKind::closed_form_gbm;
    td.model = gbm_spec(p);
    const auto full = mle_fit(td, obs, ParameterSpace::for_family("gbm"), {0.05, 0.2});
    bool ok = full.converged && full.standard_errors.has_value();
    if (ok) {
      ok = std::abs(full.theta_hat[0] - p.beta) <= 3.0 * (*full.standard_errors)[0] &&
           std::abs(full.theta_hat[1] - p.sigma) <= 3.0 * (*full.standard_errors)[1];
    }
    covered[k] = ok ? 1 : 0;
    MleOptions no_se;
    no_se.standard_errors = false;
    const auto fixed = mle_fit(td, obs, ParameterSpace{{0}, {false}}, {0.05}, no_se);
    double log_ratio = 0.0;
    for (std::size_t i = 1; i < obs.values.size(); ++i) log_ratio += std::log(obs.values[i] / obs.values[i - 1]);
    const double closed = log_ratio / (obs.times.back() - obs.times.front()) + 0.5 * p.sigma * p.sigma;
    gap[k] = std::abs(fixed.theta_hat[0] - closed);
  });
  const double hits = std::accumulate(covered.begin(), covered.end(), 0.0);
  const double max_gap = *std::max_element(gap.begin(), gap.end());
  r.metrics = {{"covered", hits}, {"max_closed_form_gap", max_gap}};
  r.passed = hits >= 90.0 && max_gap <= 1e-6;
  r.summary = fmt("truth within 3 SE in %.0f/100 >= 90; |beta_hat - closed form| max %.2e <= 1e-6", hits, max_gap);
  return r;
}

// 8. Adequacy diagnostic flags a doubled diffusion coefficient.
CriterionResult adequacy_power(std::uint64_t seed) {
  CriterionResult r{8, "adequacy diagnostic power", false, {}, {}, 0.0, 60.0};
  const GbmParams model{0.1, 0.3, 1.0};
  const GbmParams truth{0.1, 0.6, 1.0};
  const std::size_t trials = 100;
  std::vector<int> flagged(trials, 0);
  for (std::size_t k = 0; k < trials; ++k) {
    const auto obs = gbm_dataset(truth, 200, 0.1, seed, 8000 + k);
    ModelContext ctx;
    ctx.spec = gbm_spec(model);
    ctx.times = obs.times;
    const auto reps = synthetic_replicates(ctx, 50, derive_key(seed, 8, k));
    const NoisyObservationSet observed{obs.times, obs.values, 1};
    const auto report = envelope_check(observed, reps, default_statistics(),
                                       EnvelopeKind::quantile, SeriesTransform::log);
    flagged[k] = report.at("increment_sd").verdict == Verdict::outside ? 1 : 0;
  }
  const double hits = std::accumulate(flagged.begin(), flagged.end(), 0.0);
  r.metrics = {{"flagged", hits}};
  r.passed = hits >= 95.0;
  r.summary = fmt("increment_sd flagged in %.0f/100 >= 95", hits);
  return r;
}

// 9. Student-t observations resist a single outlier injected into clean data.
CriterionResult robust_observations(std::uint64_t seed) {
  CriterionResult r{9, "robust observation model", false, {}, {}, 0.0, 60.0};
  const double scale = 0.2;
  const std::size_t runs = 100, outlier = 15;
  std::vector<double> times(30);
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i + 1);
  std::vector<int> wins(runs, 0);
  const auto preset = preset_integrated_rw_t(0.1, scale, 4.0);
  ObservationModel gauss = gaussian_observations(scale);
  gauss.link = preset.om.link;
  FilterOptions opts;
  opts.n_particles = 2000;
  for (std::size_t k = 0; k < runs; ++k) {
    auto data = simulate_state_space(StateModel{preset.model}, gauss, times, derive_key(seed, 9, k));
    data.observations.y[outlier] += 10.0 * scale;
    const std::uint64_t fs = derive_key(seed, 90, k);
    const auto t_res = particle_filter(StateModel{preset.model}, preset.om, data.observations, opts, fs);
    const auto g_res = particle_filter(StateModel{preset.model}, gauss, data.observations, opts, fs);
    const double truth = data.latent.at(outlier, 0);
    wins[k] = std::abs(t_res.filtered_means.at(outlier, 0) - truth) <
                      std::abs(g_res.filtered_means.at(outlier, 0) - truth)
                  ? 1
                  : 0;
  }
  const double hits = std::accumulate(wins.begin(), wins.end(), 0.0);
  r.metrics = {{"student_t_wins", hits}};
  r.passed = hits >= 90.0;
  r.summary = fmt("student_t closer at the outlier in %.0f/100 >= 90", hits);
  return r;
}

template <typename F>
CriterionResult timed(F&& f, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = f(seed);
  } catch (const std::exception& e) {
    r.passed = false;
    r.summary = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

using CriterionFn = CriterionResult (*)(std::uint64_t);

const std::vector<std::pair<int, CriterionFn>>& criterion_table() {
  static const std::vector<std::pair<int, CriterionFn>> table{
      {1, variance_inflation}, {2, filter_vs_kalman},   {3, fokker_planck_accuracy},
      {4, bridge_accuracy},    {5, euler_order},        {6, collocation_recovery},
      {7, mle_calibration},    {8, adequacy_power},     {9, robust_observations}};
  return table;
}

std::vector<CriterionResult> run_criteria(std::uint64_t seed,
                                          const std::function<void(const CriterionResult&)>& cb) {
  std::vector<CriterionResult> out;
  for (const auto& [id, fn] : criterion_table()) {
    CriterionResult r = timed(fn, seed);
    r.id = id;
    if (cb) cb(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

bool AcceptanceReport::all_passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

std::vector<CriterionResult> run_statistical_criteria(std::uint64_t seed) {
  return run_criteria(seed, {});
}

Json acceptance_to_json(const std::vector<CriterionResult>& criteria) {
  Json arr = Json::array();
  for (const auto& c : criteria) {
    Json metrics = Json::object();
    for (const auto& [k, v] : c.metrics) metrics[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
    arr.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"summary", c.summary},
                   {"metrics", metrics}});
  }
  return Json{{"criteria", arr}};
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options,
                                const std::function<void(const CriterionResult&)>& on_result) {
  require(!options.thread_counts.empty(), "at least one thread count is required");
  AcceptanceReport report;
  std::vector<std::string> dumps;
  double extra_seconds = 0.0;
  for (std::size_t run = 0; run < options.thread_counts.size(); ++run) {
    set_thread_count(options.thread_counts[run]);
    const auto start = std::chrono::steady_clock::now();
    auto results = run_criteria(options.seed, run == 0 ? on_result : nullptr);
    if (run > 0) extra_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    dumps.push_back(dump_json(acceptance_to_json(results)));
    if (run == 0) report.criteria = std::move(results);
  }
  set_thread_count(0);

  CriterionResult det{10, "determinism across worker counts", true, {}, {}, extra_seconds, 0.0};
  for (const auto& d : dumps) det.passed = det.passed && d == dumps.front();
  std::string counts;
  for (auto n : options.thread_counts) counts += (counts.empty() ? "" : ", ") + std::to_string(n);
  det.metrics = {{"runs", static_cast<double>(dumps.size())}};
  det.summary = std::string(det.passed ? "byte-identical" : "DIFFERENT") +
                " results with DRIFTLAB_THREADS = " + counts;
  if (on_result) on_result(det);
  report.criteria.push_back(det);
  return report;
}

std::string format_criterion(const CriterionResult& r) {
  std::string line = r.passed ? "[PASS] " : "[FAIL] ";
  line += std::to_string(r.id) + " " + r.name + ": " + r.summary;
  line += fmt(" (%.1f s", r.seconds);
  if (r.budget_seconds > 0.0) {
    line += fmt(", budget %.0f s", r.budget_seconds);
    if (r.seconds > r.budget_seconds) line += ", OVER BUDGET";
  }
  line += ")";
  return line;
}

}  // namespace driftlab
