#include "driftlab/toolkit/adequacy.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "driftlab/core/error.hpp"
#include "driftlab/core/parallel.hpp"
#include "driftlab/core/simulate.hpp"

namespace driftlab {

namespace {

std::vector<double> increments(std::span<const double> v) {
  std::vector<double> d;
  for (std::size_t i = 1; i < v.size(); ++i) d.push_back(v[i] - v[i - 1]);
  return d;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double mean_increment(std::span<const double> v) { return mean_of(increments(v)); }

double increment_sd(std::span<const double> v) {
  const auto d = increments(v);
  if (d.size() < 2) return 0.0;
  const double m = mean_of(d);
  double ss = 0.0;
  for (double x : d) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(d.size() - 1));
}

double lag1_autocorrelation(std::span<const double> v) {
  const auto d = increments(v);
  if (d.size() < 3) return 0.0;
  const double m = mean_of(d);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    den += (d[i] - m) * (d[i] - m);
    if (i > 0) num += (d[i] - m) * (d[i - 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

std::vector<Statistic>& registry() {
  static std::vector<Statistic> extra;
  return extra;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<double> series(const NoisyObservationSet& s, SeriesTransform transform) {
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    v[i] = s.at(i)[0];
    if (transform == SeriesTransform::log) {
      require(v[i] > 0.0, "the log transform needs positive data");
      v[i] = std::log(v[i]);
    }
  }
  return v;
}

}  // namespace

std::vector<NoisyObservationSet> synthetic_replicates(const ModelContext& ctx, std::size_t k,
                                                      std::uint64_t seed) {
  std::vector<NoisyObservationSet> out(k);
  if (k == 0) return out;
  if (!ctx.spec.drift || !ctx.spec.diffusion) {
    fail(ErrorCode::incomplete_context, "model context has no fitted model to simulate from");
  }
  if (ctx.noisy && !ctx.om) {
    fail(ErrorCode::incomplete_context,
         "model context lacks the observation model needed to simulate noisy data");
  }
  if (ctx.times.empty()) fail(ErrorCode::incomplete_context, "model context has no observation times");
  ctx.spec.validate();
  parallel_for(k, [&](std::size_t r) {
    Path path;
    if (ctx.spec.family == "gbm") {
      path = simulate_gbm_exact_at(gbm_params_from(ctx.spec), ctx.times, seed, r);
    } else if (ctx.spec.family == "ou") {
      path = simulate_ou_at(ou_params_from(ctx.spec), ctx.times, seed, r);
    } else {
      path = simulate_euler_at(ctx.spec, ctx.times, ctx.substeps, seed, r);
    }
    NoisyObservationSet set;
    set.times = path.times();
    if (ctx.noisy) {
      const ObservationModel& om = *ctx.om;
      set.dim = om.obs_dim;
      set.y.resize(path.size() * om.obs_dim);
      Stream noise(derive_key(seed, r, 1));
      for (std::size_t i = 0; i < path.size(); ++i) {
        om.sample(path.value(i), noise, {set.y.data() + i * om.obs_dim, om.obs_dim});
      }
    } else {
      set.dim = path.dim();
      set.y = path.data();
    }
    out[r] = std::move(set);
  });
  return out;
}

std::vector<Statistic> default_statistics() {
  return {{"mean_increment", mean_increment},
          {"increment_sd", increment_sd},
          {"lag1_autocorrelation", lag1_autocorrelation},
          {"min", [](std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }},
          {"max", [](std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }}};
}

void register_statistic(Statistic stat) {
  require(static_cast<bool>(stat.fn) && !stat.name.empty(), "statistic needs a name and a function");
  std::lock_guard lock(registry_mutex());
  registry().push_back(std::move(stat));
}

Statistic statistic_by_name(const std::string& name) {
  for (auto& s : default_statistics()) {
    if (s.name == name) return s;
  }
  std::lock_guard lock(registry_mutex());
  for (const auto& s : registry()) {
    if (s.name == name) return s;
  }
  fail(ErrorCode::invalid_argument, "unknown statistic '" + name + "'");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::inside: return "inside";
    case Verdict::outside: return "outside";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

EnvelopeKind envelope_from_string(const std::string& name) {
  if (name == "quantile") return EnvelopeKind::quantile;
  if (name == "minmax") return EnvelopeKind::minmax;
  fail(ErrorCode::invalid_argument, "unknown envelope '" + name + "' (expected quantile or minmax)");
}

SeriesTransform transform_from_string(const std::string& name) {
  if (name == "identity") return SeriesTransform::identity;
  if (name == "log") return SeriesTransform::log;
  fail(ErrorCode::invalid_argument, "unknown transform '" + name + "' (expected identity or log)");
}

std::size_t AdequacyReport::flagged() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) {
    return c.verdict == Verdict::outside;
  }));
}

const StatisticCheck& AdequacyReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  fail(ErrorCode::invalid_argument, "report has no statistic '" + name + "'");
}

AdequacyReport envelope_check(const NoisyObservationSet& observed,
                              const std::vector<NoisyObservationSet>& synthetic,
                              const std::vector<Statistic>& stats, EnvelopeKind envelope,
                              SeriesTransform transform) {
  observed.validate();
  if (synthetic.empty()) fail(ErrorCode::insufficient_data, "no synthetic replicates to compare with");
  if (envelope == EnvelopeKind::quantile && synthetic.size() < 20) {
    fail(ErrorCode::insufficient_data,
         "quantile envelopes need at least 20 synthetic replicates; got " +
             std::to_string(synthetic.size()));
  }
  require(observed.size() >= 2, "observed data need at least two points");
  AdequacyReport report;
  report.envelope = envelope;
  report.replicates = synthetic.size();
  report.transform = transform;
  const auto obs_values = series(observed, transform);
  std::vector<std::vector<double>> sim_values;
  for (const auto& s : synthetic) sim_values.push_back(series(s, transform));
  for (const auto& stat : stats) {
    StatisticCheck c;
    c.name = stat.name;
    c.observed = stat.fn(obs_values);
    std::vector<double> sim;
    sim.reserve(synthetic.size());
    for (const auto& v : sim_values) sim.push_back(stat.fn(v));
    const auto [lo, hi] = std::minmax_element(sim.begin(), sim.end());
    c.min = *lo;
    c.max = *hi;
    c.q05 = quantile(sim, 0.05);
    c.q95 = quantile(sim, 0.95);
    const double spread = c.max - c.min;
    if (!(spread > 1e-12 * std::max(1.0, std::max(std::abs(c.min), std::abs(c.max))))) {
      c.verdict = Verdict::indeterminate;
    } else {
      const double a = envelope == EnvelopeKind::quantile ? c.q05 : c.min;
      const double b = envelope == EnvelopeKind::quantile ? c.q95 : c.max;
      c.verdict = (c.observed >= a && c.observed <= b) ? Verdict::inside : Verdict::outside;
    }
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace driftlab
