#include "driftlab/statespace/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftlab/core/error.hpp"
#include "driftlab/core/parallel.hpp"

namespace driftlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kBlock = 128;

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t model_dim(const StateModel& model) {
  return std::visit([](const auto& m) { return m.state_dim; }, model);
}

void validate_model(const StateModel& model) {
  std::visit([](const auto& m) { m.validate(); }, model);
}

// Moves one particle from t_from to t_to. Returns false if the state became
// non-finite.
bool propagate(const StateModel& model, std::span<double> x, double t_from, double t_to,
               std::size_t substeps, Stream& rng, std::span<double> mu, std::span<double> sd) {
  if (const auto* spec = std::get_if<DiffusionSpec>(&model)) {
    if (t_to <= t_from) return true;
    const double dt = (t_to - t_from) / static_cast<double>(substeps);
    const double root_dt = std::sqrt(dt);
    for (std::size_t s = 0; s < substeps; ++s) {
      spec->drift(x, spec->theta, mu);
      spec->diffusion(x, spec->theta, sd);
      for (std::size_t c = 0; c < x.size(); ++c) {
        x[c] += mu[c] * dt + sd[c] * root_dt * rng.normal();
        if (!std::isfinite(x[c])) return false;
      }
    }
    return true;
  }
  const auto& kernel = std::get<DiscreteKernel>(model);
  kernel.transition(x, t_from, t_to, rng);
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void initialize(const StateModel& model, std::span<double> x, Stream& rng) {
  if (const auto* spec = std::get_if<DiffusionSpec>(&model)) {
    std::copy(spec->x0.begin(), spec->x0.end(), x.begin());
  } else {
    std::get<DiscreteKernel>(model).initial(x, rng);
  }
}

}  // namespace

void DiscreteKernel::validate() const {
  require(state_dim >= 1, "state dimension must be positive");
  require(static_cast<bool>(initial) && static_cast<bool>(transition),
          "discrete kernel needs initial and transition functions");
}

std::vector<double> ParticleCloud::normalized_weights() const {
  const double lse = log_sum_exp(log_weights);
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - lse);
  return w;
}

double ParticleCloud::ess() const {
  double s2 = 0.0;
  for (double w : normalized_weights()) s2 += w * w;
  return 1.0 / s2;
}

std::vector<double> ParticleCloud::weighted_mean() const {
  const auto w = normalized_weights();
  std::vector<double> m(dim, 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    for (std::size_t c = 0; c < dim; ++c) m[c] += w[k] * states[k * dim + c];
  }
  return m;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> idx(n);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double point = (static_cast<double>(k) + u) / static_cast<double>(n);
    while (point > cumulative && j + 1 < n) cumulative += weights[++j];
    idx[k] = j;
  }
  return idx;
}

FilterResult particle_filter(const StateModel& model, const ObservationModel& om,
                             const NoisyObservationSet& obs, const FilterOptions& opts,
                             std::uint64_t seed) {
  validate_model(model);
  om.validate();
  obs.validate();
  require(opts.n_particles >= 2, "n_particles must be >= 2");
  require(opts.substeps >= 1, "substeps must be >= 1");
  require(obs.size() >= 1, "at least one observation is required");
  require(obs.dim == om.obs_dim, "observation dimension does not match the observation model");
  const bool diffusion = std::holds_alternative<DiffusionSpec>(model);
  if (diffusion) {
    require(obs.times.front() >= opts.t_start, "observations must not precede t_start");
  }

  const std::size_t n = opts.n_particles;
  const std::size_t d = model_dim(model);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;

  ParticleCloud cloud;
  cloud.dim = d;
  cloud.states.assign(n * d, 0.0);
  cloud.log_weights.assign(n, -std::log(static_cast<double>(n)));
  std::vector<double> next_states(n * d);
  std::vector<double> incremental(n);
  std::vector<double> means(obs.size() * d);

  FilterResult result;
  result.seed = seed;

  parallel_for(blocks, [&](std::size_t b) {
    for (std::size_t k = b * kBlock; k < std::min(n, (b + 1) * kBlock); ++k) {
      Stream rng(seed, 0, k);
      initialize(model, {cloud.states.data() + k * d, d}, rng);
    }
  });

  double t_prev = diffusion ? opts.t_start : obs.times.front();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double t = obs.times[i];
    const auto y = obs.at(i);
    parallel_for(blocks, [&](std::size_t b) {
      std::vector<double> mu(d), sd(d);
      for (std::size_t k = b * kBlock; k < std::min(n, (b + 1) * kBlock); ++k) {
        std::span<double> x(cloud.states.data() + k * d, d);
        Stream rng(seed, i + 1, k);
        double l = kNegInf;
        if (propagate(model, x, t_prev, t, opts.substeps, rng, mu, sd)) {
          l = om.log_density(y, x);
          if (std::isnan(l)) l = kNegInf;
        }
        incremental[k] = l;
      }
    });
    t_prev = t;

    // log p(y_i | y_{<i}) = log sum_k W_k g_ik with W the carried normalized
    // weights; after resampling W_k = 1/N.
    for (std::size_t k = 0; k < n; ++k) incremental[k] += cloud.log_weights[k];
    const double step_ll = log_sum_exp(incremental);
    if (step_ll == kNegInf) {
      fail(ErrorCode::filter_degenerate,
           "all particle weights are zero at observation step " + std::to_string(i) +
               "; increase the observation scale or the number of particles",
           i);
    }
    result.loglik += step_ll;
    for (std::size_t k = 0; k < n; ++k) cloud.log_weights[k] = incremental[k] - step_ll;

    const auto w = cloud.normalized_weights();
    double s2 = 0.0;
    for (double v : w) s2 += v * v;
    const double ess = 1.0 / s2;
    result.ess_trace.push_back(ess);
    for (std::size_t c = 0; c < d; ++c) {
      double m = 0.0;
      for (std::size_t k = 0; k < n; ++k) m += w[k] * cloud.states[k * d + c];
      means[i * d + c] = m;
    }
    if (opts.keep_clouds) result.clouds.push_back(cloud);

    if (ess < opts.resample_fraction * static_cast<double>(n)) {
      Stream rng(derive_key(seed, i + 1, ~std::uint64_t{0}));
      const auto idx = systematic_resample(w, rng.uniform());
      for (std::size_t k = 0; k < n; ++k) {
        std::copy_n(cloud.states.begin() + static_cast<std::ptrdiff_t>(idx[k] * d), d,
                    next_states.begin() + static_cast<std::ptrdiff_t>(k * d));
      }
      cloud.states.swap(next_states);
      std::fill(cloud.log_weights.begin(), cloud.log_weights.end(),
                -std::log(static_cast<double>(n)));
      result.resample_steps.push_back(i);
      result.ess_carried.push_back(static_cast<double>(n));
    } else {
      result.ess_carried.push_back(ess);
    }
  }
  result.filtered_means = Path(obs.times, std::move(means), d);
  return result;
}

FilterResult particle_filter(const DiffusionSpec& spec, const ObservationModel& om,
                             const NoisyObservationSet& obs, std::size_t n_particles,
                             std::size_t substeps, std::uint64_t seed) {
  FilterOptions opts;
  opts.n_particles = n_particles;
  opts.substeps = substeps;
  return particle_filter(StateModel{spec}, om, obs, opts, seed);
}

StateSpaceSample simulate_state_space(const StateModel& model, const ObservationModel& om,
                                      std::span<const double> times, std::uint64_t seed,
                                      std::size_t substeps, double t_start) {
  validate_model(model);
  om.validate();
  require(!times.empty(), "at least one time point is required");
  require(substeps >= 1, "substeps must be >= 1");
  const std::size_t d = model_dim(model);
  const bool diffusion = std::holds_alternative<DiffusionSpec>(model);
  std::vector<double> x(d), mu(d), sd(d), latent, ys(om.obs_dim);
  NoisyObservationSet out;
  out.dim = om.obs_dim;
  Stream state_rng(seed, 0, 0);
  Stream noise_rng(seed, 0, 1);
  initialize(model, x, state_rng);
  double t_prev = diffusion ? t_start : times.front();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!propagate(model, x, t_prev, times[i], substeps, state_rng, mu, sd)) {
      fail(ErrorCode::simulation_diverged,
           "latent state became non-finite before observation " + std::to_string(i), i);
    }
    t_prev = times[i];
    latent.insert(latent.end(), x.begin(), x.end());
    om.sample(x, noise_rng, ys);
    out.times.push_back(times[i]);
    out.y.insert(out.y.end(), ys.begin(), ys.end());
  }
  out.validate();
  return {Path(std::vector<double>(times.begin(), times.end()), std::move(latent), d),
          std::move(out)};
}

ProfileResult profile_loglik(const std::function<StateModel(std::span<const double>)>& make_model,
                             const ObservationModel& om, const NoisyObservationSet& obs,
                             const std::vector<std::vector<double>>& candidates,
                             const FilterOptions& opts, std::uint64_t seed) {
  require(!candidates.empty(), "profile needs at least one candidate");
  ProfileResult res;
  for (const auto& theta : candidates) {
    double ll = kNegInf;
    try {
      ll = particle_filter(make_model(theta), om, obs, opts, seed).loglik;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::filter_degenerate) throw;
    }
    res.loglik.push_back(ll);
  }
  res.best = static_cast<std::size_t>(
      std::max_element(res.loglik.begin(), res.loglik.end()) - res.loglik.begin());
  return res;
}

}  // namespace driftlab
