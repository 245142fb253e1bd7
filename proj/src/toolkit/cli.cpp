#include "driftlab/toolkit/cli.hpp"

#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "driftlab/collocation/collocation.hpp"
#include "driftlab/core/error.hpp"
#include "driftlab/core/path_io.hpp"
#include "driftlab/core/simulate.hpp"
#include "driftlab/likelihood/estimating.hpp"
#include "driftlab/likelihood/loglik.hpp"
#include "driftlab/statespace/particle_filter.hpp"
#include "driftlab/statespace/presets.hpp"
#include "driftlab/toolkit/acceptance.hpp"
#include "driftlab/toolkit/adequacy.hpp"
#include "driftlab/toolkit/atomic_file.hpp"
#include "driftlab/toolkit/config.hpp"
#include "driftlab/toolkit/json_io.hpp"

namespace driftlab {

namespace {

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return "--" + f;
}

void require_output(const RunConfig& cfg) {
  if (cfg.out.empty()) fail(ErrorCode::config_error, "an output path is required (--out)");
}

void require_data(const RunConfig& cfg) {
  if (cfg.data.empty()) fail(ErrorCode::config_error, "an input data file is required (--data)");
}

ObservationModel observation_model(const RunConfig& cfg, std::size_t dim) {
  if (!(cfg.obs_scale > 0.0)) fail(ErrorCode::config_error, "obs_scale must be > 0 for noisy data");
  if (cfg.obs_kind == "gaussian") return gaussian_observations(cfg.obs_scale, dim);
  if (cfg.obs_kind == "student_t") return student_t_observations(cfg.obs_scale, cfg.obs_dof, dim);
  fail(ErrorCode::config_error, "obs_kind must be gaussian or student_t");
}

/// Built-in diffusion from the configured parameters.
DiffusionSpec diffusion_model(const RunConfig& cfg) {
  if (cfg.model == "gbm") return gbm_spec({cfg.beta, cfg.sigma, cfg.x0});
  if (cfg.model == "ou") return ou_spec({cfg.gamma, cfg.beta_bar, cfg.sigma, cfg.x0});
  fail(ErrorCode::config_error, "model '" + cfg.model + "' is not available here (use gbm or ou)");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      fail(ErrorCode::config_error, "cannot parse '" + item + "' as a number");
    }
  }
  return v;
}

std::size_t theta_index(const std::string& model, const std::string& name) {
  const std::vector<std::string> names =
      model == "gbm" ? std::vector<std::string>{"beta", "sigma"}
                     : std::vector<std::string>{"gamma", "beta_bar", "sigma"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  fail(ErrorCode::config_error, "model '" + model + "' has no parameter '" + name + "'");
}

int cmd_simulate(const RunConfig& cfg) {
  require_output(cfg);
  const TimeGrid grid{cfg.t_start, cfg.t_end, static_cast<std::size_t>(cfg.steps)};
  grid.validate();
  if (cfg.scheme != "exact" && cfg.scheme != "euler") {
    fail(ErrorCode::config_error, "scheme must be exact or euler");
  }
  if (cfg.model == "irw_t") {
    const auto preset = preset_integrated_rw_t(cfg.step_sd, cfg.obs_scale, cfg.obs_dof);
    auto times = grid.times();
    const auto sample = simulate_state_space(StateModel{preset.model}, preset.om, times, cfg.seed);
    write_file_atomic(cfg.out, table_to_csv(noisy_to_table(sample.observations)));
    if (!cfg.latent_out.empty()) write_file_atomic(cfg.latent_out, table_to_csv(path_to_table(sample.latent)));
    return exit_ok;
  }
  Path path;
  if (cfg.model == "tv_growth") {
    const auto tv = simulate_tv_growth({cfg.gamma, cfg.beta_bar, cfg.sigma, cfg.beta}, cfg.x0, grid, cfg.seed, 0);
    std::vector<double> values;
    for (std::size_t k = 0; k < tv.x.size(); ++k) {
      values.push_back(tv.x.at(k));
      values.push_back(tv.beta.at(k));
    }
    path = Path(tv.x.times(), std::move(values), 2);
  } else if (cfg.scheme == "euler") {
    path = simulate_euler(diffusion_model(cfg), grid, cfg.seed, 0);
  } else if (cfg.model == "gbm") {
    path = simulate_gbm_exact({cfg.beta, cfg.sigma, cfg.x0}, grid, cfg.seed, 0);
  } else if (cfg.model == "ou") {
    path = simulate_ou({cfg.gamma, cfg.beta_bar, cfg.sigma, cfg.x0}, grid, cfg.seed, 0);
  } else {
    fail(ErrorCode::config_error, "unknown model '" + cfg.model + "'");
  }
  if (cfg.obs_scale > 0.0) {
    const auto om = observation_model(cfg, 1);
    NoisyObservationSet noisy;
    noisy.times = path.times();
    Stream rng(derive_key(cfg.seed, 0, 1));
    for (std::size_t k = 0; k < path.size(); ++k) {
      double y = 0.0;
      om.sample(path.value(k), rng, {&y, 1});
      noisy.y.push_back(y);
    }
    write_file_atomic(cfg.out, table_to_csv(noisy_to_table(noisy)));
    if (!cfg.latent_out.empty()) write_file_atomic(cfg.latent_out, table_to_csv(path_to_table(path)));
    return exit_ok;
  }
  write_file_atomic(cfg.out, table_to_csv(path_to_table(path)));
  return exit_ok;
}

int cmd_fit(const RunConfig& cfg) {
  require_data(cfg);
  require_output(cfg);
  const auto obs = observations_from_table(read_table_file(cfg.data));
  if (obs.size() < 2) fail(ErrorCode::insufficient_data, "fitting needs at least two observations");
  RunConfig model_cfg = cfg;
  model_cfg.x0 = obs.values.front();
  const DiffusionSpec spec = diffusion_model(model_cfg);
  const auto space = ParameterSpace::for_family(cfg.model);
  FitResult fit;
  if (cfg.method == "mle" || cfg.method == "bridge-mle") {
    TransitionDensity td;
    td.model = spec;
    if (cfg.method == "bridge-mle") {
      td.kind = DensityKind::bridge_mc;
      td.bridge = {static_cast<std::size_t>(cfg.m_sub), static_cast<std::size_t>(cfg.j_samples), cfg.seed};
    } else if (cfg.density == "closed_form") {
      td.kind = cfg.model == "gbm" ? DensityKind::closed_form_gbm : DensityKind::closed_form_ou;
    } else if (cfg.density == "euler") {
      td.kind = DensityKind::euler;
    } else if (cfg.density == "fokker_planck") {
      td.kind = DensityKind::fokker_planck;
      td.fokker_planck.cells = static_cast<std::size_t>(cfg.fp_cells);
      td.fokker_planck.time_steps = static_cast<std::size_t>(cfg.fp_steps);
    } else {
      fail(ErrorCode::config_error, "density must be closed_form, euler or fokker_planck");
    }
    fit = mle_fit(td, obs, space, space.extract(spec.theta));
  } else if (cfg.method == "ee") {
    const auto m = static_cast<std::size_t>(cfg.moments);
    if (m < 1 || m > spec.theta.size()) {
      fail(ErrorCode::config_error, "moments must be between 1 and the number of parameters");
    }
    EstimatingFunction ef;
    if (cfg.psi == "ratio") {
      ef = ratio_moments(m, static_cast<std::size_t>(cfg.j));
    } else if (cfg.psi == "polynomial") {
      ef = polynomial_moments(m, static_cast<std::size_t>(cfg.j));
    } else {
      fail(ErrorCode::config_error, "psi must be ratio or polynomial");
    }
    // One free parameter per moment condition, in model order.
    ParameterSpace ee_space{{space.free.begin(), space.free.begin() + static_cast<std::ptrdiff_t>(m)},
                            {space.positive.begin(), space.positive.begin() + static_cast<std::ptrdiff_t>(m)}};
    EeOptions opts;
    opts.substeps = static_cast<std::size_t>(std::max<std::uint64_t>(cfg.substeps, 20));
    fit = ee_solve(spec, ef, obs, ee_space, ee_space.extract(spec.theta), cfg.seed, opts);
  } else {
    fail(ErrorCode::config_error, "method must be mle, ee or bridge-mle");
  }
  fit.seed = cfg.seed;
  Json j = fit_result_to_json(fit);
  j["model"] = cfg.model;
  j["method"] = cfg.method;
  write_file_atomic(cfg.out, dump_json(j));
  return fit.converged ? exit_ok : exit_not_converged;
}

int cmd_filter(const RunConfig& cfg) {
  require_data(cfg);
  require_output(cfg);
  const auto obs = noisy_from_table(read_table_file(cfg.data));
  FilterOptions opts;
  opts.n_particles = static_cast<std::size_t>(cfg.n_particles);
  opts.substeps = static_cast<std::size_t>(cfg.substeps);
  opts.t_start = cfg.t_start;

  std::function<StateModel(std::span<const double>)> make_model;
  ObservationModel om;
  std::vector<double> theta;
  if (cfg.model == "irw_t") {
    IntegratedRwOptions ro;
    ro.coords = obs.dim;
    const auto preset = preset_integrated_rw_t(cfg.step_sd, cfg.obs_scale, cfg.obs_dof, ro);
    om = preset.om;
    if (cfg.obs_kind == "gaussian") {
      om = gaussian_observations(cfg.obs_scale, obs.dim);
      om.link = preset.om.link;
    }
    theta = {cfg.step_sd};
    make_model = [ro, &cfg](std::span<const double> th) {
      return StateModel{preset_integrated_rw_t(th[0], cfg.obs_scale, cfg.obs_dof, ro).model};
    };
  } else {
    const DiffusionSpec spec = diffusion_model(cfg);
    om = observation_model(cfg, obs.dim);
    theta = spec.theta;
    make_model = [spec](std::span<const double> th) { return StateModel{spec.with_theta(th)}; };
  }
  const auto res = particle_filter(make_model(theta), om, obs, opts, cfg.seed);
  Json j = filter_result_to_json(res);
  if (!cfg.profile_param.empty()) {
    const auto values = parse_list(cfg.profile_values);
    if (values.empty()) fail(ErrorCode::config_error, "profile_values is empty");
    std::size_t idx = 0;
    if (cfg.model != "irw_t") {
      idx = theta_index(cfg.model, cfg.profile_param);
    } else if (cfg.profile_param != "step_sd") {
      fail(ErrorCode::config_error, "the irw_t model profiles step_sd only");
    }
    std::vector<std::vector<double>> candidates;
    for (double v : values) {
      auto th = theta;
      th[idx] = v;
      candidates.push_back(th);
    }
    const auto prof = profile_loglik(make_model, om, obs, candidates, opts, cfg.seed);
    Json ll = Json::array();
    for (double v : prof.loglik) ll.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
    j["profile"] = {{"param", cfg.profile_param}, {"values", values}, {"loglik", ll},
                    {"best", values[prof.best]}};
  }
  write_file_atomic(cfg.out, dump_json(j));
  return exit_ok;
}

int cmd_collocate(const RunConfig& cfg) {
  require_data(cfg);
  require_output(cfg);
  const auto obs = noisy_from_table(read_table_file(cfg.data));
  if (obs.dim != 1) fail(ErrorCode::unsupported_dimension, "collocate expects one observed coordinate");
  RunConfig model_cfg = cfg;
  model_cfg.x0 = obs.y.front();
  const DiffusionSpec spec = diffusion_model(model_cfg);
  const auto om = observation_model(cfg, 1);
  PenaltySpec pen;
  pen.lambda = cfg.lambda;
  pen.weight_mode = weight_mode_from_string(cfg.weight_mode);
  CollocationOptions opts;
  // Drift parameters only: the diffusion enters the penalty at most as a weight.
  opts.space = cfg.model == "gbm" ? ParameterSpace{{0}, {false}} : ParameterSpace{{0, 1}, {false, false}};
  auto fit = collocation_fit(obs, om, spec, basis_from_observations(obs), pen, {}, opts);
  fit.fit.seed = cfg.seed;
  Json j = collocation_fit_to_json(fit);
  j["model"] = cfg.model;
  j["method"] = "collocate";
  write_file_atomic(cfg.out, dump_json(j));
  if (!cfg.trajectory_out.empty()) write_file_atomic(cfg.trajectory_out, table_to_csv(trajectory_table(fit)));
  return fit.fit.converged ? exit_ok : exit_not_converged;
}

int cmd_diagnose(const RunConfig& cfg) {
  require_data(cfg);
  require_output(cfg);
  const Table table = read_table_file(cfg.data);
  const bool noisy = cfg.obs_scale > 0.0;
  NoisyObservationSet observed = noisy_from_table(table);
  RunConfig model_cfg = cfg;
  model_cfg.x0 = observed.y.front();
  DiffusionSpec spec = diffusion_model(model_cfg);
  if (!cfg.fit_json.empty()) {
    const auto fit = fit_result_from_json(Json::parse(read_file(cfg.fit_json)));
    if (fit.theta_full.size() != spec.theta.size()) {
      fail(ErrorCode::config_error, "fit JSON parameters do not match model '" + cfg.model + "'");
    }
    spec = spec.with_theta(fit.theta_full);
  }
  ModelContext ctx;
  ctx.spec = spec;
  ctx.times = observed.times;
  ctx.noisy = noisy;
  if (noisy) ctx.om = observation_model(cfg, 1);
  ctx.substeps = static_cast<std::size_t>(cfg.substeps);
  const auto reps = synthetic_replicates(ctx, static_cast<std::size_t>(cfg.k), cfg.seed);
  const auto report = envelope_check(observed, reps, default_statistics(),
                                     envelope_from_string(cfg.envelope),
                                     transform_from_string(cfg.transform));
  Json j = adequacy_report_to_json(report);
  j["seed"] = cfg.seed;
  write_file_atomic(cfg.out, dump_json(j));
  return exit_ok;
}

int cmd_accept(const RunConfig& cfg, std::ostream& out) {
  AcceptanceOptions opts;
  opts.seed = cfg.seed;
  const auto report = run_acceptance(opts, [&](const CriterionResult& r) { out << format_criterion(r) << std::endl; });
  if (!cfg.out.empty()) write_file_atomic(cfg.out, dump_json(acceptance_to_json(report.criteria)));
  return report.all_passed() ? exit_ok : exit_failure;
}

bool is_validation(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::config_error:
    case ErrorCode::io_error:
    case ErrorCode::insufficient_data:
    case ErrorCode::invalid_grid:
    case ErrorCode::invalid_start:
    case ErrorCode::incomplete_context:
    case ErrorCode::unsupported_dimension:
    case ErrorCode::transform_undefined:
      return true;
    default:
      return false;
  }
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"driftlab: simulation and inference for discretely observed diffusions", "driftlab"};
  app.require_subcommand(1);
  struct Sub {
    CLI::App* app;
    std::string config_file;
    std::map<std::string, std::optional<std::string>> values;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> descriptions{
      {"simulate", "simulate a path or noisy observations"},
      {"fit", "estimate parameters from exact observations (mle, ee, bridge-mle)"},
      {"filter", "particle filter for noisy observations"},
      {"collocate", "penalized spline collocation fit"},
      {"diagnose", "synthetic-data adequacy check"},
      {"accept", "run the acceptance suite"}};
  for (const auto& name : subcommands()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, descriptions.at(name));
    s.app->add_option("--config", s.config_file, "key-value config file");
    for (const auto& key : config_keys()) {
      s.app->add_option(flag_name(key.name), s.values[key.name], key.help);
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_invalid;
  }
  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      RunConfig cfg;
      cfg.command = name;
      if (!s.config_file.empty()) apply_config_file(cfg, s.config_file, name);
      for (const auto& key : config_keys()) {
        if (const auto& v = s.values[key.name]) key.set(cfg, *v);
      }
      if (name == "simulate") return cmd_simulate(cfg);
      if (name == "fit") return cmd_fit(cfg);
      if (name == "filter") return cmd_filter(cfg);
      if (name == "collocate") return cmd_collocate(cfg);
      if (name == "diagnose") return cmd_diagnose(cfg);
      if (name == "accept") return cmd_accept(cfg, out);
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return is_validation(e.code()) ? exit_invalid : exit_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_invalid;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_run(args, std::cout, std::cerr);
}

}  // namespace driftlab
