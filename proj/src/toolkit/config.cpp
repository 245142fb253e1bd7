#include "driftlab/toolkit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "driftlab/core/error.hpp"
#include "driftlab/core/path_io.hpp"

namespace driftlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::config_error, "value '" + text + "' for key '" + key + "' is not a number");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::config_error,
         "value '" + text + "' for key '" + key + "' is not a non-negative integer");
  }
  return v;
}

template <typename T>
ConfigKey make_key(std::string name, T RunConfig::*field, std::string help) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  if constexpr (std::is_same_v<T, std::string>) {
    k.get = [field](const RunConfig& c) { return c.*field; };
    k.set = [field](RunConfig& c, const std::string& v) { c.*field = v; };
  } else if constexpr (std::is_same_v<T, double>) {
    k.get = [field](const RunConfig& c) { return format_double(c.*field); };
    k.set = [field, name](RunConfig& c, const std::string& v) { c.*field = parse_real(name, v); };
  } else {
    k.get = [field](const RunConfig& c) { return std::to_string(c.*field); };
    k.set = [field, name](RunConfig& c, const std::string& v) { c.*field = parse_unsigned(name, v); };
  }
  return k;
}

std::vector<ConfigKey> build_keys() {
  return {
      make_key("model", &RunConfig::model, "model id: gbm, ou, tv_growth, irw_t"),
      make_key("method", &RunConfig::method, "fit method: mle, ee, bridge-mle"),
      make_key("data", &RunConfig::data, "input data CSV"),
      make_key("out", &RunConfig::out, "output file"),
      make_key("trajectory_out", &RunConfig::trajectory_out, "fitted trajectory CSV (collocate)"),
      make_key("latent_out", &RunConfig::latent_out, "latent path CSV when simulating noisy data"),
      make_key("fit_json", &RunConfig::fit_json, "fit result JSON supplying parameters (diagnose)"),
      make_key("seed", &RunConfig::seed, "random seed"),
      make_key("beta", &RunConfig::beta, "growth rate (gbm; initial rate for tv_growth)"),
      make_key("sigma", &RunConfig::sigma, "diffusion coefficient"),
      make_key("x0", &RunConfig::x0, "initial state"),
      make_key("gamma", &RunConfig::gamma, "mean-reversion rate (ou, tv_growth)"),
      make_key("beta_bar", &RunConfig::beta_bar, "long-run mean (ou, tv_growth)"),
      make_key("scheme", &RunConfig::scheme, "simulation scheme: exact or euler"),
      make_key("t_start", &RunConfig::t_start, "start time"),
      make_key("t_end", &RunConfig::t_end, "end time"),
      make_key("steps", &RunConfig::steps, "number of time steps"),
      make_key("substeps", &RunConfig::substeps, "Euler substeps between observations"),
      make_key("density", &RunConfig::density,
               "transition density for mle: closed_form, euler, fokker_planck"),
      make_key("psi", &RunConfig::psi, "estimating function family: ratio or polynomial"),
      make_key("moments", &RunConfig::moments, "number of moment conditions"),
      make_key("j", &RunConfig::j, "Monte Carlo replicates per conditional expectation"),
      make_key("m_sub", &RunConfig::m_sub, "bridge sub-intervals per observation gap"),
      make_key("j_samples", &RunConfig::j_samples, "bridge importance samples per pair"),
      make_key("fp_cells", &RunConfig::fp_cells, "Fokker-Planck spatial cells"),
      make_key("fp_steps", &RunConfig::fp_steps, "Fokker-Planck time steps"),
      make_key("obs_kind", &RunConfig::obs_kind, "observation noise: gaussian or student_t"),
      make_key("obs_scale", &RunConfig::obs_scale, "observation noise scale (0: exact data)"),
      make_key("obs_dof", &RunConfig::obs_dof, "student_t degrees of freedom"),
      make_key("n_particles", &RunConfig::n_particles, "particle count"),
      make_key("step_sd", &RunConfig::step_sd, "velocity step sd (irw_t)"),
      make_key("profile_param", &RunConfig::profile_param, "parameter profiled by filter"),
      make_key("profile_values", &RunConfig::profile_values, "comma-separated profile grid"),
      make_key("lambda", &RunConfig::lambda, "collocation penalty weight"),
      make_key("weight_mode", &RunConfig::weight_mode, "unweighted or sigma_weighted"),
      make_key("k", &RunConfig::k, "synthetic replicates"),
      make_key("envelope", &RunConfig::envelope, "envelope: quantile or minmax"),
      make_key("transform", &RunConfig::transform, "series transform before statistics: identity or log"),
  };
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate", "fit",      "filter",
                                              "collocate", "diagnose", "accept"};
  return names;
}

void apply_config(RunConfig& cfg, std::istream& in, const std::string& command) {
  const auto& keys = config_keys();
  std::vector<std::string> unknown;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(ErrorCode::config_error, "malformed section header on line " + std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(subcommands().begin(), subcommands().end(), section) == subcommands().end()) {
        unknown.push_back("[" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::config_error, "expected 'key = value' on line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
    if (it == keys.end()) {
      unknown.push_back(section.empty() ? key : section + "." + key);
      continue;
    }
    if (section.empty() || section == command) it->set(cfg, value);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    fail(ErrorCode::config_error, "unknown config entries: " + list);
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open config file '" + path + "'");
  apply_config(cfg, in, command);
}

std::string config_to_text(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[" << cfg.command << "]\n";
  for (const auto& k : config_keys()) out << k.name << " = " << k.get(cfg) << "\n";
  return out.str();
}

RunConfig config_from_text(const std::string& text) {
  // The first section names the command.
  RunConfig cfg;
  std::istringstream scan(text);
  std::string line;
  while (std::getline(scan, line)) {
    line = trim(line);
    if (!line.empty() && line.front() == '[' && line.back() == ']') {
      cfg.command = trim(line.substr(1, line.size() - 2));
      break;
    }
  }
  std::istringstream in(text);
  apply_config(cfg, in, cfg.command);
  return cfg;
}

}  // namespace driftlab
