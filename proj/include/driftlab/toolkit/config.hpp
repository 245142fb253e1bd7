#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <string>
#include <vector>

namespace driftlab {

/// Settings for one CLI run. Every field is addressable by a config key of the
/// same name (see config_keys()).
struct RunConfig {
  std::string command = "simulate";
  std::string model = "gbm";
  std::string method = "mle";
  std::string data;
  std::string out;
  std::string trajectory_out;
  std::string latent_out;
  std::string fit_json;
  std::uint64_t seed = 1;

  // Model parameters.
  double beta = 0.1;
  double sigma = 0.3;
  double x0 = 1.0;
  double gamma = 1.0;
  double beta_bar = 0.0;

  // Simulation design.
  std::string scheme = "exact";
  double t_start = 0.0;
  double t_end = 1.0;
  std::uint64_t steps = 100;
  std::uint64_t substeps = 20;

  // Likelihood and estimating functions.
  std::string density = "closed_form";
  std::string psi = "ratio";
  std::uint64_t moments = 1;
  std::uint64_t j = 1;
  std::uint64_t m_sub = 8;
  std::uint64_t j_samples = 200;
  std::uint64_t fp_cells = 400;
  std::uint64_t fp_steps = 200;

  // Observation model and particle filter.
  std::string obs_kind = "gaussian";
  double obs_scale = 0.0;
  double obs_dof = 5.0;
  std::uint64_t n_particles = 1000;
  double step_sd = 0.1;
  std::string profile_param;
  std::string profile_values;

  // Collocation.
  double lambda = 1.0;
  std::string weight_mode = "unweighted";

  // Adequacy diagnostic.
  std::uint64_t k = 50;
  std::string envelope = "quantile";
  std::string transform = "identity";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  /// Throws config_error when the text does not parse as the field's type.
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<ConfigKey>& config_keys();

const std::vector<std::string>& subcommands();

/// Applies a key-value config text. Lines are `key = value`; `#` starts a
/// comment; `[name]` opens a section. Keys before any section apply to every
/// subcommand, keys in a section only to that subcommand. Unknown keys or
/// sections are a config_error naming all of them.
void apply_config(RunConfig& cfg, std::istream& in, const std::string& command);
void apply_config_file(RunConfig& cfg, const std::string& path, const std::string& command);

/// Every key under a section named after cfg.command.
std::string config_to_text(const RunConfig& cfg);
RunConfig config_from_text(const std::string& text);

}  // namespace driftlab
