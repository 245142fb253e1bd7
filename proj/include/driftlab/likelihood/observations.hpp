#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/core/model.hpp"
#include "driftlab/core/path_io.hpp"

namespace driftlab {

/// Exact scalar observations x_{t_i} at strictly increasing times.
struct ObservationSet {
  std::vector<double> times;
  std::vector<double> values;

  void validate() const;
  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }

  static ObservationSet from_path(const Path& path, std::size_t coordinate = 0);
};

/// Header `t,x`.
Table observations_to_table(const ObservationSet& obs);
ObservationSet observations_from_table(const Table& table);

/// Outcome of an estimation routine. `theta_hat` holds the free parameters on
/// their natural scale; `theta_full` is the complete model parameter vector.
struct FitResult {
  std::vector<double> theta_hat;
  std::vector<double> theta_full;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> standard_errors;
  std::map<std::string, double> diagnostics;
};

/// Selects which entries of a model's theta are estimated. Entries flagged
/// positive are optimized on the log scale.
struct ParameterSpace {
  std::vector<std::size_t> free;
  std::vector<bool> positive;

  [[nodiscard]] std::size_t size() const noexcept { return free.size(); }
  void validate(std::size_t theta_size) const;
  /// Writes natural-scale free values into a copy of `base`.
  [[nodiscard]] std::vector<double> embed(const std::vector<double>& base,
                                          std::span<const double> free_values) const;
  [[nodiscard]] std::vector<double> extract(const std::vector<double>& theta) const;
  [[nodiscard]] std::vector<double> to_search(std::span<const double> natural) const;
  [[nodiscard]] std::vector<double> from_search(std::span<const double> search) const;

  /// Every parameter of a built-in family ("gbm": beta, sigma; "ou": gamma,
  /// beta_bar, sigma).
  static ParameterSpace for_family(const std::string& family);
};

}  // namespace driftlab
