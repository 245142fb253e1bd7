#include "driftlab/likelihood/observations.hpp"

#include <cmath>

#include "driftlab/core/error.hpp"

namespace driftlab {

void ObservationSet::validate() const {
  require(times.size() == values.size(), "observation times and values differ in length");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], "observation times must be strictly increasing");
  }
  for (double v : values) require(std::isfinite(v), "observation values must be finite");
}

ObservationSet ObservationSet::from_path(const Path& path, std::size_t coordinate) {
  return {path.times(), path.coordinate(coordinate)};
}

Table observations_to_table(const ObservationSet& obs) {
  Table t{{"t", "x"}, {}};
  for (std::size_t i = 0; i < obs.size(); ++i) t.rows.push_back({obs.times[i], obs.values[i]});
  return t;
}

ObservationSet observations_from_table(const Table& table) {
  if (table.header.size() != 2) fail(ErrorCode::io_error, "observation CSV must have columns t,x");
  ObservationSet obs{table.column(0), table.column(1)};
  obs.validate();
  return obs;
}

void ParameterSpace::validate(std::size_t theta_size) const {
  require(free.size() == positive.size(), "parameter space: free/positive length mismatch");
  for (std::size_t i : free) require(i < theta_size, "parameter space: index out of range");
}

std::vector<double> ParameterSpace::embed(const std::vector<double>& base,
                                          std::span<const double> free_values) const {
  std::vector<double> theta = base;
  for (std::size_t k = 0; k < free.size(); ++k) theta[free[k]] = free_values[k];
  return theta;
}

std::vector<double> ParameterSpace::extract(const std::vector<double>& theta) const {
  std::vector<double> out(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) out[k] = theta[free[k]];
  return out;
}

std::vector<double> ParameterSpace::to_search(std::span<const double> natural) const {
  std::vector<double> out(natural.begin(), natural.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (positive[k]) {
      require(out[k] > 0.0, "positive parameter must start above zero");
      out[k] = std::log(out[k]);
    }
  }
  return out;
}

std::vector<double> ParameterSpace::from_search(std::span<const double> search) const {
  std::vector<double> out(search.begin(), search.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (positive[k]) out[k] = std::exp(out[k]);
  }
  return out;
}

ParameterSpace ParameterSpace::for_family(const std::string& family) {
  if (family == "gbm") return {{0, 1}, {false, true}};
  if (family == "ou") return {{0, 1, 2}, {true, false, true}};
  fail(ErrorCode::invalid_argument, "no default parameter space for family '" + family + "'");
}

}  // namespace driftlab
