#include "driftlab/statespace/observation_model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "driftlab/core/error.hpp"

namespace driftlab {

void ObservationModel::validate() const {
  require(scale > 0.0 && std::isfinite(scale), "observation scale must be > 0");
  require(kind != ObservationKind::student_t || (dof > 0.0 && std::isfinite(dof)),
          "student_t observations need dof > 0");
  require(obs_dim >= 1, "observation dimension must be positive");
}

void ObservationModel::mean(std::span<const double> state, std::span<double> out) const {
  if (link) {
    link(state, out);
  } else {
    for (std::size_t c = 0; c < obs_dim; ++c) out[c] = state[c];
  }
}

double ObservationModel::log_density(std::span<const double> y, std::span<const double> state) const {
  double buf[16];
  std::vector<double> heap;
  std::span<double> m;
  if (obs_dim <= 16) {
    m = std::span<double>(buf, obs_dim);
  } else {
    heap.resize(obs_dim);
    m = heap;
  }
  mean(state, m);
  double total = 0.0;
  if (kind == ObservationKind::gaussian) {
    const double norm = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(scale);
    for (std::size_t c = 0; c < obs_dim; ++c) {
      const double r = (y[c] - m[c]) / scale;
      total += norm - 0.5 * r * r;
    }
  } else {
    const double norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                        0.5 * std::log(dof * std::numbers::pi) - std::log(scale);
    for (std::size_t c = 0; c < obs_dim; ++c) {
      const double r = (y[c] - m[c]) / scale;
      total += norm - 0.5 * (dof + 1.0) * std::log1p(r * r / dof);
    }
  }
  return total;
}

void ObservationModel::sample(std::span<const double> state, Stream& rng, std::span<double> y) const {
  mean(state, y);
  for (std::size_t c = 0; c < obs_dim; ++c) {
    double noise = rng.normal();
    if (kind == ObservationKind::student_t) {
      std::gamma_distribution<double> chi_half(0.5 * dof, 2.0);
      noise /= std::sqrt(chi_half(rng) / dof);
    }
    y[c] += scale * noise;
  }
}

ObservationModel gaussian_observations(double scale, std::size_t obs_dim) {
  ObservationModel om;
  om.kind = ObservationKind::gaussian;
  om.scale = scale;
  om.obs_dim = obs_dim;
  om.validate();
  return om;
}

ObservationModel student_t_observations(double scale, double dof, std::size_t obs_dim) {
  ObservationModel om;
  om.kind = ObservationKind::student_t;
  om.scale = scale;
  om.dof = dof;
  om.obs_dim = obs_dim;
  om.validate();
  return om;
}

void NoisyObservationSet::validate() const {
  require(dim >= 1, "observation dimension must be positive");
  require(y.size() == times.size() * dim, "observation values do not match times");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], "observation times must be strictly increasing");
  }
  for (double v : y) require(std::isfinite(v), "observations must be finite");
}

Table noisy_to_table(const NoisyObservationSet& obs) {
  Table t;
  t.header.push_back("t");
  for (std::size_t c = 0; c < obs.dim; ++c) t.header.push_back("y" + std::to_string(c + 1));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::vector<double> row{obs.times[i]};
    for (double v : obs.at(i)) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

NoisyObservationSet noisy_from_table(const Table& table) {
  if (table.header.size() < 2) fail(ErrorCode::io_error, "observation CSV needs t and y columns");
  NoisyObservationSet obs;
  obs.dim = table.header.size() - 1;
  for (const auto& r : table.rows) {
    obs.times.push_back(r[0]);
    obs.y.insert(obs.y.end(), r.begin() + 1, r.end());
  }
  obs.validate();
  return obs;
}

}  // namespace driftlab
