#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "driftlab/collocation/bspline.hpp"
#include "driftlab/core/model.hpp"
#include "driftlab/core/optimize.hpp"
#include "driftlab/core/path_io.hpp"
#include "driftlab/likelihood/observations.hpp"
#include "driftlab/statespace/observation_model.hpp"

namespace driftlab {

enum class WeightMode { unweighted, sigma_weighted };

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& name);

/// lambda * integral over [t0, t1] of |xdot - mu(x, theta)|^2, or with each
/// coordinate divided by sigma(x, theta) in sigma_weighted mode. A NaN end
/// point means the matching end of the basis domain.
struct PenaltySpec {
  double lambda = 1.0;
  WeightMode weight_mode = WeightMode::unweighted;
  double t0 = std::numeric_limits<double>::quiet_NaN();
  double t1 = std::numeric_limits<double>::quiet_NaN();
  /// Simpson subintervals per knot interval (even).
  std::size_t nodes_per_interval = 10;

  void validate() const;
};

struct ObjectiveParts {
  double data = 0.0;
  /// lambda times residual_integral.
  double penalty = 0.0;
  double residual_integral = 0.0;

  [[nodiscard]] double total() const { return data + penalty; }
};

/// Penalized smoothing objective over spline coefficients (row-major,
/// coeffs[j * state_dim + c]) and model parameters.
class CollocationProblem {
 public:
  CollocationProblem(BSplineBasis basis, NoisyObservationSet obs, ObservationModel om,
                     DiffusionSpec spec, PenaltySpec penalty);

  [[nodiscard]] ObjectiveParts evaluate(std::span<const double> coeffs,
                                        std::span<const double> theta) const;
  [[nodiscard]] double objective(std::span<const double> coeffs,
                                 std::span<const double> theta) const {
    return evaluate(coeffs, theta).total();
  }
  /// Gradient in the coefficients. Exact in the spline algebra; Jacobians of
  /// the drift, diffusion and link in the state use central differences.
  void gradient(std::span<const double> coeffs, std::span<const double> theta,
                std::span<double> out) const;

  /// Penalized least-squares spline through the observations (identity link)
  /// or constant x0 otherwise.
  [[nodiscard]] std::vector<double> initial_coeffs() const;

  [[nodiscard]] std::size_t n_coeffs() const { return basis_.size() * dim_; }
  [[nodiscard]] std::size_t state_dim() const { return dim_; }
  [[nodiscard]] const BSplineBasis& basis() const { return basis_; }
  [[nodiscard]] const DiffusionSpec& spec() const { return spec_; }
  [[nodiscard]] const PenaltySpec& penalty() const { return penalty_; }

 private:
  struct Node {
    double t;
    double weight;
    std::size_t first;
    std::array<double, 4> b;
    std::array<double, 4> db;
  };

  void state_at(const Node& node, std::span<const double> coeffs, std::span<double> x,
                std::span<double> xdot) const;
  void data_gradient(std::span<const double> y, std::span<const double> x,
                     std::span<double> g) const;

  BSplineBasis basis_;
  NoisyObservationSet obs_;
  ObservationModel om_;
  DiffusionSpec spec_;
  PenaltySpec penalty_;
  std::size_t dim_ = 1;
  std::vector<Node> obs_nodes_;
  std::vector<Node> quad_nodes_;
};

double collocation_objective(std::span<const double> coeffs, std::span<const double> theta,
                             const BSplineBasis& basis, const NoisyObservationSet& obs,
                             const ObservationModel& om, const DiffusionSpec& spec,
                             const PenaltySpec& penalty);

/// Breakpoints at the observation times.
BSplineBasis basis_from_observations(const NoisyObservationSet& obs);

struct CollocationState {
  std::vector<double> coeffs;  // empty: CollocationProblem::initial_coeffs
  std::vector<double> theta;   // empty: spec.theta
};

struct CollocationOptions {
  /// Estimated entries of theta; empty means all, on the natural scale.
  ParameterSpace space;
  std::size_t max_outer = 200;
  /// Stop when one outer sweep lowers the objective by less than
  /// decrease_tolerance * (1 + |objective|).
  double decrease_tolerance = 1e-9;
  BfgsOptions inner{1e-8, 1e-15, 500};
  NelderMeadOptions outer{1e-10, 1e-9, 2000, 0.1, 2};
  std::size_t report_points = 201;
};

struct CollocationFit {
  FitResult fit;
  std::vector<double> coeffs;
  ObjectiveParts parts;
  double lambda = 0.0;
  WeightMode weight_mode = WeightMode::unweighted;
  BSplineBasis basis;
  Path trajectory;
  Path derivative;
};

CollocationFit collocation_fit(const NoisyObservationSet& obs, const ObservationModel& om,
                               const DiffusionSpec& spec, const BSplineBasis& basis,
                               const PenaltySpec& penalty, const CollocationState& init = {},
                               const CollocationOptions& opts = {});

/// Header `t,x_fit,dxdt_fit` (numbered per coordinate when state_dim > 1).
Table trajectory_table(const CollocationFit& fit);

/// Constant diffusion coefficient of the SDE whose MAP path problem matches
/// the penalty weight lambda: 1 / sqrt(2 lambda).
double map_equivalent_sigma(double lambda);
double lambda_from_sigma(double sigma);

}  // namespace driftlab
