#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace driftlab {

/// Vector field evaluated at (state, theta) into `out` (length state_dim).
using FieldFn = std::function<void(std::span<const double> state,
                                   std::span<const double> theta,
                                   std::span<double> out)>;

/// Scalar convenience signature: f(x, theta).
using ScalarFieldFn = std::function<double(double x, std::span<const double> theta)>;

/// dX_t = drift(X_t, theta) dt + diag(diffusion(X_t, theta)) dB_t.
///
/// `family` names built-in models ("gbm", "ou") so closed-form routines can
/// recover their parameters from `theta`; user models leave it empty.
struct DiffusionSpec {
  std::size_t state_dim = 1;
  std::vector<double> theta;
  std::vector<double> x0;
  FieldFn drift;
  FieldFn diffusion;
  std::string family;

  /// Throws invalid_argument when dimensions or callables are inconsistent.
  void validate() const;

  [[nodiscard]] DiffusionSpec with_theta(std::span<const double> new_theta) const;

  // Scalar helpers; only valid for state_dim == 1.
  [[nodiscard]] double drift1(double x) const { return drift1(x, theta); }
  [[nodiscard]] double diffusion1(double x) const { return diffusion1(x, theta); }
  [[nodiscard]] double drift1(double x, std::span<const double> th) const;
  [[nodiscard]] double diffusion1(double x, std::span<const double> th) const;
};

DiffusionSpec make_scalar_spec(ScalarFieldFn drift, ScalarFieldFn diffusion,
                               std::vector<double> theta, double x0,
                               std::string family = {});

/// Geometric Brownian motion dX = beta X dt + sigma X dB.
struct GbmParams {
  double beta = 0.0;
  double sigma = 0.0;
  double x0 = 1.0;

  void validate() const;
};

/// Ornstein-Uhlenbeck process d(beta_t) = -gamma (beta_t - beta_bar) dt + sigma dB.
struct OuParams {
  double gamma = 1.0;
  double beta_bar = 0.0;
  double sigma = 0.0;
  double b0 = 0.0;

  void validate() const;
};

/// theta = {beta, sigma}.
DiffusionSpec gbm_spec(const GbmParams& p);
/// theta = {gamma, beta_bar, sigma}.
DiffusionSpec ou_spec(const OuParams& p);

GbmParams gbm_params_from(const DiffusionSpec& spec);
OuParams ou_params_from(const DiffusionSpec& spec);

/// Uniform grid with n_steps intervals on [t_start, t_end].
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t n_steps = 1;

  void validate() const;
  [[nodiscard]] double dt() const { return (t_end - t_start) / static_cast<double>(n_steps); }
  [[nodiscard]] double time(std::size_t k) const;
  [[nodiscard]] std::vector<double> times() const;
};

/// Trajectory on a strictly increasing time grid. Values are stored row-major
/// (one row of `dim` entries per time point).
class Path {
 public:
  Path() = default;
  Path(std::vector<double> times, std::vector<double> values, std::size_t dim = 1);

  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }
  [[nodiscard]] double time(std::size_t k) const { return times_.at(k); }
  [[nodiscard]] std::span<const double> value(std::size_t k) const {
    return {values_.data() + k * dim_, dim_};
  }
  /// Coordinate c of point k.
  [[nodiscard]] double at(std::size_t k, std::size_t c = 0) const { return values_[k * dim_ + c]; }
  [[nodiscard]] double back(std::size_t c = 0) const { return at(size() - 1, c); }
  [[nodiscard]] std::vector<double> coordinate(std::size_t c = 0) const;

  friend bool operator==(const Path&, const Path&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t dim_ = 1;
};

}  // namespace driftlab
