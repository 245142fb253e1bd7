#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace driftlab {

using Objective = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  /// Converged when the simplex value spread and its diameter both drop below
  /// these tolerances.
  double f_tolerance = 1e-8;
  double x_tolerance = 1e-8;
  std::size_t max_iterations = 2000;
  double initial_step = 0.1;
  /// Fresh simplices built around the incumbent after each convergence.
  std::size_t max_restarts = 4;
};

/// Derivative-free simplex minimization with restarts. Non-finite objective
/// values are treated as +infinity.
OptimResult nelder_mead(const Objective& f, std::vector<double> x0,
                        const NelderMeadOptions& options = {});

struct BfgsOptions {
  /// Converged when ||grad||_inf <= gradient_tolerance * (1 + |f|) or the
  /// relative decrease of f falls below f_tolerance.
  double gradient_tolerance = 1e-8;
  double f_tolerance = 1e-14;
  std::size_t max_iterations = 1000;
};

/// Quasi-Newton minimization with Armijo backtracking. When given, the initial
/// inverse Hessian replaces the identity.
OptimResult bfgs(const Objective& f, const GradientFn& grad, std::vector<double> x0,
                 const BfgsOptions& options = {},
                 std::optional<Eigen::MatrixXd> initial_inverse_hessian = std::nullopt);

struct RootOptions {
  double tolerance = 1e-6;
  std::size_t max_iterations = 100;
  double fd_step = 1e-6;
};

struct RootResult {
  std::vector<double> x;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Damped Broyden iteration for F(x) = 0, backtracking on ||F||. The Jacobian
/// is started (and refreshed on stalls) by forward differences.
RootResult broyden_solve(const ResidualFn& residual, std::vector<double> x0,
                         const RootOptions& options = {});

/// Central-difference Hessian of f.
Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x,
                                  double relative_step = 1e-4);

}  // namespace driftlab
