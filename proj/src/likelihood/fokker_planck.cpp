#include "driftlab/likelihood/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftlab/core/error.hpp"

namespace driftlab {

namespace {

// Thomas algorithm; sub/diag/sup describe rows 0..n-1 of a tridiagonal system.
void solve_tridiagonal(const std::vector<double>& sub, const std::vector<double>& diag,
                       const std::vector<double>& sup, std::vector<double>& rhs,
                       std::vector<double>& scratch) {
  const std::size_t n = diag.size();
  scratch.resize(n);
  double denom = diag[0];
  scratch[0] = sup[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - sub[i] * scratch[i - 1];
    scratch[i] = sup[i] / denom;
    rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

double trapezoid(const std::vector<double>& f, double h) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) s += 0.5 * (f[i] + f[i + 1]);
  return s * h;
}

}  // namespace

double FokkerPlanckResult::at(double v) const {
  if (y.empty() || v < y.front() || v > y.back()) return 0.0;
  const double h = (y.back() - y.front()) / static_cast<double>(y.size() - 1);
  const auto i = std::min(static_cast<std::size_t>((v - y.front()) / h), y.size() - 2);
  const double w = (v - y[i]) / h;
  return (1.0 - w) * density[i] + w * density[i + 1];
}

FokkerPlanckResult fokker_planck_transition_density(const DiffusionSpec& spec, double dt, double x,
                                                    std::span<const double> y_grid,
                                                    const FokkerPlanckOptions& options) {
  spec.validate();
  if (spec.state_dim != 1) {
    fail(ErrorCode::unsupported_dimension, "the forward-equation solver is one-dimensional");
  }
  require(dt > 0.0, "fokker-planck: dt must be positive");
  require(options.time_steps >= 1, "fokker-planck: time_steps must be >= 1");
  if (y_grid.size() < 51) {
    fail(ErrorCode::invalid_grid, "grid too coarse: at least 50 cells are required");
  }
  const std::size_t n = y_grid.size();
  const double h = (y_grid.back() - y_grid.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((y_grid[i] - y_grid[i - 1]) - h) > 1e-9 * h) {
      fail(ErrorCode::invalid_grid, "grid must be uniform and increasing");
    }
  }
  if (x <= y_grid.front() || x >= y_grid.back()) {
    fail(ErrorCode::invalid_grid, "initial state lies outside the grid");
  }

  std::vector<double> mu(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = spec.drift1(y_grid[i]);
    const double s = spec.diffusion1(y_grid[i]);
    diff[i] = s * s;
    if (!std::isfinite(mu[i]) || !std::isfinite(diff[i])) {
      fail(ErrorCode::non_finite_term, "non-finite coefficient on the grid", i);
    }
  }

  const double s0 = spec.diffusion1(x);
  if (!(s0 > 0.0)) fail(ErrorCode::degenerate_density, "diffusion vanishes at the initial state");
  const double tau = std::min(h * h / (s0 * s0), dt);
  const double centre = x + spec.drift1(x) * tau;
  const double width2 = s0 * s0 * tau;

  std::vector<double> p(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = y_grid[i] - centre;
    p[i] = std::exp(-0.5 * r * r / width2);
  }
  const double m0 = trapezoid(p, h);
  for (double& v : p) v /= m0;

  // L p_i = -(mu p)'_i + 1/2 (D p)''_i on interior nodes; p_0 = p_{n-1} = 0.
  const double remaining = dt - tau;
  if (remaining > 0.0) {
    const double k = remaining / static_cast<double>(options.time_steps);
    const std::size_t m = n - 2;
    std::vector<double> lo(m), di(m), up(m);
    std::vector<double> a_sub(m), a_diag(m), a_sup(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = j + 1;
      lo[j] = mu[i - 1] / (2.0 * h) + diff[i - 1] / (2.0 * h * h);
      di[j] = -diff[i] / (h * h);
      up[j] = -mu[i + 1] / (2.0 * h) + diff[i + 1] / (2.0 * h * h);
      a_sub[j] = -0.5 * k * lo[j];
      a_diag[j] = 1.0 - 0.5 * k * di[j];
      a_sup[j] = -0.5 * k * up[j];
    }
    std::vector<double> rhs(m), scratch;
    for (std::size_t step = 0; step < options.time_steps; ++step) {
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = j + 1;
        rhs[j] = p[i] + 0.5 * k * (lo[j] * p[i - 1] + di[j] * p[i] + up[j] * p[i + 1]);
      }
      solve_tridiagonal(a_sub, a_diag, a_sup, rhs, scratch);
      std::copy(rhs.begin(), rhs.end(), p.begin() + 1);
    }
  }

  FokkerPlanckResult out;
  out.y.assign(y_grid.begin(), y_grid.end());
  out.min_raw = *std::min_element(p.begin(), p.end());
  out.density = p;
  for (double& v : out.density) v = std::max(v, 0.0);
  out.mass = trapezoid(out.density, h);
  const double edge = std::max(out.density[1], out.density[n - 2]);
  if (std::abs(out.mass - 1.0) > options.mass_tolerance || edge > options.boundary_tolerance) {
    out.boundary_warning = true;
    out.warning = "boundary truncation: mass " + std::to_string(out.mass) +
                  ", edge density " + std::to_string(edge);
  }
  return out;
}

}  // namespace driftlab
