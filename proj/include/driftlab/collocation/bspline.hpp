#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace driftlab {

/// Cubic B-spline basis on clamped knots. Breakpoints are the distinct knot
/// locations; the end points are repeated four times, so
/// n_basis = (breakpoints - 2) + 4.
class BSplineBasis {
 public:
  static constexpr std::size_t kOrder = 4;

  BSplineBasis() = default;
  explicit BSplineBasis(std::vector<double> breakpoints);

  [[nodiscard]] std::size_t size() const noexcept { return n_basis_; }
  [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
  [[nodiscard]] double lower() const { return breaks_.front(); }
  [[nodiscard]] double upper() const { return breaks_.back(); }

  /// Values and first derivatives of the four basis functions that can be
  /// nonzero at t. Returns the index of the first of them.
  std::size_t evaluate(double t, std::array<double, 4>& value,
                       std::array<double, 4>& derivative) const;

  /// Spline value sum_j coeffs[j * dim + c] B_j(t) for coordinate c.
  [[nodiscard]] double value(std::span<const double> coeffs, double t, std::size_t dim = 1,
                             std::size_t c = 0) const;
  [[nodiscard]] double derivative(std::span<const double> coeffs, double t, std::size_t dim = 1,
                                  std::size_t c = 0) const;

  /// Inserts a breakpoint and returns the refined basis with coefficients
  /// that represent the same curve.
  [[nodiscard]] std::pair<BSplineBasis, std::vector<double>> insert_knot(
      double t, std::span<const double> coeffs, std::size_t dim = 1) const;

 private:
  [[nodiscard]] std::size_t span_index(double t) const;

  std::vector<double> breaks_;
  std::vector<double> knots_;
  std::size_t n_basis_ = 0;
};

}  // namespace driftlab
