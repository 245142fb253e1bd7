#include "driftlab/collocation/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/core/error.hpp"

namespace driftlab {

BSplineBasis::BSplineBasis(std::vector<double> breakpoints) : breaks_(std::move(breakpoints)) {
  if (breaks_.size() < 2) fail(ErrorCode::invalid_argument, "a spline basis needs at least two breakpoints");
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    require(std::isfinite(breaks_[i]), "breakpoints must be finite");
    require(i == 0 || breaks_[i] > breaks_[i - 1], "breakpoints must be strictly increasing");
  }
  knots_.assign(3, breaks_.front());
  knots_.insert(knots_.end(), breaks_.begin(), breaks_.end());
  knots_.insert(knots_.end(), 3, breaks_.back());
  n_basis_ = knots_.size() - kOrder;
}

std::size_t BSplineBasis::span_index(double t) const {
  // Largest k in [3, n_basis - 1] with knots[k] <= t.
  if (t >= knots_[n_basis_]) return n_basis_ - 1;
  if (t <= knots_[3]) return 3;
  const auto it = std::upper_bound(knots_.begin() + 3, knots_.begin() + static_cast<std::ptrdiff_t>(n_basis_ + 1), t);
  return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

std::size_t BSplineBasis::evaluate(double t, std::array<double, 4>& value,
                                   std::array<double, 4>& derivative) const {
  const std::size_t k = span_index(t);
  // Cox-de Boor triangle; after degree p, n[r] = N_{k-p+r, p}(t).
  double n[4] = {1.0, 0.0, 0.0, 0.0};
  double left[4] = {0.0}, right[4] = {0.0};
  double quad[3] = {0.0, 0.0, 0.0};
  for (std::size_t j = 1; j <= 3; ++j) {
    left[j] = t - knots_[k + 1 - j];
    right[j] = knots_[k + j] - t;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
    if (j == 2) std::copy(n, n + 3, quad);
  }
  const std::size_t first = k - 3;
  for (std::size_t r = 0; r < 4; ++r) {
    const std::size_t i = first + r;
    double d = 0.0;
    if (r >= 1) d += quad[r - 1] / (knots_[i + 3] - knots_[i]);
    if (r <= 2) d -= quad[r] / (knots_[i + 4] - knots_[i + 1]);
    value[r] = n[r];
    derivative[r] = 3.0 * d;
  }
  return first;
}

double BSplineBasis::value(std::span<const double> coeffs, double t, std::size_t dim,
                           std::size_t c) const {
  std::array<double, 4> b{}, db{};
  const std::size_t j0 = evaluate(t, b, db);
  double s = 0.0;
  for (std::size_t r = 0; r < 4; ++r) s += coeffs[(j0 + r) * dim + c] * b[r];
  return s;
}

double BSplineBasis::derivative(std::span<const double> coeffs, double t, std::size_t dim,
                                std::size_t c) const {
  std::array<double, 4> b{}, db{};
  const std::size_t j0 = evaluate(t, b, db);
  double s = 0.0;
  for (std::size_t r = 0; r < 4; ++r) s += coeffs[(j0 + r) * dim + c] * db[r];
  return s;
}

std::pair<BSplineBasis, std::vector<double>> BSplineBasis::insert_knot(
    double t, std::span<const double> coeffs, std::size_t dim) const {
  require(coeffs.size() == n_basis_ * dim, "coefficient count does not match the basis");
  require(t > lower() && t < upper(), "inserted knot must lie inside the domain");
  require(std::find(breaks_.begin(), breaks_.end(), t) == breaks_.end(),
          "inserted knot duplicates a breakpoint");
  // Boehm's algorithm for a single knot.
  const std::size_t k = span_index(t);
  std::vector<double> out((n_basis_ + 1) * dim);
  for (std::size_t i = 0; i <= n_basis_; ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      double v;
      if (i + 3 <= k) {
        v = coeffs[i * dim + c];
      } else if (i > k) {
        v = coeffs[(i - 1) * dim + c];
      } else {
        const double a = (t - knots_[i]) / (knots_[i + 3] - knots_[i]);
        v = (1.0 - a) * coeffs[(i - 1) * dim + c] + a * coeffs[i * dim + c];
      }
      out[i * dim + c] = v;
    }
  }
  std::vector<double> br = breaks_;
  br.insert(std::upper_bound(br.begin(), br.end(), t), t);
  return {BSplineBasis(std::move(br)), std::move(out)};
}

}  // namespace driftlab
