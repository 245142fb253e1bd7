#include "driftlab/core/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "driftlab/core/error.hpp"

namespace driftlab {

namespace {

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48);
}

}  // namespace

LampertiTransform::LampertiTransform(DiffusionSpec spec, LampertiOptions options)
    : spec_(std::move(spec)), options_(options) {
  spec_.validate();
  if (spec_.state_dim != 1) {
    fail(ErrorCode::unsupported_dimension, "the state transform is defined for scalar models only");
  }
  require(options_.lower < options_.upper, "transform domain requires lower < upper");
  require(options_.reference > options_.lower && options_.reference < options_.upper,
          "transform reference point must lie inside the domain");
  // Scan the interior so a non-positive diffusion is reported up front.
  constexpr int kScan = 512;
  for (int i = 1; i < kScan; ++i) {
    const double x = options_.lower + (options_.upper - options_.lower) * i / kScan;
    (void)sigma_checked(x);
  }
  (void)sigma_checked(options_.reference);

  transformed_.state_dim = 1;
  transformed_.theta = spec_.theta;
  transformed_.x0 = {forward(spec_.x0[0])};
  transformed_.family = spec_.family.empty() ? "lamperti" : "lamperti_" + spec_.family;
  // The closure keeps its own copy of the map so the returned spec is self-contained.
  auto self = std::make_shared<const LampertiTransform>(*this);
  transformed_.drift = [self](std::span<const double> z, std::span<const double> th,
                              std::span<double> out) {
    const double x = self->inverse(z[0]);
    const double s = self->spec_.diffusion1(x, th);
    const double h = std::max(1e-6, 1e-6 * std::abs(x));
    const double ds =
        (self->spec_.diffusion1(x + h, th) - self->spec_.diffusion1(x - h, th)) / (2.0 * h);
    out[0] = self->spec_.drift1(x, th) / s - 0.5 * ds;
  };
  transformed_.diffusion = [](std::span<const double>, std::span<const double>,
                              std::span<double> out) { out[0] = 1.0; };
}

double LampertiTransform::sigma_checked(double x) const {
  const double s = spec_.diffusion1(x);
  if (!(s > 0.0) || !std::isfinite(s)) {
    fail(ErrorCode::transform_undefined,
         "diffusion is not strictly positive at x = " + std::to_string(x));
  }
  return s;
}

double LampertiTransform::forward(double x) const {
  require(x > options_.lower && x < options_.upper, "state outside the transform domain");
  const auto integrand = [this](double u) { return 1.0 / sigma_checked(u); };
  return integrate(integrand, options_.reference, x, options_.quadrature_tolerance);
}

double LampertiTransform::inverse(double z) const {
  // Newton on eta(x) = z using eta' = 1/sigma; eta is accumulated over the
  // short segments between iterates instead of re-integrating from the
  // reference each time.
  double x = options_.reference;
  double eta = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double gap = z - eta;
    if (std::abs(gap) <= 1e-13 * std::max(1.0, std::abs(z))) return x;
    double next = x + gap * sigma_checked(x);
    if (next <= options_.lower) next = 0.5 * (x + options_.lower);
    if (next >= options_.upper) next = 0.5 * (x + options_.upper);
    if (next == x) return x;
    eta += integrate([this](double u) { return 1.0 / sigma_checked(u); }, x, next,
                     options_.quadrature_tolerance);
    x = next;
  }
  fail(ErrorCode::transform_undefined, "inverse transform did not converge for z = " +
                                           std::to_string(z));
}

double LampertiTransform::transformed_drift(double z) const {
  double out = 0.0;
  transformed_.drift(std::span<const double>(&z, 1), spec_.theta, std::span<double>(&out, 1));
  return out;
}

LampertiTransform lamperti_transform(const DiffusionSpec& spec, const LampertiOptions& options) {
  return LampertiTransform(spec, options);
}

Path transform_path(const LampertiTransform& transform, const Path& path) {
  require(path.dim() == 1, "transform_path expects a scalar path");
  std::vector<double> z(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) z[k] = transform.forward(path.at(k));
  return Path(path.times(), std::move(z), 1);
}

}  // namespace driftlab
