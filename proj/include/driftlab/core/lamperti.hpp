#pragma once

#include "driftlab/core/model.hpp"

namespace driftlab {

struct LampertiOptions {
  /// Lower limit of the integral eta(x) = int_reference^x du / sigma(u).
  double reference = 1.0;
  /// Open state domain; the inverse map searches this bracket and the
  /// diffusion must stay strictly positive on it.
  double lower = -1e3;
  double upper = 1e3;
  double quadrature_tolerance = 1e-10;
};

/// Variance-stabilizing state map for a scalar diffusion. The transformed
/// process Z = eta(X) has unit diffusion and drift
///   mu(x)/sigma(x) - sigma'(x)/2,  x = eta^{-1}(z),
/// with sigma' by central difference (step max(1e-6, 1e-6 |x|)).
class LampertiTransform {
 public:
  LampertiTransform(DiffusionSpec spec, LampertiOptions options);

  [[nodiscard]] double forward(double x) const;
  [[nodiscard]] double inverse(double z) const;
  [[nodiscard]] double transformed_drift(double z) const;
  /// Unit-diffusion model in the transformed coordinate; x0 is mapped.
  [[nodiscard]] const DiffusionSpec& transformed() const noexcept { return transformed_; }
  [[nodiscard]] const DiffusionSpec& original() const noexcept { return spec_; }

 private:
  [[nodiscard]] double sigma_checked(double x) const;

  DiffusionSpec spec_;
  LampertiOptions options_;
  DiffusionSpec transformed_;
};

/// Throws unsupported_dimension for state_dim > 1 and transform_undefined when
/// the diffusion is not strictly positive on the domain.
LampertiTransform lamperti_transform(const DiffusionSpec& spec, const LampertiOptions& options = {});

/// Path mapped pointwise through the forward transform.
Path transform_path(const LampertiTransform& transform, const Path& path);

}  // namespace driftlab
