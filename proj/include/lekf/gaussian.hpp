#pragma once

#include "lekf/lie_group.hpp"
#include "lekf/rng.hpp"

namespace lekf {

/// Which side the local perturbation composes on.
///   body:    g = reference * exp(xi)
///   spatial: g = exp(xi) * reference
enum class Frame { Body, Spatial };

/// Extended concentrated Gaussian: xi ~ N(mean, cov) pushed through exp
/// around a reference point.
struct ExtendedConcentratedGaussian {
  GroupPtr group;
  GroupElement reference;
  AlgebraVector mean;
  Matrix cov;
  Frame frame = Frame::Body;

  /// Throws DimensionMismatch or NumericalFailure when the fields are
  /// inconsistent or cov is not symmetric positive semi-definite.
  void validate() const;
};

/// Re-expresses the distribution in the other frame:
/// spatial mean = Ad(ref) * body mean, spatial cov = Ad cov Ad^T.
ExtendedConcentratedGaussian convert_frame(const ExtendedConcentratedGaussian& d);

/// Moves a body-frame distribution to a new reference point.
///
///   mean' = log(new_ref^-1 * ref * exp(mean))
///   cov'  = Jr(mean')^-1 Jr(mean) cov Jr(mean)^T Jr(mean')^-T
///
/// For new_ref = ref * exp(mean) this is mean' = 0, cov' = Jr cov Jr^T.
ExtendedConcentratedGaussian reset_body(const ExtendedConcentratedGaussian& d,
                                        const GroupElement& new_ref);

/// Spatial counterpart using left Jacobians:
///
///   mean' = log(exp(mean) * ref * new_ref^-1)
///   cov'  = Jl(mean')^-1 Jl(mean) cov Jl(mean)^T Jl(mean')^-T
ExtendedConcentratedGaussian reset_spatial(const ExtendedConcentratedGaussian& d,
                                           const GroupElement& new_ref);

/// Draws one sample.  Uses the lower Cholesky factor of cov; semi-definite
/// covariances (zero blocks) fall back to a pivoted LDL^T factor.
GroupElement sample(const ExtendedConcentratedGaussian& d, Rng& rng);

/// Square-root factor L with L L^T = cov.  Throws NumericalFailure when cov
/// has a negative eigenvalue.
Matrix covariance_factor(const Matrix& cov);

}  // namespace lekf
