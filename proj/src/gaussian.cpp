#include "lekf/gaussian.hpp"

#include <cmath>
#include <string>

namespace lekf {

namespace {

double min_eigenvalue(const Matrix& cov) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_psd(const Matrix& cov, const char* where) {
  if (!cov.allFinite()) {
    throw NumericalFailure(std::string(where) + ": covariance is not finite", 0.0,
                           std::numeric_limits<double>::quiet_NaN());
  }
  const double lambda = min_eigenvalue(cov);
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (lambda < -1e-12 * scale) {
    throw NumericalFailure(std::string(where) + ": covariance is not positive semi-definite", 0.0,
                           lambda);
  }
}

Matrix congruence(const Matrix& t, const Matrix& cov) {
  Matrix out = t * cov * t.transpose();
  symmetrize(out);
  return out;
}

}  // namespace

void ExtendedConcentratedGaussian::validate() const {
  if (!group) throw DimensionMismatch("distribution has no group");
  const int k = group->dim();
  if (mean.size() != k) throw DimensionMismatch("mean length does not match group dimension");
  if (cov.rows() != k || cov.cols() != k) throw DimensionMismatch("covariance must be k x k");
  if (reference.size() != group->matrix_size()) {
    throw DimensionMismatch("reference point has the wrong size");
  }
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw NumericalFailure("covariance is not symmetric", 0.0, 0.0);
  }
  require_psd(cov, "distribution");
}

ExtendedConcentratedGaussian convert_frame(const ExtendedConcentratedGaussian& d) {
  ExtendedConcentratedGaussian out = d;
  if (d.frame == Frame::Body) {
    const Matrix ad = d.group->Ad(d.reference);
    out.mean = ad * d.mean;
    out.cov = congruence(ad, d.cov);
    out.frame = Frame::Spatial;
  } else {
    const Matrix ad_inv = d.group->Ad(d.group->inverse(d.reference));
    out.mean = ad_inv * d.mean;
    out.cov = congruence(ad_inv, d.cov);
    out.frame = Frame::Body;
  }
  return out;
}

ExtendedConcentratedGaussian reset_body(const ExtendedConcentratedGaussian& d,
                                        const GroupElement& new_ref) {
  if (d.frame != Frame::Body) throw DimensionMismatch("reset_body expects a body-frame distribution");
  const LieGroup& g = *d.group;
  const GroupElement moved =
      g.compose(g.inverse(new_ref), g.compose(d.reference, g.exp(d.mean)));
  const AlgebraVector new_mean = g.log(moved);
  const Matrix t = g.jac_right_inv(new_mean) * g.jac_right(d.mean);

  ExtendedConcentratedGaussian out = d;
  out.reference = new_ref;
  out.mean = new_mean;
  out.cov = congruence(t, d.cov);
  require_psd(out.cov, "reset_body");
  return out;
}

ExtendedConcentratedGaussian reset_spatial(const ExtendedConcentratedGaussian& d,
                                           const GroupElement& new_ref) {
  if (d.frame != Frame::Spatial) {
    throw DimensionMismatch("reset_spatial expects a spatial-frame distribution");
  }
  const LieGroup& g = *d.group;
  const GroupElement moved =
      g.compose(g.compose(g.exp(d.mean), d.reference), g.inverse(new_ref));
  const AlgebraVector new_mean = g.log(moved);
  const Matrix t = g.jac_left_inv(new_mean) * g.jac_left(d.mean);

  ExtendedConcentratedGaussian out = d;
  out.reference = new_ref;
  out.mean = new_mean;
  out.cov = congruence(t, d.cov);
  require_psd(out.cov, "reset_spatial");
  return out;
}

Matrix covariance_factor(const Matrix& cov) {
  const Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const Eigen::LDLT<Matrix> ldlt(cov);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalFailure("covariance factorization failed", 0.0, min_eigenvalue(cov));
  }
  Eigen::VectorXd dvec = ldlt.vectorD();
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < dvec.size(); ++i) {
    if (dvec[i] < -1e-12 * scale) {
      throw NumericalFailure("covariance is not positive semi-definite", 0.0,
                             min_eigenvalue(cov));
    }
    dvec[i] = std::sqrt(std::max(0.0, dvec[i]));
  }
  const Matrix l = ldlt.matrixL();
  Matrix factor = l * dvec.asDiagonal();
  // cov = P^T L D L^T P
  return ldlt.transpositionsP().transpose() * factor;
}

GroupElement sample(const ExtendedConcentratedGaussian& d, Rng& rng) {
  const LieGroup& g = *d.group;
  const Matrix factor = covariance_factor(d.cov);
  const AlgebraVector xi = d.mean + factor * rng.normal_vector(g.dim());
  if (d.frame == Frame::Body) return g.compose(d.reference, g.exp(xi));
  return g.compose(g.exp(xi), d.reference);
}

}  // namespace lekf
