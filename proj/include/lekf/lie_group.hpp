#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "lekf/errors.hpp"

namespace lekf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Coordinates of a Lie algebra element with respect to the group's basis.
using AlgebraVector = Eigen::VectorXd;

/// A point on a matrix Lie group, stored as its n x n embedding.
class GroupElement {
 public:
  GroupElement() = default;
  explicit GroupElement(Matrix m) : matrix_(std::move(m)) {}

  const Matrix& matrix() const { return matrix_; }
  Matrix& matrix() { return matrix_; }
  Eigen::Index size() const { return matrix_.rows(); }

 private:
  Matrix matrix_;
};

/// Tolerance used for group membership checks (Frobenius norm).
inline constexpr double kMembershipTolerance = 1e-9;

/// Series truncation: stop once a term drops below this, relative to
/// max(1, |partial sum|).
inline constexpr double kSeriesTolerance = 1e-15;
inline constexpr int kMaxSeriesTerms = 40;
/// The Bernoulli series only has even terms past k = 1, so it gets twice the
/// budget of the exponential-type series.
inline constexpr int kMaxBernoulliTerms = 80;

/// B_k / k! for k = 0 .. kMaxBernoulliTerms, with B_1 = -1/2.
const std::vector<double>& bernoulli_over_factorial();

/// A realized matrix Lie group of algebra dimension k embedded in n x n
/// matrices.
///
/// Every operator has a generic implementation driven by the basis
/// generators (series for exp and the Jacobians, column-wise evaluation for
/// Ad and ad).  Concrete groups override the virtual entry points with closed
/// forms; the `*_series` members always take the generic route so the two can
/// be compared.
///
/// Instances are immutable after construction and safe to share between
/// threads.
class LieGroup {
 public:
  /// Residual of the membership predicate; zero on the group.
  using MembershipResidual = std::function<double(const Matrix&)>;

  LieGroup(std::vector<Matrix> basis, MembershipResidual residual);
  virtual ~LieGroup() = default;

  LieGroup(const LieGroup&) = delete;
  LieGroup& operator=(const LieGroup&) = delete;

  int dim() const { return dim_; }
  int matrix_size() const { return matrix_size_; }
  const std::vector<Matrix>& basis() const { return basis_; }

  virtual Matrix hat(const AlgebraVector& xi) const;
  virtual AlgebraVector vee(const Matrix& x) const;

  virtual GroupElement exp(const AlgebraVector& xi) const;
  virtual AlgebraVector log(const GroupElement& g) const;

  virtual Matrix Ad(const GroupElement& g) const;
  virtual Matrix ad(const AlgebraVector& zeta) const;

  virtual Matrix jac_right(const AlgebraVector& zeta) const;
  virtual Matrix jac_right_inv(const AlgebraVector& zeta) const;

  /// Left Jacobian; identical to jac_right(-zeta) by definition.
  Matrix jac_left(const AlgebraVector& zeta) const { return jac_right(-zeta); }
  Matrix jac_left_inv(const AlgebraVector& zeta) const { return jac_right_inv(-zeta); }

  GroupElement identity() const;
  GroupElement compose(const GroupElement& a, const GroupElement& b) const;
  virtual GroupElement inverse(const GroupElement& g) const;

  /// Membership predicate residual (Frobenius norm based).
  double membership_residual(const Matrix& m) const;
  bool contains(const GroupElement& g, double tol = kMembershipTolerance) const;

  /// Projects g back onto the group (e.g. re-orthonormalizes rotation
  /// blocks).  The default does nothing.
  virtual GroupElement project(const GroupElement& g) const { return g; }

  // Generic routes.
  GroupElement exp_series(const AlgebraVector& xi) const;
  AlgebraVector log_generic(const GroupElement& g) const;
  Matrix Ad_generic(const GroupElement& g) const;
  Matrix ad_generic(const AlgebraVector& zeta) const;
  Matrix jac_right_series(const AlgebraVector& zeta) const;
  Matrix jac_right_inv_series(const AlgebraVector& zeta) const;

 protected:
  void check_algebra(const AlgebraVector& xi) const;
  void check_element(const GroupElement& g) const;

 private:
  int dim_;
  int matrix_size_;
  std::vector<Matrix> basis_;
  Matrix basis_pinv_;  // k x n^2, maps vec(X) to coordinates
  MembershipResidual residual_;
};

using GroupPtr = std::shared_ptr<const LieGroup>;

/// sum_{j >= 0} c_j X^j for a square matrix X with the given coefficient
/// sequence, truncated once a term drops below kSeriesTolerance (relative) or
/// after max_terms terms.  Throws SeriesDivergence if the last term is still
/// above 1e-10 relative when the budget runs out.
Matrix matrix_power_series(const Matrix& x, const std::function<double(int)>& coefficient,
                           int max_terms);

/// Scaled-and-squared Taylor evaluation of the matrix exponential.
Matrix expm_series(const Matrix& x);

/// Symmetrizes in place: P <- (P + P^T) / 2.
void symmetrize(Matrix& p);

}  // namespace lekf
