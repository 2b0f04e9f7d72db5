#pragma once

#include <memory>
#include <vector>

#include "lekf/lie_group.hpp"

namespace lekf {

/// Closed-form SO(3) kernels on fixed-size types.
namespace so3 {

Eigen::Matrix3d skew(const Eigen::Vector3d& w);
Eigen::Vector3d unskew(const Eigen::Matrix3d& m);

/// Rodrigues formula.
Eigen::Matrix3d exp(const Eigen::Vector3d& w);

/// Principal logarithm.  Throws NearCutLocus when the angle is within 1e-6
/// of pi.
Eigen::Vector3d log(const Eigen::Matrix3d& r);

/// Rotation angle in [0, pi], well conditioned everywhere (atan2 of the
/// antisymmetric and symmetric parts).  Never throws.
double angle(const Eigen::Matrix3d& r);

Eigen::Matrix3d jac_right(const Eigen::Vector3d& w);
Eigen::Matrix3d jac_left(const Eigen::Vector3d& w);
/// Throws SeriesDivergence for angles within 1e-3 of 2 pi.
Eigen::Matrix3d jac_right_inv(const Eigen::Vector3d& w);
Eigen::Matrix3d jac_left_inv(const Eigen::Vector3d& w);

/// Nearest rotation in the Frobenius sense.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

}  // namespace so3

/// Rotations, algebra coordinates = rotation vector (rad).
class SO3Group final : public LieGroup {
 public:
  SO3Group();

  Matrix hat(const AlgebraVector& xi) const override;
  AlgebraVector vee(const Matrix& x) const override;
  GroupElement exp(const AlgebraVector& xi) const override;
  AlgebraVector log(const GroupElement& g) const override;
  Matrix Ad(const GroupElement& g) const override;
  Matrix ad(const AlgebraVector& zeta) const override;
  Matrix jac_right(const AlgebraVector& zeta) const override;
  Matrix jac_right_inv(const AlgebraVector& zeta) const override;
  GroupElement inverse(const GroupElement& g) const override;
  GroupElement project(const GroupElement& g) const override;
};

/// Extended poses SE_2(3) as 5x5 matrices
///
///   [ R  v  p ]
///   [ 0  1  0 ]
///   [ 0  0  1 ]
///
/// Algebra coordinates are ordered (rotation, velocity, position).
class SE23Group final : public LieGroup {
 public:
  SE23Group();

  Matrix hat(const AlgebraVector& xi) const override;
  AlgebraVector vee(const Matrix& x) const override;
  GroupElement exp(const AlgebraVector& xi) const override;
  AlgebraVector log(const GroupElement& g) const override;
  Matrix Ad(const GroupElement& g) const override;
  Matrix ad(const AlgebraVector& zeta) const override;
  Matrix jac_right_inv(const AlgebraVector& zeta) const override;
  GroupElement inverse(const GroupElement& g) const override;
  GroupElement project(const GroupElement& g) const override;
};

/// R^d under addition, embedded as (d+1) x (d+1) matrices [I x; 0 1].
class VectorGroup final : public LieGroup {
 public:
  explicit VectorGroup(int d);

  Matrix hat(const AlgebraVector& xi) const override;
  AlgebraVector vee(const Matrix& x) const override;
  GroupElement exp(const AlgebraVector& xi) const override;
  AlgebraVector log(const GroupElement& g) const override;
  Matrix Ad(const GroupElement& g) const override;
  Matrix ad(const AlgebraVector& zeta) const override;
  Matrix jac_right(const AlgebraVector& zeta) const override;
  Matrix jac_right_inv(const AlgebraVector& zeta) const override;
  GroupElement inverse(const GroupElement& g) const override;
};

/// Direct product with block-diagonal embedding and concatenated algebra
/// coordinates.  Every operator is assembled from the components' own
/// (closed-form where available) operators.
class ProductGroup final : public LieGroup {
 public:
  explicit ProductGroup(std::vector<GroupPtr> components);

  const std::vector<GroupPtr>& components() const { return components_; }
  /// Offset of component i in algebra coordinates.
  int algebra_offset(std::size_t i) const { return algebra_offsets_[i]; }
  /// Offset of component i along the diagonal of the embedding.
  int matrix_offset(std::size_t i) const { return matrix_offsets_[i]; }

  /// Extracts component i of a product element.
  GroupElement component(const GroupElement& g, std::size_t i) const;
  GroupElement assemble(const std::vector<GroupElement>& parts) const;

  Matrix hat(const AlgebraVector& xi) const override;
  AlgebraVector vee(const Matrix& x) const override;
  GroupElement exp(const AlgebraVector& xi) const override;
  AlgebraVector log(const GroupElement& g) const override;
  Matrix Ad(const GroupElement& g) const override;
  Matrix ad(const AlgebraVector& zeta) const override;
  Matrix jac_right(const AlgebraVector& zeta) const override;
  Matrix jac_right_inv(const AlgebraVector& zeta) const override;
  GroupElement inverse(const GroupElement& g) const override;
  GroupElement project(const GroupElement& g) const override;

 private:
  std::vector<GroupPtr> components_;
  std::vector<int> algebra_offsets_;
  std::vector<int> matrix_offsets_;
};

std::shared_ptr<const SO3Group> make_so3();
std::shared_ptr<const SE23Group> make_se23();
std::shared_ptr<const VectorGroup> make_vector_group(int d);
std::shared_ptr<const ProductGroup> make_product(std::vector<GroupPtr> components);

/// SE_2(3) x R^3 x R^3: extended pose, accelerometer bias, gyro bias.
std::shared_ptr<const ProductGroup> make_navigation_group();

/// A group defined only by its generators and membership predicate; every
/// operator takes the generic route.  Used to cross-check closed forms.
GroupPtr make_generic_group(std::vector<Matrix> basis, LieGroup::MembershipResidual residual);

/// SO(3) realized through the generic machinery.
GroupPtr make_generic_so3();

}  // namespace lekf
