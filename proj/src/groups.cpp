#include "lekf/groups.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace lekf {

namespace so3 {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Eigen::Vector3d unskew(const Eigen::Matrix3d& m) {
  return 0.5 * Eigen::Vector3d(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Eigen::Matrix3d exp(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(w);
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta < 1e-5) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    const double s = std::sin(0.5 * theta);
    b = 2.0 * s * s / theta2;
  }
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

double angle(const Eigen::Matrix3d& r) {
  const double c = 0.5 * (r.trace() - 1.0);
  const Eigen::Vector3d w = 0.5 * Eigen::Vector3d(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                                                  r(1, 0) - r(0, 1));
  return std::atan2(w.norm(), c);
}

Eigen::Vector3d log(const Eigen::Matrix3d& r) {
  const double c = 0.5 * (r.trace() - 1.0);
  // sin(theta) * axis
  const Eigen::Vector3d w = 0.5 * Eigen::Vector3d(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                                                  r(1, 0) - r(0, 1));
  const double s = w.norm();
  const double theta = std::atan2(s, c);
  if (theta > std::numbers::pi - 1e-6) {
    throw NearCutLocus("so3::log: rotation angle " + std::to_string(theta) +
                       " is within 1e-6 of pi");
  }
  if (theta < 1e-6) return (1.0 + theta * theta / 6.0) * w;
  if (theta < std::numbers::pi - 1e-2) return (theta / s) * w;

  // Near pi the antisymmetric part is tiny; read the axis off the symmetric
  // part (1 - cos) a a^T and take the sign from w.
  const Eigen::Matrix3d sym = 0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity();
  Eigen::Index i = 0;
  sym.diagonal().maxCoeff(&i);
  Eigen::Vector3d axis = sym.col(i).normalized();
  if (axis.dot(w) < 0.0) axis = -axis;
  return theta * axis;
}

Eigen::Matrix3d jac_right(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = skew(w);
  double a;  // (1 - cos) / theta^2
  double b;  // (theta - sin) / theta^3
  if (theta < 1e-5) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double s = std::sin(0.5 * theta);
    a = 2.0 * s * s / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() - a * W + b * W * W;
}

Eigen::Matrix3d jac_left(const Eigen::Vector3d& w) { return jac_right(-w); }

Eigen::Matrix3d jac_right_inv(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  if (theta >= 2.0 * std::numbers::pi - 1e-3) {
    throw SeriesDivergence("so3::jac_right_inv: angle " + std::to_string(theta) +
                           " too close to 2 pi");
  }
  const Eigen::Matrix3d W = skew(w);
  double c;  // 1/theta^2 - cot(theta/2) / (2 theta)
  if (theta < 1e-3) {
    c = 1.0 / 12.0 + theta2 / 720.0 + theta2 * theta2 / 30240.0;
  } else {
    c = 1.0 / theta2 - 1.0 / (2.0 * theta * std::tan(0.5 * theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * W + c * W * W;
}

Eigen::Matrix3d jac_left_inv(const Eigen::Vector3d& w) { return jac_right_inv(-w); }

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

}  // namespace so3

namespace {

double rotation_residual(const Eigen::Matrix3d& r) {
  double res = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  if (r.determinant() <= 0.0) res += 1.0;
  return res;
}

std::vector<Matrix> so3_basis() {
  std::vector<Matrix> basis;
  for (int i = 0; i < 3; ++i) basis.emplace_back(so3::skew(Eigen::Vector3d::Unit(i)));
  return basis;
}

std::vector<Matrix> se23_basis() {
  std::vector<Matrix> basis;
  for (int i = 0; i < 3; ++i) {
    Matrix e = Matrix::Zero(5, 5);
    e.topLeftCorner<3, 3>() = so3::skew(Eigen::Vector3d::Unit(i));
    basis.push_back(e);
  }
  for (int col = 3; col < 5; ++col) {
    for (int i = 0; i < 3; ++i) {
      Matrix e = Matrix::Zero(5, 5);
      e(i, col) = 1.0;
      basis.push_back(e);
    }
  }
  return basis;
}

std::vector<Matrix> vector_basis(int d) {
  std::vector<Matrix> basis;
  for (int i = 0; i < d; ++i) {
    Matrix e = Matrix::Zero(d + 1, d + 1);
    e(i, d) = 1.0;
    basis.push_back(e);
  }
  return basis;
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Eigen::Matrix3d rot_block(const GroupElement& g) {
  return g.matrix().topLeftCorner<3, 3>();
}

}  // namespace

// ---------------------------------------------------------------- SO(3)

SO3Group::SO3Group()
    : LieGroup(so3_basis(), [](const Matrix& m) {
        return rotation_residual(m.topLeftCorner<3, 3>());
      }) {}

Matrix SO3Group::hat(const AlgebraVector& xi) const {
  check_algebra(xi);
  return so3::skew(xi.head<3>());
}

AlgebraVector SO3Group::vee(const Matrix& x) const {
  if (x.rows() != 3 || x.cols() != 3) throw DimensionMismatch("SO3 vee expects 3x3");
  return so3::unskew(x);
}

GroupElement SO3Group::exp(const AlgebraVector& xi) const {
  check_algebra(xi);
  return GroupElement(so3::exp(xi.head<3>()));
}

AlgebraVector SO3Group::log(const GroupElement& g) const {
  check_element(g);
  if (!contains(g)) throw NotOnGroup("SO3 log: matrix is not a rotation");
  return so3::log(rot_block(g));
}

Matrix SO3Group::Ad(const GroupElement& g) const {
  check_element(g);
  return g.matrix();
}

Matrix SO3Group::ad(const AlgebraVector& zeta) const { return hat(zeta); }

Matrix SO3Group::jac_right(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  return so3::jac_right(zeta.head<3>());
}

Matrix SO3Group::jac_right_inv(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  return so3::jac_right_inv(zeta.head<3>());
}

GroupElement SO3Group::inverse(const GroupElement& g) const {
  check_element(g);
  return GroupElement(g.matrix().transpose());
}

GroupElement SO3Group::project(const GroupElement& g) const {
  check_element(g);
  return GroupElement(so3::orthonormalize(rot_block(g)));
}

// ---------------------------------------------------------------- SE_2(3)

SE23Group::SE23Group()
    : LieGroup(se23_basis(), [](const Matrix& m) {
        Matrix lower = Matrix::Zero(2, 5);
        lower(0, 3) = 1.0;
        lower(1, 4) = 1.0;
        return rotation_residual(m.topLeftCorner<3, 3>()) + (m.bottomRows(2) - lower).norm();
      }) {}

Matrix SE23Group::hat(const AlgebraVector& xi) const {
  check_algebra(xi);
  Matrix x = Matrix::Zero(5, 5);
  x.topLeftCorner<3, 3>() = so3::skew(xi.segment<3>(0));
  x.block<3, 1>(0, 3) = xi.segment<3>(3);
  x.block<3, 1>(0, 4) = xi.segment<3>(6);
  return x;
}

AlgebraVector SE23Group::vee(const Matrix& x) const {
  if (x.rows() != 5 || x.cols() != 5) throw DimensionMismatch("SE23 vee expects 5x5");
  AlgebraVector xi(9);
  xi.segment<3>(0) = so3::unskew(x.topLeftCorner<3, 3>());
  xi.segment<3>(3) = x.block<3, 1>(0, 3);
  xi.segment<3>(6) = x.block<3, 1>(0, 4);
  return xi;
}

GroupElement SE23Group::exp(const AlgebraVector& xi) const {
  check_algebra(xi);
  const Eigen::Vector3d phi = xi.segment<3>(0);
  const Eigen::Matrix3d jl = so3::jac_left(phi);
  Matrix g = Matrix::Identity(5, 5);
  g.topLeftCorner<3, 3>() = so3::exp(phi);
  g.block<3, 1>(0, 3) = jl * xi.segment<3>(3);
  g.block<3, 1>(0, 4) = jl * xi.segment<3>(6);
  return GroupElement(std::move(g));
}

AlgebraVector SE23Group::log(const GroupElement& g) const {
  check_element(g);
  if (!contains(g)) throw NotOnGroup("SE23 log: matrix is not an extended pose");
  const Eigen::Vector3d phi = so3::log(rot_block(g));
  const Eigen::Matrix3d jl_inv = so3::jac_left_inv(phi);
  AlgebraVector xi(9);
  xi.segment<3>(0) = phi;
  xi.segment<3>(3) = jl_inv * g.matrix().block<3, 1>(0, 3);
  xi.segment<3>(6) = jl_inv * g.matrix().block<3, 1>(0, 4);
  return xi;
}

Matrix SE23Group::Ad(const GroupElement& g) const {
  check_element(g);
  const Eigen::Matrix3d r = rot_block(g);
  const Eigen::Vector3d v = g.matrix().block<3, 1>(0, 3);
  const Eigen::Vector3d p = g.matrix().block<3, 1>(0, 4);
  Matrix a = Matrix::Zero(9, 9);
  a.block<3, 3>(0, 0) = r;
  a.block<3, 3>(3, 0) = so3::skew(v) * r;
  a.block<3, 3>(3, 3) = r;
  a.block<3, 3>(6, 0) = so3::skew(p) * r;
  a.block<3, 3>(6, 6) = r;
  return a;
}

Matrix SE23Group::ad(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  const Eigen::Matrix3d w = so3::skew(zeta.segment<3>(0));
  Matrix a = Matrix::Zero(9, 9);
  a.block<3, 3>(0, 0) = w;
  a.block<3, 3>(3, 0) = so3::skew(zeta.segment<3>(3));
  a.block<3, 3>(3, 3) = w;
  a.block<3, 3>(6, 0) = so3::skew(zeta.segment<3>(6));
  a.block<3, 3>(6, 6) = w;
  return a;
}

Matrix SE23Group::jac_right_inv(const AlgebraVector& zeta) const {
  // The Jacobian is block lower triangular with the SO(3) Jacobian on the
  // diagonal, so its inverse only needs the SO(3) inverse.
  const Matrix j = jac_right(zeta);
  const Eigen::Matrix3d ji = so3::jac_right_inv(zeta.segment<3>(0));
  Matrix out = Matrix::Zero(9, 9);
  for (int b = 0; b < 3; ++b) out.block<3, 3>(3 * b, 3 * b) = ji;
  out.block<3, 3>(3, 0) = -ji * j.block<3, 3>(3, 0) * ji;
  out.block<3, 3>(6, 0) = -ji * j.block<3, 3>(6, 0) * ji;
  return out;
}

GroupElement SE23Group::inverse(const GroupElement& g) const {
  check_element(g);
  const Eigen::Matrix3d rt = rot_block(g).transpose();
  Matrix out = Matrix::Identity(5, 5);
  out.topLeftCorner<3, 3>() = rt;
  out.block<3, 1>(0, 3) = -rt * g.matrix().block<3, 1>(0, 3);
  out.block<3, 1>(0, 4) = -rt * g.matrix().block<3, 1>(0, 4);
  return GroupElement(std::move(out));
}

GroupElement SE23Group::project(const GroupElement& g) const {
  check_element(g);
  Matrix out = Matrix::Identity(5, 5);
  out.topLeftCorner<3, 3>() = so3::orthonormalize(rot_block(g));
  out.block<3, 2>(0, 3) = g.matrix().block<3, 2>(0, 3);
  return GroupElement(std::move(out));
}

// ---------------------------------------------------------------- R^d

VectorGroup::VectorGroup(int d)
    : LieGroup(vector_basis(d), [d](const Matrix& m) {
        Matrix expected = Matrix::Identity(d + 1, d + 1);
        expected.col(d).head(d) = m.col(d).head(d);
        return (m - expected).norm();
      }) {}

Matrix VectorGroup::hat(const AlgebraVector& xi) const {
  check_algebra(xi);
  const int d = dim();
  Matrix x = Matrix::Zero(d + 1, d + 1);
  x.col(d).head(d) = xi;
  return x;
}

AlgebraVector VectorGroup::vee(const Matrix& x) const {
  const int d = dim();
  if (x.rows() != d + 1 || x.cols() != d + 1) throw DimensionMismatch("vector vee: wrong size");
  return x.col(d).head(d);
}

GroupElement VectorGroup::exp(const AlgebraVector& xi) const {
  check_algebra(xi);
  const int d = dim();
  Matrix g = Matrix::Identity(d + 1, d + 1);
  g.col(d).head(d) = xi;
  return GroupElement(std::move(g));
}

AlgebraVector VectorGroup::log(const GroupElement& g) const {
  check_element(g);
  if (!contains(g)) throw NotOnGroup("vector group log: malformed element");
  const int d = dim();
  return g.matrix().col(d).head(d);
}

Matrix VectorGroup::Ad(const GroupElement& g) const {
  check_element(g);
  return Matrix::Identity(dim(), dim());
}

Matrix VectorGroup::ad(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  return Matrix::Zero(dim(), dim());
}

Matrix VectorGroup::jac_right(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  return Matrix::Identity(dim(), dim());
}

Matrix VectorGroup::jac_right_inv(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  return Matrix::Identity(dim(), dim());
}

GroupElement VectorGroup::inverse(const GroupElement& g) const {
  check_element(g);
  const int d = dim();
  Matrix out = g.matrix();
  out.col(d).head(d) = -out.col(d).head(d);
  return GroupElement(std::move(out));
}

// ---------------------------------------------------------------- products

namespace {

std::vector<Matrix> product_basis(const std::vector<GroupPtr>& components) {
  int n = 0;
  for (const auto& c : components) n += c->matrix_size();
  std::vector<Matrix> basis;
  int offset = 0;
  for (const auto& c : components) {
    for (const auto& e : c->basis()) {
      Matrix b = Matrix::Zero(n, n);
      b.block(offset, offset, e.rows(), e.cols()) = e;
      basis.push_back(std::move(b));
    }
    offset += c->matrix_size();
  }
  return basis;
}

}  // namespace

ProductGroup::ProductGroup(std::vector<GroupPtr> components)
    : LieGroup(product_basis(components),
               [components](const Matrix& m) {
                 double res = 0.0;
                 int offset = 0;
                 Matrix off_diagonal = m;
                 for (const auto& c : components) {
                   const int n = c->matrix_size();
                   res += c->membership_residual(m.block(offset, offset, n, n));
                   off_diagonal.block(offset, offset, n, n).setZero();
                   offset += n;
                 }
                 return res + off_diagonal.norm();
               }),
      components_(std::move(components)) {
  int k = 0;
  int n = 0;
  for (const auto& c : components_) {
    algebra_offsets_.push_back(k);
    matrix_offsets_.push_back(n);
    k += c->dim();
    n += c->matrix_size();
  }
}

GroupElement ProductGroup::component(const GroupElement& g, std::size_t i) const {
  check_element(g);
  const int o = matrix_offsets_[i];
  const int n = components_[i]->matrix_size();
  return GroupElement(g.matrix().block(o, o, n, n));
}

GroupElement ProductGroup::assemble(const std::vector<GroupElement>& parts) const {
  if (parts.size() != components_.size()) throw DimensionMismatch("product: wrong part count");
  std::vector<Matrix> blocks;
  blocks.reserve(parts.size());
  for (const auto& p : parts) blocks.push_back(p.matrix());
  GroupElement g(block_diagonal(blocks));
  check_element(g);
  return g;
}

Matrix ProductGroup::hat(const AlgebraVector& xi) const {
  check_algebra(xi);
  std::vector<Matrix> blocks;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    blocks.push_back(components_[i]->hat(xi.segment(algebra_offsets_[i], components_[i]->dim())));
  }
  return block_diagonal(blocks);
}

AlgebraVector ProductGroup::vee(const Matrix& x) const {
  if (x.rows() != matrix_size() || x.cols() != matrix_size()) {
    throw DimensionMismatch("product vee: wrong size");
  }
  AlgebraVector xi(dim());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = matrix_offsets_[i];
    const int n = components_[i]->matrix_size();
    xi.segment(algebra_offsets_[i], components_[i]->dim()) =
        components_[i]->vee(x.block(o, o, n, n));
  }
  return xi;
}

GroupElement ProductGroup::exp(const AlgebraVector& xi) const {
  check_algebra(xi);
  Matrix g = Matrix::Zero(matrix_size(), matrix_size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = matrix_offsets_[i];
    const int n = components_[i]->matrix_size();
    g.block(o, o, n, n) =
        components_[i]->exp(xi.segment(algebra_offsets_[i], components_[i]->dim())).matrix();
  }
  return GroupElement(std::move(g));
}

AlgebraVector ProductGroup::log(const GroupElement& g) const {
  check_element(g);
  if (!contains(g)) throw NotOnGroup("product log: element is not block diagonal on the group");
  AlgebraVector xi(dim());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    xi.segment(algebra_offsets_[i], components_[i]->dim()) = components_[i]->log(component(g, i));
  }
  return xi;
}

Matrix ProductGroup::Ad(const GroupElement& g) const {
  check_element(g);
  Matrix a = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = algebra_offsets_[i];
    const int k = components_[i]->dim();
    a.block(o, o, k, k) = components_[i]->Ad(component(g, i));
  }
  return a;
}

Matrix ProductGroup::ad(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  Matrix a = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = algebra_offsets_[i];
    const int k = components_[i]->dim();
    a.block(o, o, k, k) = components_[i]->ad(zeta.segment(o, k));
  }
  return a;
}

Matrix ProductGroup::jac_right(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  Matrix j = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = algebra_offsets_[i];
    const int k = components_[i]->dim();
    j.block(o, o, k, k) = components_[i]->jac_right(zeta.segment(o, k));
  }
  return j;
}

Matrix ProductGroup::jac_right_inv(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  Matrix j = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = algebra_offsets_[i];
    const int k = components_[i]->dim();
    j.block(o, o, k, k) = components_[i]->jac_right_inv(zeta.segment(o, k));
  }
  return j;
}

GroupElement ProductGroup::inverse(const GroupElement& g) const {
  check_element(g);
  Matrix out = Matrix::Zero(matrix_size(), matrix_size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = matrix_offsets_[i];
    const int n = components_[i]->matrix_size();
    out.block(o, o, n, n) = components_[i]->inverse(component(g, i)).matrix();
  }
  return GroupElement(std::move(out));
}

GroupElement ProductGroup::project(const GroupElement& g) const {
  check_element(g);
  Matrix out = Matrix::Zero(matrix_size(), matrix_size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int o = matrix_offsets_[i];
    const int n = components_[i]->matrix_size();
    out.block(o, o, n, n) = components_[i]->project(component(g, i)).matrix();
  }
  return GroupElement(std::move(out));
}

// ---------------------------------------------------------------- factories

std::shared_ptr<const SO3Group> make_so3() { return std::make_shared<const SO3Group>(); }

std::shared_ptr<const SE23Group> make_se23() { return std::make_shared<const SE23Group>(); }

std::shared_ptr<const VectorGroup> make_vector_group(int d) {
  if (d < 1) throw DimensionMismatch("vector group dimension must be positive");
  return std::make_shared<const VectorGroup>(d);
}

std::shared_ptr<const ProductGroup> make_product(std::vector<GroupPtr> components) {
  if (components.empty()) throw DimensionMismatch("product needs at least one component");
  return std::make_shared<const ProductGroup>(std::move(components));
}

std::shared_ptr<const ProductGroup> make_navigation_group() {
  return make_product({make_se23(), make_vector_group(3), make_vector_group(3)});
}

GroupPtr make_generic_group(std::vector<Matrix> basis, LieGroup::MembershipResidual residual) {
  return std::make_shared<const LieGroup>(std::move(basis), std::move(residual));
}

GroupPtr make_generic_so3() {
  return make_generic_group(so3_basis(), [](const Matrix& m) {
    return rotation_residual(m.topLeftCorner<3, 3>());
  });
}

}  // namespace lekf
