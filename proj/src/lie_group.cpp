#include "lekf/lie_group.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace lekf {

namespace {

double riemann_zeta_even(int s) {
  if (s == 2) return std::numbers::pi * std::numbers::pi / 6.0;
  // Euler-Maclaurin with three correction terms; exact to double precision
  // for s >= 4 at this cutoff.
  constexpr int kCutoff = 100;
  double sum = 0.0;
  for (int n = kCutoff - 1; n >= 1; --n) sum += std::pow(static_cast<double>(n), -s);
  const double N = kCutoff;
  sum += std::pow(N, 1 - s) / (s - 1) + 0.5 * std::pow(N, -s) + s * std::pow(N, -s - 1) / 12.0;
  return sum;
}

std::vector<double> make_bernoulli_table() {
  std::vector<double> b(kMaxBernoulliTerms + 1, 0.0);
  b[0] = 1.0;
  b[1] = -0.5;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k = 2; k <= kMaxBernoulliTerms; k += 2) {
    const int m = k / 2;
    const double sign = (m % 2 == 1) ? 1.0 : -1.0;
    b[k] = sign * 2.0 * riemann_zeta_even(k) / std::pow(two_pi, k);
  }
  return b;
}

}  // namespace

const std::vector<double>& bernoulli_over_factorial() {
  static const std::vector<double> table = make_bernoulli_table();
  return table;
}

Matrix matrix_power_series(const Matrix& x, const std::function<double(int)>& coefficient,
                           int max_terms) {
  const Eigen::Index n = x.rows();
  Matrix power = Matrix::Identity(n, n);
  Matrix sum = coefficient(0) * power;
  double last_term = 0.0;
  for (int j = 1; j < max_terms; ++j) {
    power = power * x;
    const double c = coefficient(j);
    if (c == 0.0) {
      // Odd Bernoulli terms vanish; do not treat them as convergence.
      continue;
    }
    const Matrix term = c * power;
    sum += term;
    last_term = term.norm();
    if (last_term <= kSeriesTolerance * std::max(1.0, sum.norm())) return sum;
    if (!std::isfinite(last_term)) break;
  }
  if (!(last_term <= 1e-10 * std::max(1.0, sum.norm()))) {
    throw SeriesDivergence("matrix series did not converge (last term norm " +
                           std::to_string(last_term) + ")");
  }
  return sum;
}

Matrix expm_series(const Matrix& x) {
  const double norm = x.norm();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = x / std::ldexp(1.0, squarings);
  Matrix result = matrix_power_series(
      scaled,
      [](int j) {
        return 1.0 / std::tgamma(static_cast<double>(j) + 1.0);
      },
      kMaxSeriesTerms);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

void symmetrize(Matrix& p) { p = (0.5 * (p + p.transpose())).eval(); }

LieGroup::LieGroup(std::vector<Matrix> basis, MembershipResidual residual)
    : dim_(static_cast<int>(basis.size())),
      matrix_size_(basis.empty() ? 0 : static_cast<int>(basis.front().rows())),
      basis_(std::move(basis)),
      residual_(std::move(residual)) {
  if (basis_.empty()) throw DimensionMismatch("Lie group needs at least one generator");
  const Eigen::Index n = matrix_size_;
  Matrix stacked(n * n, dim_);
  for (int i = 0; i < dim_; ++i) {
    if (basis_[i].rows() != n || basis_[i].cols() != n) {
      throw DimensionMismatch("generators must all be n x n");
    }
    stacked.col(i) = basis_[i].reshaped();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  if (qr.rank() != dim_) throw DimensionMismatch("generators are linearly dependent");
  basis_pinv_ = stacked.completeOrthogonalDecomposition().pseudoInverse();
}

void LieGroup::check_algebra(const AlgebraVector& xi) const {
  if (xi.size() != dim_) {
    throw DimensionMismatch("algebra vector has length " + std::to_string(xi.size()) +
                            ", group dimension is " + std::to_string(dim_));
  }
}

void LieGroup::check_element(const GroupElement& g) const {
  if (g.matrix().rows() != matrix_size_ || g.matrix().cols() != matrix_size_) {
    throw DimensionMismatch("group element is " + std::to_string(g.matrix().rows()) + "x" +
                            std::to_string(g.matrix().cols()) + ", expected " +
                            std::to_string(matrix_size_));
  }
}

Matrix LieGroup::hat(const AlgebraVector& xi) const {
  check_algebra(xi);
  Matrix x = Matrix::Zero(matrix_size_, matrix_size_);
  for (int i = 0; i < dim_; ++i) x += xi[i] * basis_[i];
  return x;
}

AlgebraVector LieGroup::vee(const Matrix& x) const {
  if (x.rows() != matrix_size_ || x.cols() != matrix_size_) {
    throw DimensionMismatch("vee expects an n x n matrix");
  }
  return basis_pinv_ * x.reshaped();
}

GroupElement LieGroup::exp(const AlgebraVector& xi) const { return exp_series(xi); }

AlgebraVector LieGroup::log(const GroupElement& g) const { return log_generic(g); }

Matrix LieGroup::Ad(const GroupElement& g) const { return Ad_generic(g); }

Matrix LieGroup::ad(const AlgebraVector& zeta) const { return ad_generic(zeta); }

Matrix LieGroup::jac_right(const AlgebraVector& zeta) const { return jac_right_series(zeta); }

Matrix LieGroup::jac_right_inv(const AlgebraVector& zeta) const {
  return jac_right_inv_series(zeta);
}

GroupElement LieGroup::exp_series(const AlgebraVector& xi) const {
  return GroupElement(expm_series(LieGroup::hat(xi)));
}

AlgebraVector LieGroup::log_generic(const GroupElement& g) const {
  check_element(g);
  if (membership_residual(g.matrix()) > kMembershipTolerance) {
    throw NotOnGroup("log: matrix is not on the group");
  }
  const Matrix l = g.matrix().log();
  return LieGroup::vee(l);
}

Matrix LieGroup::Ad_generic(const GroupElement& g) const {
  check_element(g);
  const Eigen::PartialPivLU<Matrix> lu(g.matrix());
  if (!(std::abs(lu.determinant()) > 0.0)) throw NotOnGroup("Ad: singular matrix");
  const Matrix g_inv = lu.inverse();
  Matrix result(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    result.col(i) = LieGroup::vee(g.matrix() * basis_[i] * g_inv);
  }
  return result;
}

Matrix LieGroup::ad_generic(const AlgebraVector& zeta) const {
  const Matrix z = LieGroup::hat(zeta);
  Matrix result(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    result.col(i) = LieGroup::vee(z * basis_[i] - basis_[i] * z);
  }
  return result;
}

Matrix LieGroup::jac_right_series(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  const Matrix a = ad(zeta);
  return matrix_power_series(
      a,
      [](int j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        return sign / std::tgamma(static_cast<double>(j) + 2.0);
      },
      kMaxSeriesTerms);
}

Matrix LieGroup::jac_right_inv_series(const AlgebraVector& zeta) const {
  check_algebra(zeta);
  const Matrix a = ad(zeta);
  // The Bernoulli series converges only while the spectrum of ad stays
  // inside the disc of radius 2 pi.
  const Eigen::EigenSolver<Matrix> es(a, false);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  if (radius >= 2.0 * std::numbers::pi - 1e-3) {
    throw SeriesDivergence("jac_right_inv: spectral radius of ad is " + std::to_string(radius) +
                           ", outside the Bernoulli series disc");
  }
  const auto& b = bernoulli_over_factorial();
  return matrix_power_series(
      a,
      [&b](int j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        return sign * b[static_cast<std::size_t>(j)];
      },
      kMaxBernoulliTerms);
}

GroupElement LieGroup::identity() const {
  return GroupElement(Matrix::Identity(matrix_size_, matrix_size_));
}

GroupElement LieGroup::compose(const GroupElement& a, const GroupElement& b) const {
  check_element(a);
  check_element(b);
  return GroupElement(a.matrix() * b.matrix());
}

GroupElement LieGroup::inverse(const GroupElement& g) const {
  check_element(g);
  return GroupElement(g.matrix().inverse());
}

double LieGroup::membership_residual(const Matrix& m) const {
  if (m.rows() != matrix_size_ || m.cols() != matrix_size_) {
    throw DimensionMismatch("membership check: wrong matrix size");
  }
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  return residual_ ? residual_(m) : 0.0;
}

bool LieGroup::contains(const GroupElement& g, double tol) const {
  return membership_residual(g.matrix()) <= tol;
}

}  // namespace lekf
