// Generic matrix Lie group machinery, checked on groups built only from
// their generators.

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "lekf/groups.hpp"
#include "lekf/lie_group.hpp"
#include "lekf/rng.hpp"

using namespace lekf;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix unit(int n, int r, int c) {
  Matrix m = Matrix::Zero(n, n);
  m(r, c) = 1.0;
  return m;
}

// SE_2(3) from its nine generators, no closed forms.
GroupPtr generic_se23() {
  std::vector<Matrix> basis;
  for (int i = 0; i < 3; ++i) {
    Matrix e = Matrix::Zero(5, 5);
    e.topLeftCorner<3, 3>() = so3::skew(Eigen::Vector3d::Unit(i));
    basis.push_back(e);
  }
  for (int col : {3, 4})
    for (int i = 0; i < 3; ++i) basis.push_back(unit(5, i, col));
  return make_generic_group(basis, [](const Matrix& m) {
    const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
    return (r.transpose() * r - Eigen::Matrix3d::Identity()).norm() +
           std::abs(r.determinant() - 1.0) +
           (m.bottomRows<2>() - Matrix::Identity(5, 5).bottomRows<2>()).norm();
  });
}

AlgebraVector random_vec(Rng& rng, int k, double max_norm) {
  AlgebraVector z = rng.normal_vector(k);
  const double r = max_norm * std::uniform_real_distribution<double>(0, 1)(rng.engine());
  return z.normalized() * r;
}

// Midpoint rule for the integral of Ad(exp(-s z)) over [0, 1].
Matrix jac_right_quadrature(const LieGroup& g, const AlgebraVector& z, int points) {
  Matrix sum = Matrix::Zero(g.dim(), g.dim());
  const Matrix ad = g.ad(z);
  for (int i = 0; i < points; ++i) {
    const double s = (i + 0.5) / points;
    sum += (-s * ad).exp();
  }
  return sum / points;
}

}  // namespace

TEST(Bernoulli, TableMatchesKnownValues) {
  const auto& b = bernoulli_over_factorial();
  ASSERT_GE(b.size(), 81u);
  EXPECT_DOUBLE_EQ(b[0], 1.0);
  EXPECT_DOUBLE_EQ(b[1], -0.5);
  const auto near = [](double x, double ref) { return std::abs(x - ref) <= 1e-14 * std::abs(ref); };
  EXPECT_TRUE(near(b[2], 1.0 / 12.0));
  EXPECT_EQ(b[3], 0.0);
  EXPECT_TRUE(near(b[4], -1.0 / 720.0));
  EXPECT_TRUE(near(b[6], 1.0 / 30240.0));
  EXPECT_TRUE(near(b[8], -1.0 / 1209600.0));
  for (std::size_t k = 3; k < b.size(); k += 2) EXPECT_EQ(b[k], 0.0);
}

TEST(Series, ExponentialOfScalar) {
  Matrix x(1, 1);
  x << 1.0;
  const Matrix e = matrix_power_series(
      x, [](int j) { return 1.0 / std::tgamma(j + 1.0); }, kMaxSeriesTerms);
  EXPECT_NEAR(e(0, 0), std::exp(1.0), 1e-15);
}

TEST(Series, DivergentSeriesThrows) {
  Matrix x(1, 1);
  x << 2.0;
  EXPECT_THROW(matrix_power_series(x, [](int) { return 1.0; }, kMaxSeriesTerms),
               SeriesDivergence);
}

TEST(Series, ExpmMatchesPade) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Matrix x = 2.0 * Matrix::Random(6, 6);
    const Matrix ref = x.exp();
    EXPECT_LT((expm_series(x) - ref).norm() / ref.norm(), 1e-12);
  }
}

TEST(LieGroupConstruction, RejectsDependentGenerators) {
  std::vector<Matrix> basis = {unit(2, 0, 1), 2.0 * unit(2, 0, 1)};
  EXPECT_THROW(make_generic_group(basis, nullptr), DimensionMismatch);
}

TEST(LieGroupConstruction, RejectsMixedSizes) {
  std::vector<Matrix> basis = {unit(2, 0, 1), unit(3, 0, 1)};
  EXPECT_THROW(make_generic_group(basis, nullptr), DimensionMismatch);
}

TEST(Hat, ZeroAndUnitOnSO3) {
  const auto g = make_generic_so3();
  EXPECT_TRUE(g->hat(AlgebraVector::Zero(3)).isZero(0.0));
  const Matrix h = g->hat(Eigen::Vector3d(1, 0, 0));
  Matrix expected = Matrix::Zero(3, 3);
  expected(1, 2) = -1.0;
  expected(2, 1) = 1.0;
  EXPECT_EQ(h, expected);
}

TEST(Hat, WrongLengthThrows) {
  const auto g = make_generic_so3();
  EXPECT_THROW(g->hat(AlgebraVector::Zero(4)), DimensionMismatch);
}

TEST(Hat, VeeRoundTrips) {
  Rng rng(5);
  const auto g = generic_se23();
  for (int i = 0; i < 100; ++i) {
    const AlgebraVector x = rng.normal_vector(9);
    EXPECT_LT((g->vee(g->hat(x)) - x).cwiseAbs().maxCoeff(), 1e-15);
    const Matrix m = g->hat(x);
    EXPECT_LT((g->hat(g->vee(m)) - m).norm(), 1e-14);
  }
}

TEST(Exp, IdentityAtZero) {
  const auto g = generic_se23();
  EXPECT_LT((g->exp(AlgebraVector::Zero(9)).matrix() - Matrix::Identity(5, 5)).norm(), 1e-15);
}

TEST(Exp, QuarterTurnAboutFirstAxis) {
  const auto g = make_generic_so3();
  const Matrix r = g->exp(Eigen::Vector3d(kPi / 2, 0, 0)).matrix();
  Matrix expected(3, 3);
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_LT((r - expected).norm(), 1e-12);
}

TEST(Exp, AgreesWithPlainTaylorSeries) {
  Rng rng(7);
  const auto g = generic_se23();
  for (int i = 0; i < 50; ++i) {
    const AlgebraVector x = random_vec(rng, 9, 1.0);
    Matrix term = Matrix::Identity(5, 5);
    Matrix sum = term;
    for (int j = 1; j <= 30; ++j) {
      term = term * g->hat(x) / j;
      sum += term;
    }
    EXPECT_LT((g->exp(x).matrix() - sum).norm(), 1e-12);
  }
}

TEST(Exp, InverseOfExponential) {
  Rng rng(8);
  const auto g = generic_se23();
  for (int i = 0; i < 50; ++i) {
    const AlgebraVector x = random_vec(rng, 9, 3.0);
    const Matrix p = g->compose(g->exp(x), g->exp(-x)).matrix();
    EXPECT_LT((p - Matrix::Identity(5, 5)).norm(), 1e-12);
  }
}

TEST(Log, IdentityGivesZero) {
  const auto g = make_generic_so3();
  EXPECT_LT(g->log(g->identity()).norm(), 1e-15);
}

TEST(Log, RoundTripOnSO3) {
  const auto g = make_generic_so3();
  const Eigen::Vector3d x(0.3, -0.2, 0.1);
  EXPECT_LT((g->log(g->exp(x)) - x).norm(), 1e-12);
}

TEST(Log, RoundTripWithinInjectivityRadius) {
  Rng rng(9);
  const auto g = generic_se23();
  for (int i = 0; i < 100; ++i) {
    const AlgebraVector x = random_vec(rng, 9, 2.5);
    EXPECT_LT((g->log(g->exp(x)) - x).norm(), 1e-10);
  }
}

TEST(Log, RejectsNonMembers) {
  const auto g = make_generic_so3();
  EXPECT_THROW(g->log(GroupElement(2.0 * Matrix::Identity(3, 3))), NotOnGroup);
}

TEST(Adjoint, IdentityElement) {
  const auto g = generic_se23();
  EXPECT_LT((g->Ad(g->identity()) - Matrix::Identity(9, 9)).norm(), 1e-15);
}

TEST(Adjoint, RotationIsItsOwnAdjoint) {
  Rng rng(10);
  const auto g = make_generic_so3();
  for (int i = 0; i < 20; ++i) {
    const GroupElement r = g->exp(random_vec(rng, 3, 3.0));
    EXPECT_LT((g->Ad(r) - r.matrix()).norm(), 1e-13);
  }
}

TEST(Adjoint, ExpOfSmallAdjoint) {
  Rng rng(11);
  const auto g = generic_se23();
  for (int i = 0; i < 50; ++i) {
    const AlgebraVector z = random_vec(rng, 9, 2.0);
    EXPECT_LT((g->Ad(g->exp(z)) - g->ad(z).exp()).norm(), 1e-11);
  }
}

TEST(Adjoint, Homomorphism) {
  Rng rng(12);
  const auto g = generic_se23();
  for (int i = 0; i < 50; ++i) {
    const GroupElement a = g->exp(random_vec(rng, 9, 2.0));
    const GroupElement b = g->exp(random_vec(rng, 9, 2.0));
    EXPECT_LT((g->Ad(g->compose(a, b)) - g->Ad(a) * g->Ad(b)).norm(), 1e-11);
  }
}

TEST(SmallAdjoint, SelfCommutatorVanishes) {
  Rng rng(13);
  const auto g = generic_se23();
  for (int i = 0; i < 50; ++i) {
    const AlgebraVector z = rng.normal_vector(9);
    EXPECT_LT((g->ad(z) * z).norm(), 1e-14);
  }
}

TEST(SmallAdjoint, EqualsSkewOnSO3) {
  const auto g = make_generic_so3();
  const Eigen::Vector3d z(0.4, -1.2, 0.7);
  EXPECT_LT((g->ad(z) - Matrix(so3::skew(z))).norm(), 1e-15);
}

TEST(SmallAdjoint, DerivativeOfAdjointAlongOneParameterSubgroup) {
  Rng rng(14);
  const auto g = generic_se23();
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const AlgebraVector z = rng.normal_vector(9);
    const Matrix fd = (g->Ad(g->exp(h * z)) - g->Ad(g->exp(-h * z))) / (2 * h);
    EXPECT_LT((fd - g->ad(z)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(RightJacobian, IdentityAtZero) {
  const auto g = generic_se23();
  EXPECT_LT((g->jac_right(AlgebraVector::Zero(9)) - Matrix::Identity(9, 9)).norm(), 1e-15);
}

TEST(RightJacobian, FirstOrderForSmallArgument) {
  Rng rng(15);
  const auto g = generic_se23();
  const AlgebraVector z = 1e-4 * rng.normal_vector(9).normalized();
  const Matrix approx = Matrix::Identity(9, 9) - 0.5 * g->ad(z);
  EXPECT_LT((g->jac_right(z) - approx).norm(), 1e-8);
}

TEST(RightJacobian, MatchesIntegralOfAdjoint) {
  Rng rng(16);
  const auto g = generic_se23();
  for (int i = 0; i < 5; ++i) {
    const AlgebraVector z = random_vec(rng, 9, 2.0);
    EXPECT_LT((g->jac_right(z) - jac_right_quadrature(*g, z, 10000)).norm(), 1e-8);
  }
}

TEST(RightJacobian, IsTheRightDerivativeOfExp) {
  Rng rng(17);
  const auto g = generic_se23();
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    const AlgebraVector z = random_vec(rng, 9, 2.0);
    const GroupElement ez_inv = g->inverse(g->exp(z));
    Matrix fd(9, 9);
    for (int j = 0; j < 9; ++j) {
      const AlgebraVector e = h * AlgebraVector::Unit(9, j);
      fd.col(j) = (g->log(g->compose(ez_inv, g->exp(z + e))) -
                   g->log(g->compose(ez_inv, g->exp(z - e)))) /
                  (2 * h);
    }
    EXPECT_LT((fd - g->jac_right(z)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(RightJacobian, LeftJacobianIsRightJacobianOfNegative) {
  Rng rng(18);
  const auto g = generic_se23();
  const AlgebraVector z = rng.normal_vector(9);
  EXPECT_EQ(g->jac_left(z), g->jac_right(-z));
}

TEST(Proposition1, AdjointOfExpTimesJacobian) {
  Rng rng(19);
  for (const GroupPtr& g : {make_generic_so3(), generic_se23()}) {
    for (int i = 0; i < 1000; ++i) {
      const AlgebraVector z = random_vec(rng, g->dim(), 2.0);
      const Matrix lhs = g->Ad(g->exp(z)) * g->jac_right(z);
      EXPECT_LT((lhs - g->jac_right(-z)).norm(), 1e-11);
    }
  }
}

TEST(Proposition1, AdjointConjugatesJacobian) {
  Rng rng(20);
  const auto g = generic_se23();
  for (int i = 0; i < 200; ++i) {
    const GroupElement x = g->exp(random_vec(rng, 9, 2.0));
    const AlgebraVector z = random_vec(rng, 9, 1.0);
    const Matrix ad = g->Ad(x);
    EXPECT_LT((ad * g->jac_right(z) - g->jac_right(ad * z) * ad).norm(), 1e-10);
  }
}

TEST(InverseJacobian, IdentityAtZero) {
  const auto g = generic_se23();
  EXPECT_LT((g->jac_right_inv(AlgebraVector::Zero(9)) - Matrix::Identity(9, 9)).norm(), 1e-15);
}

TEST(InverseJacobian, InvertsJacobian) {
  Rng rng(21);
  const auto g = generic_se23();
  for (int i = 0; i < 200; ++i) {
    const AlgebraVector z = random_vec(rng, 9, 1.0);
    const Matrix jr = g->jac_right(z);
    EXPECT_LT((g->jac_right_inv(z) * jr - Matrix::Identity(9, 9)).norm(), 1e-10);
    EXPECT_LT((g->jac_right_inv(z) - jr.inverse()).norm(), 1e-10);
  }
}

TEST(InverseJacobian, FirstOrderForSmallArgument) {
  const auto g = generic_se23();
  AlgebraVector z(9);
  z << 1, -2, 0.5, 1, 0, 3, -1, 2, 1;
  z *= 1e-4 / z.norm();
  const Matrix approx = Matrix::Identity(9, 9) + 0.5 * g->ad(z);
  EXPECT_LT((g->jac_right_inv(z) - approx).norm(), 1e-8);
}

TEST(InverseJacobian, DivergesOutsideTheBernoulliDisc) {
  const auto g = make_generic_so3();
  EXPECT_THROW(g->jac_right_inv(Eigen::Vector3d(2 * kPi, 0, 0)), SeriesDivergence);
  EXPECT_THROW(g->jac_right_inv(Eigen::Vector3d(0, 7.0, 0)), SeriesDivergence);
  // Inside the disc but too close to its edge for the term budget.
  EXPECT_THROW(g->jac_right_inv(Eigen::Vector3d(0, 0, 2 * kPi - 0.01)), SeriesDivergence);
  const Eigen::Vector3d w(0, 0, 4.5);
  EXPECT_LT((g->jac_right_inv(w) * g->jac_right(w) - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(Compose, IdentityAndInverse) {
  Rng rng(22);
  const auto g = generic_se23();
  const GroupElement x = g->exp(rng.normal_vector(9));
  EXPECT_EQ(g->compose(x, g->identity()).matrix(), x.matrix());
  EXPECT_EQ(g->inverse(g->identity()).matrix(), Matrix::Identity(5, 5));
  EXPECT_LT((g->compose(x, g->inverse(x)).matrix() - Matrix::Identity(5, 5)).norm(), 1e-12);
}

TEST(Compose, SizeMismatchThrows) {
  const auto a = make_generic_so3();
  const auto b = generic_se23();
  EXPECT_THROW(a->compose(a->identity(), b->identity()), DimensionMismatch);
}

TEST(Membership, NonFiniteIsNeverOnTheGroup) {
  const auto g = make_generic_so3();
  Matrix m = Matrix::Identity(3, 3);
  m(0, 0) = std::nan("");
  EXPECT_FALSE(g->contains(GroupElement(m)));
  EXPECT_TRUE(g->contains(g->identity()));
}
