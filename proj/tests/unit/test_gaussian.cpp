#include <cmath>

#include <gtest/gtest.h>

#include "lekf/gaussian.hpp"
#include "lekf/groups.hpp"
#include "lekf/verify.hpp"

using namespace lekf;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix random_spd(Rng& rng, int k, double scale) {
  const Matrix a = Matrix::NullaryExpr(k, k, [&] { return rng.normal(); });
  return scale * (a * a.transpose() / k + 0.1 * Matrix::Identity(k, k));
}

ExtendedConcentratedGaussian random_body(const GroupPtr& g, Rng& rng, double mean_norm,
                                         double cov_scale) {
  ExtendedConcentratedGaussian d;
  d.group = g;
  d.reference = g->exp(verify::random_algebra(*g, rng, 2.0));
  d.mean = verify::random_algebra(*g, rng, mean_norm);
  d.cov = random_spd(rng, g->dim(), cov_scale);
  d.frame = Frame::Body;
  return d;
}

struct Moments {
  AlgebraVector mean;
  Matrix cov;
};

template <class F>
Moments sample_moments(int n, int k, F&& draw) {
  AlgebraVector sum = AlgebraVector::Zero(k);
  Matrix outer = Matrix::Zero(k, k);
  for (int i = 0; i < n; ++i) {
    const AlgebraVector x = draw();
    sum += x;
    outer += x * x.transpose();
  }
  Moments m;
  m.mean = sum / n;
  m.cov = (outer - n * m.mean * m.mean.transpose()) / (n - 1);
  return m;
}

}  // namespace

TEST(ConvertFrame, IdentityReferenceLeavesParametersAlone) {
  Rng rng(1);
  ExtendedConcentratedGaussian d = random_body(make_se23(), rng, 1.0, 0.1);
  d.reference = GroupElement(Matrix::Identity(5, 5));
  const auto s = convert_frame(d);
  EXPECT_EQ(s.frame, Frame::Spatial);
  EXPECT_LT((s.mean - d.mean).norm(), 1e-15);
  EXPECT_LT(max_abs(s.cov - d.cov), 1e-15);
}

TEST(ConvertFrame, IsAnInvolution) {
  Rng rng(2);
  for (const GroupPtr& g : {GroupPtr(make_so3()), GroupPtr(make_se23()),
                            GroupPtr(make_navigation_group())}) {
    for (int i = 0; i < 50; ++i) {
      const auto d = random_body(g, rng, 1.0, 0.5);
      const auto back = convert_frame(convert_frame(d));
      EXPECT_EQ(back.frame, Frame::Body);
      EXPECT_LT((back.mean - d.mean).norm(), 1e-12);
      EXPECT_LT(max_abs(back.cov - d.cov) / max_abs(d.cov), 1e-12);
      EXPECT_EQ(back.cov, back.cov.transpose());
    }
  }
}

TEST(ConvertFrame, MatchesSpatialSamples) {
  Rng rng(3);
  const auto g = make_se23();
  ExtendedConcentratedGaussian d = random_body(g, rng, 0.0, 1e-4);
  d.mean = AlgebraVector::Zero(9);
  const auto s = convert_frame(d);
  const GroupElement ref_inv = g->inverse(d.reference);
  const int n = 100000;
  const Moments m = sample_moments(n, 9, [&] {
    return AlgebraVector(g->log(g->compose(sample(d, rng), ref_inv)));
  });
  for (int i = 0; i < 9; ++i) {
    const double se_mean = std::sqrt(s.cov(i, i) / n);
    EXPECT_LT(std::abs(m.mean[i] - s.mean[i]), 3 * se_mean) << i;
    const double se_var = s.cov(i, i) * std::sqrt(2.0 / n);
    EXPECT_LT(std::abs(m.cov(i, i) - s.cov(i, i)), 3 * se_var) << i;
  }
}

TEST(ResetBody, ZeroMeanIsUnchanged) {
  Rng rng(4);
  ExtendedConcentratedGaussian d = random_body(make_se23(), rng, 0.0, 1.0);
  d.mean.setZero();
  const auto r = reset_body(d, d.reference);
  EXPECT_LT(r.mean.norm(), 1e-15);
  EXPECT_LT(max_abs(r.cov - d.cov), 1e-15);
}

TEST(ResetBody, AbelianGroupKeepsCovariance) {
  Rng rng(5);
  const auto g = make_vector_group(4);
  const auto d = random_body(g, rng, 3.0, 1.0);
  const auto r = reset_body(d, g->compose(d.reference, g->exp(d.mean)));
  EXPECT_LT(r.mean.norm(), 1e-14);
  EXPECT_LT(max_abs(r.cov - d.cov), 1e-15);
}

TEST(ResetBody, FilterCaseGivesZeroMeanAndJacobianCongruence) {
  Rng rng(6);
  const auto g = make_se23();
  for (int i = 0; i < 100; ++i) {
    const auto d = random_body(g, rng, 1.0, 1.0);
    const auto r = reset_body(d, g->compose(d.reference, g->exp(d.mean)));
    EXPECT_LT(r.mean.norm(), 1e-12);
    const Matrix j = g->jac_right(d.mean);
    EXPECT_LT(max_abs(r.cov - j * d.cov * j.transpose()), 1e-12);
  }
}

TEST(ResetBody, RoundTripRecoversCovariance) {
  Rng rng(7);
  const auto g = make_se23();
  for (int i = 0; i < 100; ++i) {
    const auto d = random_body(g, rng, 1.0, 1.0);
    const GroupElement other = g->compose(d.reference, g->exp(verify::random_algebra(*g, rng, 0.5)));
    const auto back = reset_body(reset_body(d, other), d.reference);
    EXPECT_LT((back.mean - d.mean).norm(), 1e-9);
    EXPECT_LT(max_abs(back.cov - d.cov), 1e-9);
  }
}

TEST(ResetBody, RejectsSpatialInput) {
  Rng rng(8);
  const auto d = convert_frame(random_body(make_so3(), rng, 1.0, 1.0));
  EXPECT_THROW(reset_body(d, d.reference), DimensionMismatch);
  EXPECT_THROW(reset_spatial(convert_frame(d), d.reference), DimensionMismatch);
}

// Samples of the original distribution, re-expressed around the new
// reference, should have the covariance the reset predicts.
TEST(ResetBody, SampledCovarianceMatchesPrediction) {
  Rng rng(9);
  const auto g = make_so3();
  ExtendedConcentratedGaussian d;
  d.group = g;
  d.reference = g->exp(Eigen::Vector3d(0.4, -1.0, 0.3));
  d.mean = Eigen::Vector3d(0.6, 0.5, -0.7);
  d.cov = random_spd(rng, 3, 1e-4);
  const GroupElement new_ref = g->compose(d.reference, g->exp(d.mean));
  const auto r = reset_body(d, new_ref);
  // The reset changes the covariance by much more than the tolerance.
  ASSERT_GT((r.cov - d.cov).norm() / r.cov.norm(), 0.2);

  const GroupElement inv = g->inverse(new_ref);
  const Moments m = sample_moments(100000, 3, [&] {
    return AlgebraVector(g->log(g->compose(inv, sample(d, rng))));
  });
  EXPECT_LT((m.cov - r.cov).norm() / r.cov.norm(), 0.05);
  EXPECT_LT(m.mean.norm(), 3 * std::sqrt(r.cov.trace() / 100000));
}

TEST(ResetSpatial, IdentityOperation) {
  Rng rng(10);
  auto d = convert_frame(random_body(make_se23(), rng, 0.0, 1.0));
  d.mean.setZero();
  const auto r = reset_spatial(d, d.reference);
  EXPECT_LT(r.mean.norm(), 1e-15);
  EXPECT_LT(max_abs(r.cov - d.cov), 1e-15);
}

TEST(ResetSpatial, FilterCaseUsesLeftJacobian) {
  Rng rng(11);
  const auto g = make_se23();
  const auto d = convert_frame(random_body(g, rng, 1.0, 1.0));
  const auto r = reset_spatial(d, g->compose(g->exp(d.mean), d.reference));
  EXPECT_LT(r.mean.norm(), 1e-12);
  const Matrix j = g->jac_left(d.mean);
  EXPECT_LT(max_abs(r.cov - j * d.cov * j.transpose()), 1e-12);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(r.cov).eigenvalues().minCoeff(), 0.0);
}

TEST(ResetSpatial, CommutesWithFrameConversion) {
  Rng rng(12);
  const auto g = make_se23();
  for (int i = 0; i < 100; ++i) {
    const auto body = random_body(g, rng, 1.0, 1.0);
    const GroupElement new_ref = g->compose(body.reference, g->exp(body.mean));
    const auto via_body = convert_frame(reset_body(body, new_ref));
    const auto direct = reset_spatial(convert_frame(body), new_ref);
    EXPECT_LT((via_body.mean - direct.mean).norm(), 1e-10);
    EXPECT_LT(max_abs(via_body.cov - direct.cov) / max_abs(direct.cov), 1e-10);
  }
}

TEST(Sample, ZeroCovarianceIsDeterministic) {
  Rng rng(13);
  const auto g = make_se23();
  auto d = random_body(g, rng, 1.0, 1.0);
  d.cov.setZero();
  const GroupElement expected = g->compose(d.reference, g->exp(d.mean));
  EXPECT_LT(max_abs(sample(d, rng).matrix() - expected.matrix()), 1e-15);
}

TEST(Sample, VectorGroupMoments) {
  Rng rng(14);
  const auto g = make_vector_group(3);
  ExtendedConcentratedGaussian d = random_body(g, rng, 2.0, 1.0);
  d.reference = g->identity();
  const int n = 100000;
  const Moments m = sample_moments(n, 3, [&] { return AlgebraVector(g->log(sample(d, rng))); });
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT(std::abs(m.mean[i] - d.mean[i]), 3 * std::sqrt(d.cov(i, i) / n));
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((d.cov(i, i) * d.cov(j, j) + d.cov(i, j) * d.cov(i, j)) / n);
      EXPECT_LT(std::abs(m.cov(i, j) - d.cov(i, j)), 3 * se) << i << "," << j;
    }
  }
}

TEST(Sample, SameSeedSameDraw) {
  Rng rng(15);
  const auto d = random_body(make_navigation_group(), rng, 1.0, 1.0);
  Rng a(99);
  Rng b(99);
  EXPECT_EQ(sample(d, a).matrix(), sample(d, b).matrix());
}

TEST(Sample, SemiDefiniteCovarianceUsesLdlt) {
  Matrix cov = Matrix::Zero(3, 3);
  cov(0, 0) = 4.0;
  cov(2, 2) = 1.0;
  const Matrix l = covariance_factor(cov);
  EXPECT_LT(max_abs(l * l.transpose() - cov), 1e-15);
  cov(1, 1) = -1.0;
  EXPECT_THROW(covariance_factor(cov), NumericalFailure);
}

TEST(Validate, RejectsBadFields) {
  Rng rng(16);
  auto d = random_body(make_so3(), rng, 1.0, 1.0);
  EXPECT_NO_THROW(d.validate());
  auto bad = d;
  bad.cov(0, 1) += 1e-3;
  EXPECT_THROW(bad.validate(), NumericalFailure);
  bad = d;
  bad.mean = AlgebraVector::Zero(4);
  EXPECT_THROW(bad.validate(), DimensionMismatch);
  bad = d;
  bad.cov = -Matrix::Identity(3, 3);
  EXPECT_THROW(bad.validate(), NumericalFailure);
}
