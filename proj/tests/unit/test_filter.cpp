#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "kf_oracle.hpp"
#include "lekf/filter.hpp"
#include "lekf/groups.hpp"
#include "lekf/ins_model.hpp"
#include "lekf/verify.hpp"

using namespace lekf;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double rel_fro(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

GroupElement embed(const Vector& x) {
  Matrix m = Matrix::Identity(x.size() + 1, x.size() + 1);
  m.col(x.size()).head(x.size()) = x;
  return GroupElement(m);
}

Vector coords(const GroupElement& g) {
  const auto d = g.size() - 1;
  return g.matrix().col(d).head(d);
}

kf_oracle::Linear random_linear(Rng& rng, int d, int s, int m) {
  auto rand = [&](int r, int c) { return Matrix(Matrix::NullaryExpr(r, c, [&] { return rng.normal(); })); };
  kf_oracle::Linear lin;
  lin.f = 0.3 * rand(d, d);
  lin.l = rand(d, 2);
  lin.g = rand(d, s);
  lin.h = rand(m, d);
  const Matrix q = rand(s, s);
  lin.q = 0.1 * q * q.transpose() + 0.01 * Matrix::Identity(s, s);
  lin.n = 0.5 * Matrix::Identity(m, m);
  return lin;
}

Matrix spd(Rng& rng, int k, double scale) {
  const Matrix a = Matrix::NullaryExpr(k, k, [&] { return rng.normal(); });
  return scale * (a * a.transpose() / k + 0.2 * Matrix::Identity(k, k));
}

FilterConfig config(Side side, ResetOrder order = ResetOrder::Full) {
  FilterConfig cfg;
  cfg.side = side;
  cfg.reset_order = order;
  return cfg;
}

// A model whose drift and noise input vanish.
class StillModel final : public SystemModel {
 public:
  explicit StillModel(GroupPtr g, int m)
      : SystemModel(g, Matrix::Identity(1, 1), Matrix::Identity(m, m)), m_(m) {}
  AlgebraVector drift(const GroupElement&, const Vector&) const override {
    return AlgebraVector::Zero(group().dim());
  }
  Matrix noise_input(const GroupElement&, const Vector&) const override {
    return Matrix::Zero(group().dim(), 1);
  }
  Vector measurement(const GroupElement&, const Vector&) const override {
    return Vector::Constant(m_, 1.0);
  }
  Matrix measurement_noise_input(const GroupElement&, const Vector&) const override {
    return Matrix::Identity(m_, m_);
  }

 private:
  int m_;
};

}  // namespace

TEST(Derivatives, ConstantFunctionHasZeroDerivative) {
  const auto g = make_se23();
  const GroupElement x = g->exp(AlgebraVector::LinSpaced(9, -1, 1));
  const GroupFunction f = [](const GroupElement&) { return Vector::Constant(2, 3.0); };
  EXPECT_EQ(right_derivative(*g, f, x), Matrix::Zero(2, 9));
  EXPECT_EQ(left_derivative(*g, f, x), Matrix::Zero(2, 9));
}

TEST(Derivatives, PositionExtractionGivesRotation) {
  const auto g = make_se23();
  const GroupElement x = g->exp(AlgebraVector::LinSpaced(9, -1, 1));
  const GroupFunction f = [](const GroupElement& y) -> Vector {
    return y.matrix().block<3, 1>(0, 4);
  };
  const Matrix c = right_derivative(*g, f, x);
  EXPECT_LT(max_abs(c.middleCols<3>(6) - x.matrix().topLeftCorner<3, 3>()), 1e-9);
  EXPECT_LT(max_abs(c.leftCols<6>()), 1e-9);
  EXPECT_LT(max_abs(left_derivative(*g, f, x) - c * g->Ad(g->inverse(x))), 1e-6);
}

TEST(SystemMatrix, LinearModelGivesF) {
  Rng rng(1);
  const auto lin = random_linear(rng, 4, 2, 2);
  const LinearModel m(lin.f, lin.l, lin.g, lin.h, lin.q, lin.n);
  const GroupElement x = embed(rng.normal_vector(4));
  const Vector u = rng.normal_vector(2);
  for (auto mode : {DerivativeMode::Analytic, DerivativeMode::FiniteDifference}) {
    FilterConfig cfg;
    cfg.derivative_mode = mode;
    EXPECT_LT(max_abs(system_matrix_left(m, x, u, cfg) - lin.f), 1e-8);
    EXPECT_LT(max_abs(system_matrix_right(m, x, u, cfg) - lin.f), 1e-8);
    EXPECT_LT(max_abs(measurement_matrix_right(m, x, u, cfg) - lin.h), 1e-8);
  }
}

TEST(SystemMatrix, InputOnlyDriftOnAbelianGroupIsZero) {
  Rng rng(2);
  const auto lin = random_linear(rng, 3, 1, 1);
  const LinearModel m(Matrix::Zero(3, 3), lin.l, lin.g, lin.h, lin.q, lin.n);
  const GroupElement x = embed(rng.normal_vector(3));
  EXPECT_EQ(system_matrix_left(m, x, rng.normal_vector(2), FilterConfig{}), Matrix::Zero(3, 3));
}

TEST(SystemMatrix, LeftMatrixMatchesErrorDynamics) {
  // xi' = A xi for the deterministic error between g exp(xi) and g, both
  // following the drift.  Check one Euler step by differences.
  Rng rng(3);
  const ins::InsModel model;
  const LieGroup& g = model.group();
  const double dt = 1e-6;
  const double h = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const GroupElement x = verify::random_nav_state(rng);
    const Vector u = ins::InsInput{rng.normal3(), 0.3 * rng.normal3()}.pack();
    const Matrix a = system_matrix_left(model, x, u, FilterConfig{});
    const GroupElement x1 = g.compose(x, g.exp(model.drift(x, u) * dt));
    Matrix fd(15, 15);
    for (int j = 0; j < 15; ++j) {
      const AlgebraVector xi = h * AlgebraVector::Unit(15, j);
      auto evolved = [&](const AlgebraVector& e) {
        const GroupElement y = g.compose(x, g.exp(e));
        const GroupElement y1 = g.compose(y, g.exp(model.drift(y, u) * dt));
        return AlgebraVector(g.log(g.compose(g.inverse(x1), y1)));
      };
      fd.col(j) = (evolved(xi) - evolved(-xi)) / (2 * h);
    }
    const Matrix expected = Matrix::Identity(15, 15) + a * dt;
    EXPECT_LT(max_abs(fd - expected), 1e-5);
  }
}

TEST(ResetMatrix, Orders) {
  Rng rng(4);
  const auto g = make_se23();
  const AlgebraVector z = verify::random_algebra(*g, rng, 1.0);
  const Matrix eye = Matrix::Identity(9, 9);
  for (Side s : {Side::Left, Side::Right}) {
    EXPECT_EQ(reset_matrix(*g, z, ResetOrder::Zero, s), eye);
    EXPECT_LT(max_abs(reset_matrix(*g, AlgebraVector::Zero(9), ResetOrder::Full, s) - eye), 1e-15);
  }
  EXPECT_LT(max_abs(reset_matrix(*g, z, ResetOrder::Full, Side::Left) - g->jac_right(z)), 1e-15);
  EXPECT_LT(max_abs(reset_matrix(*g, z, ResetOrder::Full, Side::Right) - g->jac_left(z)), 1e-15);
  EXPECT_LT(max_abs(reset_matrix(*g, z, ResetOrder::First, Side::Left) - (eye - 0.5 * g->ad(z))),
            1e-15);
  EXPECT_LT(max_abs(reset_matrix(*g, z, ResetOrder::First, Side::Right) - (eye + 0.5 * g->ad(z))),
            1e-15);
}

TEST(ResetMatrix, FirstOrderIsTwoTermTruncation) {
  Rng rng(5);
  const auto g = make_se23();
  for (int i = 0; i < 100; ++i) {
    AlgebraVector z = rng.normal_vector(9);
    z *= 1e-3 / z.norm();
    for (Side s : {Side::Left, Side::Right}) {
      const Matrix diff =
          reset_matrix(*g, z, ResetOrder::First, s) - reset_matrix(*g, z, ResetOrder::Full, s);
      EXPECT_LE(max_abs(diff), 1e-6);
    }
  }
}

TEST(Propagate, StillModelChangesNothing) {
  Rng rng(6);
  const auto g = make_se23();
  const StillModel m(g, 2);
  FilterState s{g->exp(rng.normal_vector(9)), spd(rng, 9, 1.0), 0.0};
  for (Side side : {Side::Left, Side::Right}) {
    const FilterState out = propagate(s, m, Vector(), 0.5, config(side));
    EXPECT_EQ(out.estimate.matrix(), s.estimate.matrix());
    EXPECT_LT(max_abs(out.cov - s.cov), 1e-15);
    EXPECT_NEAR(out.time, 0.5, 1e-12);
  }
}

TEST(Propagate, ScalarRiccatiIsLinearInTime) {
  const double q = 0.3;
  const LinearModel m(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Identity(1, 1),
                      Matrix::Identity(1, 1), Matrix::Constant(1, 1, q), Matrix::Identity(1, 1));
  for (auto integrator :
       {CovarianceIntegrator::LieEuler, CovarianceIntegrator::Euler, CovarianceIntegrator::Heun}) {
    for (Side side : {Side::Left, Side::Right}) {
      FilterConfig cfg = config(side);
      cfg.integrator = integrator;
      const FilterState s{embed(Vector::Zero(1)), Matrix::Constant(1, 1, 2.0), 0.0};
      const FilterState out = propagate(s, m, Vector::Zero(1), 1.5, cfg);
      EXPECT_NEAR(out.cov(0, 0), 2.0 + q * 1.5, 1e-12);
    }
  }
}

TEST(Propagate, RejectsDurationOffTheGrid) {
  const StillModel m(make_so3(), 1);
  const FilterState s{make_so3()->identity(), Matrix::Identity(3, 3), 0.0};
  EXPECT_THROW(propagate(s, m, Vector(), 0.0105, FilterConfig{}), std::invalid_argument);
  FilterConfig bad;
  bad.fd_step = 1e-2;
  EXPECT_THROW(propagate(s, m, Vector(), 0.01, bad), std::invalid_argument);
}

TEST(Propagate, ReportsLossOfPositiveDefiniteness) {
  // P' = 2 F P with F = -1/dt drives the Euler step to -P.
  const LinearModel m(-2000.0 * Matrix::Identity(1, 1), Matrix::Zero(1, 1),
                      Matrix::Zero(1, 1), Matrix::Identity(1, 1), Matrix::Zero(1, 1),
                      Matrix::Identity(1, 1));
  FilterConfig cfg;
  cfg.integrator = CovarianceIntegrator::Euler;
  const FilterState s{embed(Vector::Ones(1)), Matrix::Identity(1, 1), 0.0};
  try {
    propagate(s, m, Vector::Zero(1), 0.01, cfg);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_NEAR(e.time(), 0.001, 1e-12);
    EXPECT_LT(e.min_eigenvalue(), 0.0);
  }
}

TEST(Update, UninformativeMeasurementChangesNothing) {
  Rng rng(7);
  const auto lin = random_linear(rng, 3, 1, 2);
  const LinearModel m(lin.f, lin.l, lin.g, Matrix::Zero(2, 3), lin.q, lin.n);
  const FilterState s{embed(rng.normal_vector(3)), spd(rng, 3, 1.0), 0.0};
  for (Side side : {Side::Left, Side::Right}) {
    const UpdateResult r = update(s, m, rng.normal_vector(2), Vector(), config(side));
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(r.gain, Matrix::Zero(3, 2));
    EXPECT_EQ(r.correction, AlgebraVector::Zero(3));
    EXPECT_EQ(r.state.estimate.matrix(), s.estimate.matrix());
    EXPECT_LT(max_abs(r.state.cov - s.cov), 1e-15);
  }
}

TEST(Update, NanMeasurementIsRejected) {
  Rng rng(8);
  const auto lin = random_linear(rng, 3, 1, 2);
  const LinearModel m(lin.f, lin.l, lin.g, lin.h, lin.q, lin.n);
  const FilterState s{embed(rng.normal_vector(3)), spd(rng, 3, 1.0), 0.0};
  Vector y = rng.normal_vector(2);
  y[1] = std::numeric_limits<double>::quiet_NaN();
  const UpdateResult r = update(s, m, y, Vector(), FilterConfig{});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.state.estimate.matrix(), s.estimate.matrix());
  EXPECT_EQ(r.state.cov, s.cov);
}

TEST(Update, SingularInnovationIsReported) {
  Rng rng(9);
  const auto lin = random_linear(rng, 3, 1, 2);
  const LinearModel m(lin.f, lin.l, lin.g, Matrix::Zero(2, 3), lin.q, Matrix::Zero(2, 2));
  const FilterState s{embed(rng.normal_vector(3)), spd(rng, 3, 1.0), 0.0};
  EXPECT_THROW(update(s, m, rng.normal_vector(2), Vector(), FilterConfig{}), SingularInnovation);
}

TEST(Update, MatchesClassicalKalmanUpdate) {
  Rng rng(10);
  const auto lin = random_linear(rng, 5, 2, 3);
  const LinearModel m(lin.f, lin.l, lin.g, lin.h, lin.q, lin.n);
  const kf_oracle::Estimate e{rng.normal_vector(5), spd(rng, 5, 2.0)};
  const Vector y = rng.normal_vector(3);
  const kf_oracle::Estimate expected = kf_oracle::correct(lin, e, y);
  for (Side side : {Side::Left, Side::Right}) {
    const UpdateResult r = update({embed(e.x), e.p, 0.0}, m, y, Vector(), config(side));
    EXPECT_LT((coords(r.state.estimate) - expected.x).norm(), 1e-12);
    EXPECT_LT(max_abs(r.state.cov - expected.p), 1e-12);
  }
}

TEST(LinearSystem, BothSidesTrackOracleOverManySteps) {
  Rng rng(11);
  const auto lin = random_linear(rng, 6, 3, 3);
  const LinearModel m(lin.f, lin.l, lin.g, lin.h, lin.q, lin.n);
  const double dt = 1e-3;
  kf_oracle::Estimate ref{rng.normal_vector(6), spd(rng, 6, 1.0)};
  FilterState left{embed(ref.x), ref.p, 0.0};
  FilterState right = left;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector u = rng.normal_vector(2);
    ref = kf_oracle::predict(lin, ref, u, dt);
    left = propagate(left, m, u, dt, config(Side::Left));
    right = propagate(right, m, u, dt, config(Side::Right));
    if ((k + 1) % 50 == 0) {
      const Vector y = rng.normal_vector(3);
      ref = kf_oracle::correct(lin, ref, y);
      left = update(left, m, y, u, config(Side::Left)).state;
      right = update(right, m, y, u, config(Side::Right)).state;
    }
    for (const FilterState* s : {&left, &right}) {
      worst = std::max(worst, (coords(s->estimate) - ref.x).cwiseAbs().maxCoeff());
      worst = std::max(worst, max_abs(s->cov - ref.p));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

// Left and right filters from matched initial conditions.
class Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(12);
    x0 = verify::random_nav_state(rng);
    ins::InitialCovariance p0;
    p0.attitude = 0.05;
    p0.velocity = 0.5;
    p0.position = 1.0;
    left = {x0, p0.matrix(), 0.0};
    right = left_to_right(left, model.group());
    for (int i = 0; i < 100; ++i) {
      inputs.push_back(ins::InsInput{Eigen::Vector3d(0, 0, 9.81) + rng.normal3(),
                                     0.2 * rng.normal3()}.pack());
    }
  }

  ins::InsModel model;
  GroupElement x0;
  FilterState left;
  FilterState right;
  std::vector<Vector> inputs;
};

TEST_F(Equivalence, PropagationPreservesChangeOfVariables) {
  const LieGroup& g = model.group();
  for (const Vector& u : inputs) {
    left = propagate(left, model, u, 0.01, config(Side::Left));
    right = propagate(right, model, u, 0.01, config(Side::Right));
  }
  EXPECT_NEAR(left.time, 1.0, 1e-9);
  EXPECT_LT(max_abs(left.estimate.matrix() - right.estimate.matrix()), 1e-9);
  const Matrix ad = g.Ad(left.estimate);
  EXPECT_LT(rel_fro(ad * left.cov * ad.transpose(), right.cov), 1e-8);
}

TEST_F(Equivalence, UpdatePreservesChangeOfVariablesAndGainRelation) {
  const LieGroup& g = model.group();
  const Vector y = x0.matrix().block<3, 1>(0, 4) + Eigen::Vector3d(1.0, -2.0, 0.5);
  const UpdateResult l = update(left, model, y, inputs[0], config(Side::Left));
  const UpdateResult r = update(right, model, y, inputs[0], config(Side::Right));
  EXPECT_LT(max_abs(g.Ad(x0) * l.gain - r.gain), 1e-9);
  EXPECT_LT(max_abs(l.state.estimate.matrix() - r.state.estimate.matrix()), 1e-9);
  const Matrix ad = g.Ad(l.state.estimate);
  EXPECT_LT(rel_fro(ad * l.state.cov * ad.transpose(), r.state.cov), 1e-9);
}

TEST_F(Equivalence, ReducedOrderResetsBreakIt) {
  // A correction touching only position makes ad nilpotent, and the
  // first-order resets then agree exactly; correlate P to avoid that.
  const LieGroup& g = model.group();
  Rng rng(20);
  left.cov = spd(rng, 15, 0.1);
  right = left_to_right(left, g);
  const Vector y = x0.matrix().block<3, 1>(0, 4) + Eigen::Vector3d(1.0, -2.0, 0.5);
  for (ResetOrder order : {ResetOrder::Zero, ResetOrder::First}) {
    const UpdateResult l = update(left, model, y, inputs[0], config(Side::Left, order));
    const UpdateResult r = update(right, model, y, inputs[0], config(Side::Right, order));
    const Matrix ad = g.Ad(l.state.estimate);
    EXPECT_GT(rel_fro(ad * l.state.cov * ad.transpose(), r.state.cov), 1e-6);
  }
}

TEST_F(Equivalence, PlainEulerAgreesOnlyToFirstOrder) {
  const LieGroup& g = model.group();
  FilterConfig lc = config(Side::Left);
  FilterConfig rc = config(Side::Right);
  lc.integrator = rc.integrator = CovarianceIntegrator::Euler;
  for (const Vector& u : inputs) {
    left = propagate(left, model, u, 0.01, lc);
    right = propagate(right, model, u, 0.01, rc);
  }
  const Matrix ad = g.Ad(left.estimate);
  const double err = rel_fro(ad * left.cov * ad.transpose(), right.cov);
  EXPECT_GT(err, 1e-12);
  EXPECT_LT(err, 1e-2);
}

TEST(ChangeOfVariables, RoundTrip) {
  Rng rng(13);
  const auto g = make_navigation_group();
  const FilterState s{verify::random_nav_state(rng), spd(rng, 15, 1.0), 0.0};
  const FilterState back = right_to_left(left_to_right(s, *g), *g);
  EXPECT_LT(rel_fro(back.cov, s.cov), 1e-12);
}
