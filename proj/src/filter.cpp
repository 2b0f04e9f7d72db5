#include "lekf/filter.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lekf/groups.hpp"

namespace lekf {

SystemModel::SystemModel(GroupPtr group, Matrix process_noise, Matrix measurement_noise)
    : group_(std::move(group)),
      process_noise_(std::move(process_noise)),
      measurement_noise_(std::move(measurement_noise)) {
  if (!group_) throw DimensionMismatch("system model needs a group");
  if (process_noise_.rows() != process_noise_.cols() ||
      measurement_noise_.rows() != measurement_noise_.cols()) {
    throw DimensionMismatch("noise covariances must be square");
  }
}

AlgebraVector SystemModel::spatial_drift(const GroupElement& g, const Vector& u) const {
  return group_->Ad(g) * drift(g, u);
}

Matrix SystemModel::spatial_noise_input(const GroupElement& g, const Vector& u) const {
  return group_->Ad(g) * noise_input(g, u);
}

void FilterConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("filter dt must be positive");
  if (!(fd_step >= 1e-8 && fd_step <= 1e-4)) {
    throw std::invalid_argument("fd_step must lie in [1e-8, 1e-4]");
  }
}

Matrix right_derivative(const LieGroup& group, const GroupFunction& f, const GroupElement& g,
                        double h) {
  const int k = group.dim();
  Matrix d;
  for (int i = 0; i < k; ++i) {
    const AlgebraVector e = h * AlgebraVector::Unit(k, i);
    const Vector plus = f(group.compose(g, group.exp(e)));
    const Vector minus = f(group.compose(g, group.exp(-e)));
    if (i == 0) d.resize(plus.size(), k);
    d.col(i) = (plus - minus) / (2.0 * h);
  }
  return d;
}

Matrix left_derivative(const LieGroup& group, const GroupFunction& f, const GroupElement& g,
                       double h) {
  const int k = group.dim();
  Matrix d;
  for (int i = 0; i < k; ++i) {
    const AlgebraVector e = h * AlgebraVector::Unit(k, i);
    const Vector plus = f(group.compose(group.exp(e), g));
    const Vector minus = f(group.compose(group.exp(-e), g));
    if (i == 0) d.resize(plus.size(), k);
    d.col(i) = (plus - minus) / (2.0 * h);
  }
  return d;
}

Matrix drift_jacobian(const SystemModel& m, const GroupElement& g, const Vector& u,
                      const FilterConfig& cfg) {
  if (cfg.derivative_mode == DerivativeMode::Analytic) {
    if (auto d = m.drift_jacobian(g, u)) return *std::move(d);
  }
  return right_derivative(
      m.group(), [&](const GroupElement& x) { return m.drift(x, u); }, g, cfg.fd_step);
}

Matrix spatial_drift_jacobian(const SystemModel& m, const GroupElement& g, const Vector& u,
                              const FilterConfig& cfg) {
  const LieGroup& group = m.group();
  if (cfg.derivative_mode == DerivativeMode::Analytic) {
    if (auto d = m.drift_jacobian(g, u)) {
      // Product rule on Ad_{exp(xi) g} a(exp(xi) g), with the left/right
      // derivative relation d_bar f = d f Ad_g^-1.
      const Matrix ad_g = group.Ad(g);
      const Matrix ad_g_inv = group.Ad(group.inverse(g));
      return ad_g * (*d - group.ad(m.drift(g, u))) * ad_g_inv;
    }
  }
  return left_derivative(
      group, [&](const GroupElement& x) { return m.spatial_drift(x, u); }, g, cfg.fd_step);
}

Matrix system_matrix_left(const SystemModel& m, const GroupElement& g, const Vector& u,
                          const FilterConfig& cfg) {
  return drift_jacobian(m, g, u, cfg) - m.group().ad(m.drift(g, u));
}

Matrix system_matrix_right(const SystemModel& m, const GroupElement& g, const Vector& u,
                           const FilterConfig& cfg) {
  return spatial_drift_jacobian(m, g, u, cfg) + m.group().ad(m.spatial_drift(g, u));
}

Matrix measurement_matrix_left(const SystemModel& m, const GroupElement& g, const Vector& u,
                               const FilterConfig& cfg) {
  if (cfg.derivative_mode == DerivativeMode::Analytic) {
    if (auto c = m.measurement_jacobian(g, u)) return *std::move(c);
  }
  return right_derivative(
      m.group(), [&](const GroupElement& x) { return m.measurement(x, u); }, g, cfg.fd_step);
}

Matrix measurement_matrix_right(const SystemModel& m, const GroupElement& g, const Vector& u,
                                const FilterConfig& cfg) {
  const LieGroup& group = m.group();
  if (cfg.derivative_mode == DerivativeMode::Analytic) {
    if (auto c = m.measurement_jacobian(g, u)) return *c * group.Ad(group.inverse(g));
  }
  return left_derivative(
      group, [&](const GroupElement& x) { return m.measurement(x, u); }, g, cfg.fd_step);
}

Matrix reset_matrix(const LieGroup& group, const AlgebraVector& zeta, ResetOrder order,
                    Side side) {
  const int k = group.dim();
  switch (order) {
    case ResetOrder::Zero:
      return Matrix::Identity(k, k);
    case ResetOrder::First: {
      const double sign = side == Side::Left ? -0.5 : 0.5;
      return Matrix::Identity(k, k) + sign * group.ad(zeta);
    }
    case ResetOrder::Full:
      return side == Side::Left ? group.jac_right(zeta) : group.jac_left(zeta);
  }
  throw std::logic_error("unknown reset order");
}

void check_positive_definite(const Matrix& cov, double time) {
  if (!cov.allFinite()) {
    throw NumericalFailure("covariance became non-finite at t=" + std::to_string(time), time,
                           std::numeric_limits<double>::quiet_NaN());
  }
  const Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    const double lambda = es.eigenvalues().minCoeff();
    throw NumericalFailure("covariance lost positive definiteness at t=" + std::to_string(time) +
                               " (min eigenvalue " + std::to_string(lambda) + ")",
                           time, lambda);
  }
}

namespace {

// Riccati right-hand side A P + P A^T + B Q B^T for the configured side.
Matrix riccati(const SystemModel& m, const GroupElement& g, const Matrix& p, const Vector& u,
               const FilterConfig& cfg) {
  Matrix a;
  Matrix b;
  if (cfg.side == Side::Left) {
    a = system_matrix_left(m, g, u, cfg);
    b = m.noise_input(g, u);
  } else {
    a = system_matrix_right(m, g, u, cfg);
    b = m.spatial_noise_input(g, u);
  }
  const Matrix ap = a * p;
  return ap + ap.transpose() + b * m.process_noise() * b.transpose();
}

GroupElement lie_euler_step(const SystemModel& m, const GroupElement& g, const Vector& u,
                            double dt, Side side) {
  const LieGroup& group = m.group();
  if (side == Side::Left) return group.compose(g, group.exp(m.drift(g, u) * dt));
  return group.compose(group.exp(m.spatial_drift(g, u) * dt), g);
}

FilterState step(const FilterState& s, const SystemModel& m, const Vector& u, double dt,
                 double t_next, const FilterConfig& cfg) {
  const LieGroup& group = m.group();
  FilterState out;
  out.time = t_next;
  const std::optional<GroupElement> exact = m.exact_step(s.estimate, u, dt);
  out.estimate = exact ? *exact : lie_euler_step(m, s.estimate, u, dt, cfg.side);

  switch (cfg.integrator) {
    case CovarianceIntegrator::LieEuler: {
      // Congruence form of the Euler step, (I + A dt) P (I + A dt)^T + B Q B^T dt,
      // which keeps P positive definite.  The left side handles the -ad_a
      // part by transporting with the inverse of the actual body increment.
      const int k = group.dim();
      if (cfg.side == Side::Left) {
        const Matrix phi = Matrix::Identity(k, k) + drift_jacobian(m, s.estimate, u, cfg) * dt;
        const Matrix b = m.noise_input(s.estimate, u);
        const Matrix transport =
            exact ? group.Ad(group.compose(group.inverse(*exact), s.estimate))
                  : group.Ad(group.exp(-m.drift(s.estimate, u) * dt));
        const Matrix x = phi * s.cov * phi.transpose() + b * m.process_noise() * b.transpose() * dt;
        out.cov = transport * x * transport.transpose();
      } else {
        const Matrix phi = Matrix::Identity(k, k) + system_matrix_right(m, s.estimate, u, cfg) * dt;
        const Matrix b = m.spatial_noise_input(s.estimate, u);
        out.cov = phi * s.cov * phi.transpose() + b * m.process_noise() * b.transpose() * dt;
      }
      break;
    }
    case CovarianceIntegrator::Euler:
      out.cov = s.cov + riccati(m, s.estimate, s.cov, u, cfg) * dt;
      break;
    case CovarianceIntegrator::Heun: {
      const Matrix k1 = riccati(m, s.estimate, s.cov, u, cfg);
      const Matrix predicted = s.cov + k1 * dt;
      const Matrix k2 = riccati(m, out.estimate, predicted, u, cfg);
      out.cov = s.cov + 0.5 * (k1 + k2) * dt;
      break;
    }
  }
  symmetrize(out.cov);
  if (!out.estimate.matrix().allFinite()) {
    throw NumericalFailure("estimate became non-finite at t=" + std::to_string(t_next), t_next,
                           std::numeric_limits<double>::quiet_NaN());
  }
  check_positive_definite(out.cov, t_next);
  return out;
}

}  // namespace

FilterState propagate(const FilterState& state, const SystemModel& m, const Vector& u,
                      double duration, const FilterConfig& cfg) {
  cfg.validate();
  if (duration < 0.0) throw std::invalid_argument("propagation duration must be non-negative");
  const double steps_real = duration / cfg.dt;
  const long steps = std::lround(steps_real);
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real)) {
    throw std::invalid_argument("propagation duration " + std::to_string(duration) +
                                " is not a multiple of dt " + std::to_string(cfg.dt));
  }
  FilterState s = state;
  const double t0 = state.time;
  for (long i = 0; i < steps; ++i) {
    s = step(s, m, u, cfg.dt, t0 + static_cast<double>(i + 1) * cfg.dt, cfg);
  }
  return s;
}

UpdateResult update(const FilterState& state, const SystemModel& m, const Vector& y,
                    const Vector& u, const FilterConfig& cfg) {
  cfg.validate();
  const LieGroup& group = m.group();
  UpdateResult result;
  result.state = state;
  if (!y.allFinite()) return result;

  const Vector predicted = m.measurement(state.estimate, u);
  if (predicted.size() != y.size()) throw DimensionMismatch("measurement has the wrong length");

  const Matrix c = cfg.side == Side::Left ? measurement_matrix_left(m, state.estimate, u, cfg)
                                          : measurement_matrix_right(m, state.estimate, u, cfg);
  const Matrix d = m.measurement_noise_input(state.estimate, u);
  const Matrix& p = state.cov;
  const Matrix cp = c * p;
  Matrix s = cp * c.transpose() + d * m.measurement_noise() * d.transpose();
  symmetrize(s);
  const Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw SingularInnovation("innovation covariance is not positive definite at t=" +
                             std::to_string(state.time));
  }
  // K = P C^T S^-1 = (S^-1 C P)^T since P and S are symmetric.
  const Matrix gain = llt.solve(cp).transpose();
  const AlgebraVector zeta = gain * (y - predicted);

  const int k = group.dim();
  const Matrix reset = reset_matrix(group, zeta, cfg.reset_order, cfg.side);
  Matrix cov = reset * (Matrix::Identity(k, k) - gain * c) * p * reset.transpose();
  symmetrize(cov);
  check_positive_definite(cov, state.time);

  result.state.estimate = cfg.side == Side::Left
                              ? group.compose(state.estimate, group.exp(zeta))
                              : group.compose(group.exp(zeta), state.estimate);
  result.state.cov = std::move(cov);
  result.gain = gain;
  result.correction = zeta;
  result.accepted = true;
  return result;
}

FilterState left_to_right(const FilterState& left, const LieGroup& group) {
  FilterState right = left;
  const Matrix ad = group.Ad(left.estimate);
  right.cov = ad * left.cov * ad.transpose();
  symmetrize(right.cov);
  return right;
}

FilterState right_to_left(const FilterState& right, const LieGroup& group) {
  FilterState left = right;
  const Matrix ad_inv = group.Ad(group.inverse(right.estimate));
  left.cov = ad_inv * right.cov * ad_inv.transpose();
  symmetrize(left.cov);
  return left;
}

// ---------------------------------------------------------------- LinearModel

LinearModel::LinearModel(Matrix f, Matrix l, Matrix g, Matrix h, Matrix q, Matrix n)
    : SystemModel(make_vector_group(static_cast<int>(f.rows())), std::move(q), std::move(n)),
      f_(std::move(f)),
      l_(std::move(l)),
      g_(std::move(g)),
      h_(std::move(h)) {
  const auto dim = f_.rows();
  if (f_.cols() != dim || l_.rows() != dim || g_.rows() != dim || h_.cols() != dim ||
      g_.cols() != process_noise().rows() || h_.rows() != measurement_noise().rows()) {
    throw DimensionMismatch("linear model: inconsistent matrix dimensions");
  }
}

Vector LinearModel::coords(const GroupElement& g) const {
  const auto dim = f_.rows();
  return g.matrix().col(dim).head(dim);
}

AlgebraVector LinearModel::drift(const GroupElement& g, const Vector& u) const {
  return f_ * coords(g) + l_ * u;
}

Matrix LinearModel::noise_input(const GroupElement&, const Vector&) const { return g_; }

Vector LinearModel::measurement(const GroupElement& g, const Vector&) const {
  return h_ * coords(g);
}

Matrix LinearModel::measurement_noise_input(const GroupElement&, const Vector&) const {
  return Matrix::Identity(h_.rows(), h_.rows());
}

std::optional<Matrix> LinearModel::drift_jacobian(const GroupElement&, const Vector&) const {
  return f_;
}

std::optional<Matrix> LinearModel::measurement_jacobian(const GroupElement&,
                                                        const Vector&) const {
  return h_;
}

}  // namespace lekf
