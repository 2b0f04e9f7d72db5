#pragma once

#include <functional>
#include <optional>

#include "lekf/lie_group.hpp"

namespace lekf {

/// Stochastic system on a matrix Lie group, written with body velocities:
///
///   g' = g [a(g,u) + B(g,u) w]^      w ~ white, PSD Q   (Stratonovich)
///   y  = c(g,u) + D(g,u) eta         eta ~ N(0, N)
///
/// Models may override drift_jacobian / measurement_jacobian with analytic
/// right derivatives; otherwise finite differences are used.  Immutable.
class SystemModel {
 public:
  SystemModel(GroupPtr group, Matrix process_noise, Matrix measurement_noise);
  virtual ~SystemModel() = default;

  const LieGroup& group() const { return *group_; }
  const GroupPtr& group_ptr() const { return group_; }
  const Matrix& process_noise() const { return process_noise_; }
  const Matrix& measurement_noise() const { return measurement_noise_; }

  virtual AlgebraVector drift(const GroupElement& g, const Vector& u) const = 0;
  virtual Matrix noise_input(const GroupElement& g, const Vector& u) const = 0;
  virtual Vector measurement(const GroupElement& g, const Vector& u) const = 0;
  virtual Matrix measurement_noise_input(const GroupElement& g, const Vector& u) const = 0;

  virtual std::optional<Matrix> drift_jacobian(const GroupElement&, const Vector&) const {
    return std::nullopt;
  }
  virtual std::optional<Matrix> measurement_jacobian(const GroupElement&, const Vector&) const {
    return std::nullopt;
  }
  /// Solution of g' = g a(g,u)^ over dt with u held constant, for models
  /// that have one in closed form.  Filters then use it for the estimate
  /// instead of the Lie-Euler step g exp(a dt).
  virtual std::optional<GroupElement> exact_step(const GroupElement&, const Vector&,
                                                 double /*dt*/) const {
    return std::nullopt;
  }

  /// Spatial velocity a_bar = Ad_g a.
  AlgebraVector spatial_drift(const GroupElement& g, const Vector& u) const;
  /// B_bar = Ad_g B.
  Matrix spatial_noise_input(const GroupElement& g, const Vector& u) const;

 private:
  GroupPtr group_;
  Matrix process_noise_;
  Matrix measurement_noise_;
};

enum class Side { Left, Right };
enum class ResetOrder { Zero, First, Full };
enum class DerivativeMode { Analytic, FiniteDifference };

/// Covariance integration scheme for one propagation step.
///
/// LieEuler (default): first order, written as a congruence
///   right: P_bar' = (I + A_bar dt) P_bar (I + A_bar dt)^T + B_bar Q B_bar^T dt
///   left:  P' = T [(I + D dt) P (I + D dt)^T + B Q B^T dt] T^T,
///          D = d a, T = Ad(g'^-1 g)  (= Ad(exp(-a dt)) for a Lie-Euler step)
/// so P stays positive definite and P_bar = Ad P Ad^T holds exactly at
/// every step.
///
/// Euler: P + (A P + P A^T + B Q B^T) dt on both sides.  The sides only agree
/// to O(dt), and the missing A P A^T dt^2 term can make P indefinite when P
/// is badly conditioned.
///
/// Heun: two-stage explicit RK2 on the Riccati equation, for step-size
/// sensitivity checks.
enum class CovarianceIntegrator { LieEuler, Euler, Heun };

struct FilterConfig {
  Side side = Side::Left;
  ResetOrder reset_order = ResetOrder::Full;
  double dt = 1e-3;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;
  double fd_step = 1e-6;
  CovarianceIntegrator integrator = CovarianceIntegrator::LieEuler;

  void validate() const;
};

/// Estimate and covariance.  For Side::Left cov is the body-frame P, for
/// Side::Right the spatial-frame P_bar.
struct FilterState {
  GroupElement estimate;
  Matrix cov;
  double time = 0.0;
};

using GroupFunction = std::function<Vector(const GroupElement&)>;

/// Central differences over f(g exp(+-h e_i)).
Matrix right_derivative(const LieGroup& group, const GroupFunction& f, const GroupElement& g,
                        double h = 1e-6);
/// Central differences over f(exp(+-h e_i) g).
Matrix left_derivative(const LieGroup& group, const GroupFunction& f, const GroupElement& g,
                       double h = 1e-6);

/// Right derivative of the drift, analytic when the model provides it and
/// the config asks for it.
Matrix drift_jacobian(const SystemModel& m, const GroupElement& g, const Vector& u,
                      const FilterConfig& cfg);
/// Left derivative of the spatial drift Ad_g a.
Matrix spatial_drift_jacobian(const SystemModel& m, const GroupElement& g, const Vector& u,
                              const FilterConfig& cfg);

/// A = d a - ad_a
Matrix system_matrix_left(const SystemModel& m, const GroupElement& g, const Vector& u,
                          const FilterConfig& cfg);
/// A_bar = d_bar a_bar + ad_{a_bar}
Matrix system_matrix_right(const SystemModel& m, const GroupElement& g, const Vector& u,
                           const FilterConfig& cfg);

/// C (right derivative of c).
Matrix measurement_matrix_left(const SystemModel& m, const GroupElement& g, const Vector& u,
                               const FilterConfig& cfg);
/// C_bar (left derivative of c).
Matrix measurement_matrix_right(const SystemModel& m, const GroupElement& g, const Vector& u,
                                const FilterConfig& cfg);

/// Covariance reset applied after an update with correction zeta:
///   zero  -> I
///   first -> I - ad/2 (left) or I + ad/2 (right)
///   full  -> Jr(zeta) (left) or Jl(zeta) (right)
Matrix reset_matrix(const LieGroup& group, const AlgebraVector& zeta, ResetOrder order, Side side);

/// Integrates over `duration` (an integer multiple of cfg.dt) with the input
/// held constant.  Throws NumericalFailure if the covariance stops being
/// positive definite.
FilterState propagate(const FilterState& state, const SystemModel& m, const Vector& u,
                      double duration, const FilterConfig& cfg);

struct UpdateResult {
  FilterState state;
  Matrix gain;              // K or K_bar
  AlgebraVector correction; // zeta or zeta_bar
  bool accepted = false;    // false when y contained NaN
};

/// Kalman update followed by the configured covariance reset.  A measurement
/// containing NaN is rejected and the state returned unchanged.
UpdateResult update(const FilterState& state, const SystemModel& m, const Vector& y,
                    const Vector& u, const FilterConfig& cfg);

/// Change of variables between the two formulations:
/// same estimate, P_bar = Ad P Ad^T.
FilterState left_to_right(const FilterState& left, const LieGroup& group);
FilterState right_to_left(const FilterState& right, const LieGroup& group);

/// Throws NumericalFailure unless cov is symmetric positive definite.
void check_positive_definite(const Matrix& cov, double time);

/// Linear time-invariant model on R^n:  x' = F x + L u + G w,  y = H x + eta.
class LinearModel final : public SystemModel {
 public:
  LinearModel(Matrix f, Matrix l, Matrix g, Matrix h, Matrix q, Matrix n);

  AlgebraVector drift(const GroupElement& g, const Vector& u) const override;
  Matrix noise_input(const GroupElement& g, const Vector& u) const override;
  Vector measurement(const GroupElement& g, const Vector& u) const override;
  Matrix measurement_noise_input(const GroupElement& g, const Vector& u) const override;
  std::optional<Matrix> drift_jacobian(const GroupElement& g, const Vector& u) const override;
  std::optional<Matrix> measurement_jacobian(const GroupElement& g,
                                             const Vector& u) const override;

 private:
  Vector coords(const GroupElement& g) const;

  Matrix f_, l_, g_, h_;
};

}  // namespace lekf
