#pragma once

#include <memory>

#include "lekf/filter.hpp"
#include "lekf/groups.hpp"

namespace lekf::ins {

// Algebra slots of SE_2(3) x R^3 x R^3.
inline constexpr int kRot = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kBiasF = 9;
inline constexpr int kBiasW = 12;
inline constexpr int kStateDim = 15;
inline constexpr int kNoiseDim = 12;
inline constexpr int kMatrixSize = 13;

/// IMU sample: specific force (m/s^2) and angular rate (rad/s), body frame.
struct InsInput {
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();

  /// [f; omega]
  Vector pack() const;
  static InsInput unpack(const Vector& u);
};

/// Sensor and process noise in continuous-time densities.  Defaults match a
/// tactical-grade (STIM300 class) IMU and a 7 cm GNSS position fix.
struct InsNoiseParams {
  double sigma_f = 6.9343e-4;       // m/s^(3/2)
  double sigma_omega = 3.0853e-5;   // rad/s^(1/2)
  double sigma_bf = 4.1881e-5;      // m/s^(5/2)
  double sigma_bomega = 3.9284e-6;  // rad/s^(3/2)
  double tau_bf = 600.0;            // s
  double tau_bomega = 600.0;        // s
  double sigma_y = 0.07;            // m
  /// The filter uses N = inflation * sigma_y^2 I to absorb update
  /// linearization error.
  double measurement_inflation = 3.0;
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};

  void validate() const;
};

/// Initial estimation error standard deviations, per slot.
struct InitialCovariance {
  double attitude = 20.0 * 3.14159265358979323846 / 180.0;  // rad
  double velocity = 10.0;                                   // m/s
  double position = 10.0;                                   // m
  double accel_bias = 0.0073;                               // m/s^2
  double gyro_bias = 0.0012;                                // rad/s

  /// Block-diagonal 15x15 body-frame covariance.
  Matrix matrix() const;
};

/// Unpacked navigation state.
struct NavState {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();

  GroupElement to_element() const;
  static NavState from_element(const GroupElement& g);
};

/// Exact motion over dt with body specific force f and angular rate omega
/// held constant: R' = R dR, v' = v + R dv + gamma dt,
/// p' = p + v dt + R dp + gamma dt^2 / 2.  Biases are left alone.
NavState advance_kinematics(const NavState& s, const Eigen::Vector3d& f,
                            const Eigen::Vector3d& omega, const Eigen::Vector3d& gamma, double dt);

/// IMU-driven navigation with Gauss-Markov biases and GNSS position fixes.
///
/// Body velocity of the state (R, v, p, b_f, b_w):
///   rotation  omega - b_w
///   velocity  f - b_f + R^T gamma
///   position  R^T v
///   b_f       -b_f / tau_f
///   b_w       -b_w / tau_w
/// Noise (w_f, w_w, w_bf, w_bw) enters as -w_f, -w_w, +w_bf, +w_bw.
class InsModel final : public SystemModel {
 public:
  explicit InsModel(InsNoiseParams params = {});

  const InsNoiseParams& params() const { return params_; }

  AlgebraVector drift(const GroupElement& g, const Vector& u) const override;
  Matrix noise_input(const GroupElement& g, const Vector& u) const override;
  Vector measurement(const GroupElement& g, const Vector& u) const override;
  Matrix measurement_noise_input(const GroupElement& g, const Vector& u) const override;
  std::optional<Matrix> drift_jacobian(const GroupElement& g, const Vector& u) const override;
  std::optional<Matrix> measurement_jacobian(const GroupElement& g,
                                             const Vector& u) const override;
  /// advance_kinematics with the bias-corrected input; biases decay by
  /// exp(-dt / tau).
  std::optional<GroupElement> exact_step(const GroupElement& g, const Vector& u,
                                         double dt) const override;

  /// Constant 15 x 12 noise input matrix.
  static Matrix noise_matrix();
  static Matrix process_noise_matrix(const InsNoiseParams& p);

 private:
  InsNoiseParams params_;
  Matrix noise_matrix_;
};

}  // namespace lekf::ins
