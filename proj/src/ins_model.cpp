#include "lekf/ins_model.hpp"

#include <cmath>
#include <stdexcept>

namespace lekf::ins {

using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

constexpr int kBiasFMatrix = 5;  // diagonal offset of the b_f block
constexpr int kBiasWMatrix = 9;

Matrix measurement_noise_matrix(const InsNoiseParams& p) {
  return p.measurement_inflation * p.sigma_y * p.sigma_y * Matrix::Identity(3, 3);
}

}  // namespace

NavState advance_kinematics(const NavState& s, const Vector3d& f, const Vector3d& omega,
                            const Vector3d& gamma, double dt) {
  // Body increments are the blocks of expm([[w^, f, 0], [0, 0, 1], [0, 0, 0]] dt):
  //   dR = exp(phi), dv = Jl(phi) f dt, dp = N(phi) f dt^2,
  //   N = sum_k phi^k / (k + 2)!,  phi = omega dt.
  const Vector3d phi = omega * dt;
  const double t2 = phi.squaredNorm();
  double c1;
  double c2;
  if (t2 < 1e-4) {
    c1 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
  } else {
    const double t = std::sqrt(t2);
    c1 = (t - std::sin(t)) / (t2 * t);
    c2 = (0.5 * t2 + std::cos(t) - 1.0) / (t2 * t2);
  }
  const Matrix3d w = so3::skew(phi);
  const Matrix3d n = 0.5 * Matrix3d::Identity() + c1 * w + c2 * w * w;

  NavState out = s;
  out.rotation = s.rotation * so3::exp(phi);
  out.velocity = s.velocity + s.rotation * (so3::jac_left(phi) * f * dt) + gamma * dt;
  out.position = s.position + s.velocity * dt + s.rotation * (n * f * dt * dt) +
                 0.5 * gamma * dt * dt;
  return out;
}

Vector InsInput::pack() const {
  Vector u(6);
  u << specific_force, angular_rate;
  return u;
}

InsInput InsInput::unpack(const Vector& u) {
  if (u.size() != 6) throw DimensionMismatch("INS input must have 6 entries");
  InsInput in;
  in.specific_force = u.head<3>();
  in.angular_rate = u.tail<3>();
  return in;
}

void InsNoiseParams::validate() const {
  if (sigma_f < 0 || sigma_omega < 0 || sigma_bf < 0 || sigma_bomega < 0) {
    throw std::invalid_argument("noise densities must be non-negative");
  }
  if (!(tau_bf > 0) || !(tau_bomega > 0)) {
    throw std::invalid_argument("bias time constants must be positive");
  }
  if (!(sigma_y > 0)) throw std::invalid_argument("sigma_y must be positive");
  if (!(measurement_inflation > 0)) {
    throw std::invalid_argument("measurement_inflation must be positive");
  }
  if (!gravity.allFinite()) throw std::invalid_argument("gravity must be finite");
}

Matrix InitialCovariance::matrix() const {
  const double stds[5] = {attitude, velocity, position, accel_bias, gyro_bias};
  Matrix p = Matrix::Zero(kStateDim, kStateDim);
  for (int b = 0; b < 5; ++b) {
    if (!(stds[b] > 0)) throw std::invalid_argument("initial standard deviations must be positive");
    p.block<3, 3>(3 * b, 3 * b) = stds[b] * stds[b] * Matrix3d::Identity();
  }
  return p;
}

GroupElement NavState::to_element() const {
  Matrix m = Matrix::Identity(kMatrixSize, kMatrixSize);
  m.block<3, 3>(0, 0) = rotation;
  m.block<3, 1>(0, 3) = velocity;
  m.block<3, 1>(0, 4) = position;
  m.block<3, 1>(kBiasFMatrix, kBiasFMatrix + 3) = accel_bias;
  m.block<3, 1>(kBiasWMatrix, kBiasWMatrix + 3) = gyro_bias;
  return GroupElement(std::move(m));
}

NavState NavState::from_element(const GroupElement& g) {
  if (g.size() != kMatrixSize) throw DimensionMismatch("not a navigation state");
  const Matrix& m = g.matrix();
  NavState s;
  s.rotation = m.block<3, 3>(0, 0);
  s.velocity = m.block<3, 1>(0, 3);
  s.position = m.block<3, 1>(0, 4);
  s.accel_bias = m.block<3, 1>(kBiasFMatrix, kBiasFMatrix + 3);
  s.gyro_bias = m.block<3, 1>(kBiasWMatrix, kBiasWMatrix + 3);
  return s;
}

InsModel::InsModel(InsNoiseParams params)
    : SystemModel(make_navigation_group(), process_noise_matrix(params),
                  measurement_noise_matrix(params)),
      params_(std::move(params)),
      noise_matrix_(noise_matrix()) {
  params_.validate();
}

Matrix InsModel::noise_matrix() {
  Matrix b = Matrix::Zero(kStateDim, kNoiseDim);
  b.block<3, 3>(kVel, 0) = -Matrix3d::Identity();
  b.block<3, 3>(kRot, 3) = -Matrix3d::Identity();
  b.block<3, 3>(kBiasF, 6) = Matrix3d::Identity();
  b.block<3, 3>(kBiasW, 9) = Matrix3d::Identity();
  return b;
}

Matrix InsModel::process_noise_matrix(const InsNoiseParams& p) {
  Matrix q = Matrix::Zero(kNoiseDim, kNoiseDim);
  const double s[4] = {p.sigma_f, p.sigma_omega, p.sigma_bf, p.sigma_bomega};
  for (int b = 0; b < 4; ++b) q.block<3, 3>(3 * b, 3 * b) = s[b] * s[b] * Matrix3d::Identity();
  return q;
}

AlgebraVector InsModel::drift(const GroupElement& g, const Vector& u) const {
  const NavState s = NavState::from_element(g);
  const InsInput in = InsInput::unpack(u);
  const Matrix3d rt = s.rotation.transpose();
  AlgebraVector a(kStateDim);
  a.segment<3>(kRot) = in.angular_rate - s.gyro_bias;
  a.segment<3>(kVel) = in.specific_force - s.accel_bias + rt * params_.gravity;
  a.segment<3>(kPos) = rt * s.velocity;
  a.segment<3>(kBiasF) = -s.accel_bias / params_.tau_bf;
  a.segment<3>(kBiasW) = -s.gyro_bias / params_.tau_bomega;
  return a;
}

Matrix InsModel::noise_input(const GroupElement&, const Vector&) const { return noise_matrix_; }

Vector InsModel::measurement(const GroupElement& g, const Vector&) const {
  if (g.size() != kMatrixSize) throw DimensionMismatch("not a navigation state");
  return g.matrix().block<3, 1>(0, 4);
}

Matrix InsModel::measurement_noise_input(const GroupElement&, const Vector&) const {
  return Matrix::Identity(3, 3);
}

std::optional<Matrix> InsModel::drift_jacobian(const GroupElement& g, const Vector&) const {
  const NavState s = NavState::from_element(g);
  const Matrix3d rt = s.rotation.transpose();
  const Matrix3d eye = Matrix3d::Identity();
  Matrix d = Matrix::Zero(kStateDim, kStateDim);
  d.block<3, 3>(kRot, kBiasW) = -eye;
  d.block<3, 3>(kVel, kRot) = so3::skew(rt * params_.gravity);
  d.block<3, 3>(kVel, kBiasF) = -eye;
  d.block<3, 3>(kPos, kRot) = so3::skew(rt * s.velocity);
  d.block<3, 3>(kPos, kVel) = eye;
  d.block<3, 3>(kBiasF, kBiasF) = -eye / params_.tau_bf;
  d.block<3, 3>(kBiasW, kBiasW) = -eye / params_.tau_bomega;
  return d;
}

std::optional<Matrix> InsModel::measurement_jacobian(const GroupElement& g,
                                                     const Vector&) const {
  if (g.size() != kMatrixSize) throw DimensionMismatch("not a navigation state");
  Matrix c = Matrix::Zero(3, kStateDim);
  c.block<3, 3>(0, kPos) = g.matrix().block<3, 3>(0, 0);
  return c;
}

std::optional<GroupElement> InsModel::exact_step(const GroupElement& g, const Vector& u,
                                                 double dt) const {
  const NavState s = NavState::from_element(g);
  const InsInput in = InsInput::unpack(u);
  NavState n = advance_kinematics(s, in.specific_force - s.accel_bias,
                                  in.angular_rate - s.gyro_bias, params_.gravity, dt);
  n.accel_bias = s.accel_bias * std::exp(-dt / params_.tau_bf);
  n.gyro_bias = s.gyro_bias * std::exp(-dt / params_.tau_bomega);
  return n.to_element();
}

}  // namespace lekf::ins
