#include "lekf/sim.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "lekf/gaussian.hpp"

namespace lekf::sim {

using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

constexpr long kReorthonormalizeEvery = 1000;

long checked_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const long n = std::lround(r);
  if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument(what);
  }
  return n;
}

}  // namespace

void TrajectoryConfig::validate() const {
  if (!(duration > 0) || !(imu_rate > 0) || !(gnss_rate > 0)) {
    throw std::invalid_argument("duration and rates must be positive");
  }
  imu_steps();
  gnss_stride();
  checked_ratio(duration * gnss_rate, 1.0, "gnss_rate must divide the duration evenly");
  if (!(input_time_constant > 0)) throw std::invalid_argument("input_time_constant must be positive");
  if (accel_std < 0 || gyro_std < 0) throw std::invalid_argument("input stds must be non-negative");
}

long TrajectoryConfig::imu_steps() const {
  return checked_ratio(duration * imu_rate, 1.0, "imu_rate must divide the duration evenly");
}

long TrajectoryConfig::gnss_stride() const {
  return checked_ratio(imu_rate, gnss_rate, "imu_rate must be a multiple of gnss_rate");
}

InputProfile generate_inputs(const TrajectoryConfig& cfg, Rng& rng) {
  const long k = cfg.imu_steps();
  const double alpha = std::exp(-cfg.dt() / cfg.input_time_constant);
  const double drive = std::sqrt(1.0 - alpha * alpha);
  InputProfile out;
  out.accel.resize(k);
  out.angular_rate.resize(k);
  Vector3d a = cfg.accel_std * rng.normal3();
  Vector3d w = cfg.gyro_std * rng.normal3();
  for (long i = 0; i < k; ++i) {
    out.accel[i] = a;
    out.angular_rate[i] = w;
    a = alpha * a + drive * cfg.accel_std * rng.normal3();
    w = alpha * w + drive * cfg.gyro_std * rng.normal3();
  }
  return out;
}

ins::NavState initial_truth(const ins::InitialCovariance& p0, Rng& rng) {
  ins::NavState s;
  s.accel_bias = p0.accel_bias * rng.normal3();
  s.gyro_bias = p0.gyro_bias * rng.normal3();
  return s;
}

TruthRecord simulate_truth(const TrajectoryConfig& cfg, const ins::InsModel& model,
                           const InputProfile& inputs, const ins::NavState& initial,
                           Rng& process_rng) {
  cfg.validate();
  const long k = cfg.imu_steps();
  if (static_cast<long>(inputs.accel.size()) != k ||
      static_cast<long>(inputs.angular_rate.size()) != k) {
    throw DimensionMismatch("input profile length does not match the trajectory");
  }
  const double dt = cfg.dt();
  const ins::InsNoiseParams& np = model.params();
  const double sd[4] = {np.sigma_f / std::sqrt(dt), np.sigma_omega / std::sqrt(dt),
                        np.sigma_bf / std::sqrt(dt), np.sigma_bomega / std::sqrt(dt)};
  const Vector3d& gamma = np.gravity;

  TruthRecord rec;
  rec.dt = dt;
  rec.gnss_stride = cfg.gnss_stride();
  rec.time.resize(k + 1);
  rec.states.reserve(k + 1);
  rec.specific_force.resize(k);
  rec.angular_rate.resize(k);
  rec.noise.resize(k);

  ins::NavState s = initial;
  rec.time[0] = 0.0;
  rec.states.push_back(s.to_element());
  for (long i = 0; i < k; ++i) {
    Eigen::Matrix<double, 12, 1> w;
    for (int b = 0; b < 4; ++b) w.segment<3>(3 * b) = sd[b] * process_rng.normal3();

    const Vector3d f = cfg.compensate_gravity
                           ? Vector3d(inputs.accel[i] - s.rotation.transpose() * gamma)
                           : inputs.accel[i];
    const Vector3d& omega = inputs.angular_rate[i];
    rec.specific_force[i] = f;
    rec.angular_rate[i] = omega;
    rec.noise[i] = w;

    // The IMU noise enters the measured input and is removed again by the
    // -w terms of the model, so the kinematics see the true f and omega.
    // They are integrated exactly under a zero-order hold; the biases follow
    // an Euler-Maruyama step of the Gauss-Markov model.
    ins::NavState n = ins::advance_kinematics(s, f, omega, gamma, dt);
    n.accel_bias = s.accel_bias + (-s.accel_bias / np.tau_bf + w.segment<3>(6)) * dt;
    n.gyro_bias = s.gyro_bias + (-s.gyro_bias / np.tau_bomega + w.segment<3>(9)) * dt;
    if ((i + 1) % kReorthonormalizeEvery == 0) n.rotation = so3::orthonormalize(n.rotation);
    s = n;

    rec.time[i + 1] = static_cast<double>(i + 1) * dt;
    rec.states.push_back(s.to_element());
  }
  return rec;
}

SensorData sample_sensors(const TruthRecord& truth, const ins::InsNoiseParams& params,
                          Rng& sensor_rng) {
  const long k = static_cast<long>(truth.specific_force.size());
  SensorData out;
  out.imu.resize(k);
  for (long i = 0; i < k; ++i) {
    const ins::NavState s = ins::NavState::from_element(truth.states[i]);
    const auto& w = truth.noise[i];
    out.imu[i] = {truth.time[i], truth.specific_force[i] + s.accel_bias + w.segment<3>(0),
                  truth.angular_rate[i] + s.gyro_bias + w.segment<3>(3)};
  }
  for (long i = truth.gnss_stride; i <= k; i += truth.gnss_stride) {
    const Vector3d p = truth.states[i].matrix().block<3, 1>(0, 4);
    out.gnss.push_back({truth.time[i], i, p + params.sigma_y * sensor_rng.normal3()});
  }
  return out;
}

InitialFilterStates initialize_filters(const TruthRecord& truth, const LieGroup& group,
                                       const Matrix& p0, Rng& rng) {
  if (truth.states.empty()) throw DimensionMismatch("empty truth record");
  if (p0.rows() != group.dim() || p0.cols() != group.dim()) {
    throw DimensionMismatch("P0 must be k x k");
  }
  const Matrix factor = covariance_factor(p0);
  const AlgebraVector xi = factor * rng.normal_vector(group.dim());
  const GroupElement g0 = group.compose(truth.states.front(), group.exp(xi));

  InitialFilterStates out;
  out.left = FilterState{g0, p0, 0.0};
  out.right = left_to_right(out.left, group);
  return out;
}

Scenario make_scenario(const TrajectoryConfig& cfg, const ins::InsModel& model,
                       const ins::InitialCovariance& p0) {
  const auto seed = cfg.master_seed;
  const auto trial = cfg.trial_index;
  Rng inputs_rng(seed, trial, Stream::Inputs);
  Rng initial_rng(seed, trial, Stream::InitialState);
  Rng process_rng(seed, trial, Stream::ProcessNoise);
  Rng sensor_rng(seed, trial, Stream::SensorNoise);
  Rng filter_rng(seed, trial, Stream::FilterInit);

  Scenario sc;
  const InputProfile inputs = generate_inputs(cfg, inputs_rng);
  const ins::NavState x0 = initial_truth(p0, initial_rng);
  sc.truth = simulate_truth(cfg, model, inputs, x0, process_rng);
  sc.sensors = sample_sensors(sc.truth, model.params(), sensor_rng);
  sc.init = initialize_filters(sc.truth, model.group(), p0.matrix(), filter_rng);
  return sc;
}

void write_truth_csv(std::ostream& out, const TruthRecord& truth, const SensorData& sensors) {
  out << "t";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << fmt::format(",R{}{}", i, j);
  for (const char* name : {"v", "p", "bf", "bw", "imu_f", "imu_w", "gnss"})
    for (const char* ax : {"x", "y", "z"}) out << ',' << name << '_' << ax;
  out << '\n';

  std::size_t next_fix = 0;
  const auto vec3 = [&](const Eigen::Vector3d& v) {
    out << fmt::format(",{:.17g},{:.17g},{:.17g}", v.x(), v.y(), v.z());
  };
  for (std::size_t i = 0; i < truth.states.size(); ++i) {
    const ins::NavState s = ins::NavState::from_element(truth.states[i]);
    out << fmt::format("{:.17g}", truth.time[i]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << fmt::format(",{:.17g}", s.rotation(r, c));
    vec3(s.velocity);
    vec3(s.position);
    vec3(s.accel_bias);
    vec3(s.gyro_bias);
    if (i < sensors.imu.size()) {
      vec3(sensors.imu[i].specific_force);
      vec3(sensors.imu[i].angular_rate);
    } else {
      out << ",,,,,,";
    }
    if (next_fix < sensors.gnss.size() &&
        sensors.gnss[next_fix].step == static_cast<long>(i)) {
      vec3(sensors.gnss[next_fix].position);
      ++next_fix;
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

}  // namespace lekf::sim
