#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lekf/filter.hpp"
#include "lekf/ins_model.hpp"
#include "lekf/rng.hpp"

namespace lekf::sim {

/// One simulated trajectory.  Rates must divide the duration evenly and the
/// IMU rate must be a multiple of the GNSS rate.
struct TrajectoryConfig {
  double duration = 10.0;   // s
  double imu_rate = 1000.0; // Hz
  double gnss_rate = 1.0;   // Hz
  /// Correlation time of the first-order low-pass input filter.
  double input_time_constant = 1.0;  // s
  /// Stationary per-axis standard deviation of the kinematic acceleration
  /// and of the angular rate.
  double accel_std = 1.33;  // m/s^2
  double gyro_std = 0.1;    // rad/s
  /// When true the accelerometer sees f = alpha - R^T gamma, i.e. the vehicle
  /// is supported against gravity and alpha is its own acceleration.  When
  /// false the generated profile is the specific force itself.
  bool compensate_gravity = true;
  std::uint64_t master_seed = 42;
  std::uint64_t trial_index = 0;

  void validate() const;
  double dt() const { return 1.0 / imu_rate; }
  long imu_steps() const;
  /// IMU steps between GNSS fixes.
  long gnss_stride() const;
};

/// Body-frame inputs on the IMU grid, one entry per step k = 0..K-1.
/// `accel` is the generated kinematic (or specific force, see
/// compensate_gravity) profile; the true specific force is in TruthRecord.
struct InputProfile {
  std::vector<Eigen::Vector3d> accel;
  std::vector<Eigen::Vector3d> angular_rate;
};

struct ImuSample {
  double time;
  Eigen::Vector3d specific_force;
  Eigen::Vector3d angular_rate;

  Vector input() const { return ins::InsInput{specific_force, angular_rate}.pack(); }
};

struct GnssSample {
  double time;
  long step;  // index into TruthRecord::states
  Eigen::Vector3d position;
};

/// Truth on the IMU grid.  states has K+1 entries (t_0..t_K); the per-step
/// streams have K entries and hold the values used over [t_k, t_k+1).
struct TruthRecord {
  double dt = 0.0;
  std::vector<double> time;
  std::vector<GroupElement> states;
  std::vector<Eigen::Vector3d> specific_force;
  std::vector<Eigen::Vector3d> angular_rate;
  /// Noise realizations (w_f, w_w, w_bf, w_bw) per step.
  std::vector<Eigen::Matrix<double, 12, 1>> noise;
  long gnss_stride = 0;
};

struct SensorData {
  std::vector<ImuSample> imu;
  std::vector<GnssSample> gnss;
};

/// Per-axis first-order low-pass filtered white noise, started from its
/// stationary distribution.
InputProfile generate_inputs(const TrajectoryConfig& cfg, Rng& rng);

/// Initial truth: R = I, v = p = 0, biases drawn from N(0, sigma_b0^2 I).
ins::NavState initial_truth(const ins::InitialCovariance& p0, Rng& rng);

/// Lie-Euler-Maruyama integration of the truth SDE with w_k ~ N(0, Q/dt).
/// The rotation is re-orthonormalized every 1000 steps.
TruthRecord simulate_truth(const TrajectoryConfig& cfg, const ins::InsModel& model,
                           const InputProfile& inputs, const ins::NavState& initial,
                           Rng& process_rng);

/// IMU = true input + bias + the same w_f / w_w used by the truth; GNSS =
/// true position + N(0, sigma_y^2 I) at every gnss_stride-th step.
SensorData sample_sensors(const TruthRecord& truth, const ins::InsNoiseParams& params,
                          Rng& sensor_rng);

struct InitialFilterStates {
  FilterState left;
  FilterState right;
};

/// Draws g0 = g_true exp(xi), xi ~ N(0, P0), once.  Left filters get P0,
/// right filters Ad(g0) P0 Ad(g0)^T.
InitialFilterStates initialize_filters(const TruthRecord& truth, const LieGroup& group,
                                       const Matrix& p0, Rng& rng);

/// Everything for one trial, with the documented stream split.
struct Scenario {
  TruthRecord truth;
  SensorData sensors;
  InitialFilterStates init;
};

Scenario make_scenario(const TrajectoryConfig& cfg, const ins::InsModel& model,
                       const ins::InitialCovariance& p0);

/// CSV with columns t, R (row-major), v, p, b_f, b_w, imu f, imu w, gnss.
/// The gnss columns are empty on steps without a fix; the last row (t_K) has
/// empty imu columns.
void write_truth_csv(std::ostream& out, const TruthRecord& truth, const SensorData& sensors);

}  // namespace lekf::sim
