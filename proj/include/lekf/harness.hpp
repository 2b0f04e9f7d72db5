#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lekf/filter.hpp"
#include "lekf/ins_model.hpp"
#include "lekf/metrics.hpp"
#include "lekf/sim.hpp"

namespace lekf::harness {

/// One filter variant, named "<L|R>-<FO|1O|0O>".
struct Variant {
  Side side = Side::Left;
  ResetOrder order = ResetOrder::Full;

  std::string name() const;
  /// Throws std::invalid_argument on an unknown name.
  static Variant parse(const std::string& name);
  bool operator==(const Variant&) const = default;
};

/// L-FO, R-FO, L-1O, R-1O, L-0O, R-0O
std::vector<Variant> default_variants();

struct FilterOptions {
  std::vector<Variant> variants = default_variants();
  DerivativeMode derivative_mode = DerivativeMode::Analytic;
  double fd_step = 1e-6;
  CovarianceIntegrator integrator = CovarianceIntegrator::LieEuler;
};

struct OutputOptions {
  std::string directory = "results";
  /// 0 means one worker per available core.
  int workers = 0;
  bool error_series = true;
};

struct ExperimentConfig {
  int trials = 100;
  sim::TrajectoryConfig trajectory;
  ins::InsNoiseParams noise;
  ins::InitialCovariance initial_covariance;
  FilterOptions filters;
  OutputOptions output;

  /// Throws std::invalid_argument.
  void validate() const;
  /// Filter configuration for one variant; dt is the IMU period.
  FilterConfig filter_config(const Variant& v) const;
};

/// Per-step agreement of L-FO and R-FO.
struct EquivalenceMonitor {
  bool available = false;
  double max_state_error = 0.0;
  /// max_k |P_bar - Ad P Ad^T|_F / |Ad P Ad^T|_F
  double max_cov_rel_error = 0.0;
};

struct Divergence {
  bool diverged = false;
  double time = 0.0;
  std::string reason;
};

struct TrialResult {
  std::uint64_t trial_index = 0;
  /// MAE against truth per variant.
  std::vector<metrics::StateError> vs_truth;
  /// Total-error MAE between variants, n x n, zero diagonal.
  Matrix pairwise;
  std::vector<Divergence> divergence;
  EquivalenceMonitor equivalence;
  /// series[v][m][k]: error of variant v vs truth at t_{k+1}, metric m in
  /// (total, position, orientation).  Empty unless requested.
  std::vector<std::array<std::vector<float>, 3>> series;
};

/// Simulates one trial and runs every configured variant on the same data.
TrialResult run_trial(const ExperimentConfig& cfg, const ins::InsModel& model,
                      std::uint64_t trial_index, bool keep_series = true);

/// Trials 0..count-1 in order on the calling thread.
std::vector<TrialResult> run_trials_serial(const ExperimentConfig& cfg,
                                           const ins::InsModel& model, int count,
                                           bool keep_series = true);

/// Same results as run_trials_serial, trials spread over `workers` threads
/// (0 = all cores).  Falls back to serial without OpenMP.
std::vector<TrialResult> run_trials_parallel(const ExperimentConfig& cfg,
                                             const ins::InsModel& model, int count, int workers,
                                             bool keep_series = true);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> p95;
};

struct MetricsTable {
  std::vector<std::string> names;
  int trials = 0;
  /// Average over trials of the per-trial pairwise MAE.
  Matrix pairwise;
  /// names.size() x 3: total, position, orientation average MAE vs truth.
  Matrix vs_truth;
  std::vector<int> divergence_count;
  EquivalenceMonitor equivalence;  // worst case over trials
  std::vector<double> time;        // t_1..t_K
  /// series[v][m]
  std::vector<std::array<SeriesStats, 3>> series;
};

/// Deterministic reduction in trial order.
MetricsTable aggregate(const std::vector<TrialResult>& trials, const ExperimentConfig& cfg);

/// Runs cfg.trials trials (parallel) and aggregates.
MetricsTable run_experiment(const ExperimentConfig& cfg);

/// Writes manifest.json, pairwise_mae.csv, vs_truth_mae.csv and, when
/// available, error_series_{total,position,orientation}.csv into `dir`.
/// Floats are written with 12 significant digits ("{:.12g}").
void write_outputs(const MetricsTable& table, const ExperimentConfig& cfg, const std::string& dir);

/// Human-readable tables and the full-order ranking check.
std::string summary(const MetricsTable& table);

/// True when both full-order variants are present and have the two lowest
/// total vs-truth MAEs.
bool full_order_ranks_first(const MetricsTable& table);

}  // namespace lekf::harness
