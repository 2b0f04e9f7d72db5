#include "lekf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "lekf/config.hpp"

#ifdef LEKF_HAVE_OPENMP
#include <omp.h>
#endif

namespace lekf::harness {

namespace {

constexpr double kDivergenceThreshold = 1e6;
constexpr const char* kMetricNames[3] = {"total", "position", "orientation"};

}  // namespace

std::string Variant::name() const {
  const char* order_name = order == ResetOrder::Full ? "FO" : order == ResetOrder::First ? "1O" : "0O";
  return fmt::format("{}-{}", side == Side::Left ? 'L' : 'R', order_name);
}

Variant Variant::parse(const std::string& name) {
  for (Side s : {Side::Left, Side::Right}) {
    for (ResetOrder o : {ResetOrder::Full, ResetOrder::First, ResetOrder::Zero}) {
      const Variant v{s, o};
      if (v.name() == name) return v;
    }
  }
  throw std::invalid_argument("unknown filter variant '" + name + "'");
}

std::vector<Variant> default_variants() {
  return {{Side::Left, ResetOrder::Full},  {Side::Right, ResetOrder::Full},
          {Side::Left, ResetOrder::First}, {Side::Right, ResetOrder::First},
          {Side::Left, ResetOrder::Zero},  {Side::Right, ResetOrder::Zero}};
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  trajectory.validate();
  noise.validate();
  initial_covariance.matrix();
  if (filters.variants.empty()) throw std::invalid_argument("no filter variants selected");
  for (std::size_t i = 0; i < filters.variants.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (filters.variants[i] == filters.variants[j]) {
        throw std::invalid_argument("duplicate filter variant " + filters.variants[i].name());
      }
    }
  }
  filter_config(filters.variants.front()).validate();
  if (output.workers < 0) throw std::invalid_argument("workers must be non-negative");
}

FilterConfig ExperimentConfig::filter_config(const Variant& v) const {
  FilterConfig f;
  f.side = v.side;
  f.reset_order = v.order;
  f.dt = trajectory.dt();
  f.derivative_mode = filters.derivative_mode;
  f.fd_step = filters.fd_step;
  f.integrator = filters.integrator;
  return f;
}

TrialResult run_trial(const ExperimentConfig& cfg, const ins::InsModel& model,
                      std::uint64_t trial_index, bool keep_series) {
  sim::TrajectoryConfig traj = cfg.trajectory;
  traj.trial_index = trial_index;
  const sim::Scenario sc = sim::make_scenario(traj, model, cfg.initial_covariance);
  const LieGroup& group = model.group();

  const auto& variants = cfg.filters.variants;
  const int n = static_cast<int>(variants.size());
  const long k_steps = static_cast<long>(sc.sensors.imu.size());
  const double dt = traj.dt();

  std::vector<FilterConfig> fcfg;
  std::vector<FilterState> state;
  int lfo = -1;
  int rfo = -1;
  for (int v = 0; v < n; ++v) {
    fcfg.push_back(cfg.filter_config(variants[v]));
    state.push_back(variants[v].side == Side::Left ? sc.init.left : sc.init.right);
    if (variants[v].order == ResetOrder::Full) (variants[v].side == Side::Left ? lfo : rfo) = v;
  }

  TrialResult res;
  res.trial_index = trial_index;
  res.divergence.resize(n);
  res.vs_truth.resize(n);
  res.pairwise = Matrix::Zero(n, n);
  res.equivalence.available = lfo >= 0 && rfo >= 0;
  if (keep_series) {
    res.series.resize(n);
    for (auto& s : res.series)
      for (auto& m : s) m.resize(k_steps);
  }

  const auto monitor_equivalence = [&]() {
    if (!res.equivalence.available) return;
    if (res.divergence[lfo].diverged != res.divergence[rfo].diverged) {
      res.equivalence.max_state_error = std::numeric_limits<double>::infinity();
      return;
    }
    if (res.divergence[lfo].diverged) return;
    const FilterState& l = state[lfo];
    const FilterState& r = state[rfo];
    const double de = metrics::total_error(l.estimate, r.estimate);
    const Matrix ad = group.Ad(l.estimate);
    const Matrix expected = ad * l.cov * ad.transpose();
    const double dc = (r.cov - expected).norm() / expected.norm();
    res.equivalence.max_state_error = std::max(res.equivalence.max_state_error, de);
    res.equivalence.max_cov_rel_error = std::max(res.equivalence.max_cov_rel_error, dc);
  };
  monitor_equivalence();

  const auto mark = [&](int v, double t, std::string why) {
    res.divergence[v] = {true, t, std::move(why)};
  };

  std::size_t next_fix = 0;
  std::vector<metrics::StateError> err(n);
  std::vector<ins::NavState> nav(n);
  for (long k = 0; k < k_steps; ++k) {
    const Vector u = sc.sensors.imu[k].input();
    const bool has_fix =
        next_fix < sc.sensors.gnss.size() && sc.sensors.gnss[next_fix].step == k + 1;
    const GroupElement& truth = sc.truth.states[k + 1];
    const ins::NavState truth_nav = ins::NavState::from_element(truth);
    const double t = sc.truth.time[k + 1];

    for (int v = 0; v < n; ++v) {
      if (!res.divergence[v].diverged) {
        try {
          FilterState next = propagate(state[v], model, u, dt, fcfg[v]);
          if (has_fix) {
            next = update(next, model, sc.sensors.gnss[next_fix].position, u, fcfg[v]).state;
          }
          const metrics::StateError e =
              metrics::state_error(ins::NavState::from_element(next.estimate), truth_nav);
          if (!std::isfinite(e.total) || e.total > kDivergenceThreshold) {
            mark(v, t, fmt::format("error {:.3g} vs truth", e.total));
          } else {
            state[v] = std::move(next);
          }
        } catch (const Error& ex) {
          mark(v, t, ex.what());
        }
      }
      nav[v] = ins::NavState::from_element(state[v].estimate);
      err[v] = metrics::state_error(nav[v], truth_nav);
    }
    if (has_fix) ++next_fix;

    for (int v = 0; v < n; ++v) {
      res.vs_truth[v].total += err[v].total;
      res.vs_truth[v].position += err[v].position;
      res.vs_truth[v].orientation += err[v].orientation;
      if (keep_series) {
        res.series[v][0][k] = static_cast<float>(err[v].total);
        res.series[v][1][k] = static_cast<float>(err[v].position);
        res.series[v][2][k] = static_cast<float>(err[v].orientation);
      }
      for (int w = v + 1; w < n; ++w) res.pairwise(v, w) += metrics::state_error(nav[v], nav[w]).total;
    }
    monitor_equivalence();
  }

  const double inv_k = 1.0 / static_cast<double>(k_steps);
  for (int v = 0; v < n; ++v) {
    res.vs_truth[v].total *= inv_k;
    res.vs_truth[v].position *= inv_k;
    res.vs_truth[v].orientation *= inv_k;
    for (int w = v + 1; w < n; ++w) {
      res.pairwise(v, w) *= inv_k;
      res.pairwise(w, v) = res.pairwise(v, w);
    }
  }
  return res;
}

std::vector<TrialResult> run_trials_serial(const ExperimentConfig& cfg,
                                           const ins::InsModel& model, int count,
                                           bool keep_series) {
  std::vector<TrialResult> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(run_trial(cfg, model, static_cast<std::uint64_t>(i), keep_series));
  }
  return out;
}

std::vector<TrialResult> run_trials_parallel(const ExperimentConfig& cfg,
                                             const ins::InsModel& model, int count, int workers,
                                             bool keep_series) {
#ifdef LEKF_HAVE_OPENMP
  std::vector<TrialResult> out(count);
  std::vector<std::exception_ptr> errors(count);
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < count; ++i) {
    try {
      out[i] = run_trial(cfg, model, static_cast<std::uint64_t>(i), keep_series);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
#else
  (void)workers;
  return run_trials_serial(cfg, model, count, keep_series);
#endif
}

MetricsTable aggregate(const std::vector<TrialResult>& trials, const ExperimentConfig& cfg) {
  if (trials.empty()) throw std::invalid_argument("no trials to aggregate");
  const int n = static_cast<int>(cfg.filters.variants.size());
  MetricsTable t;
  for (const auto& v : cfg.filters.variants) t.names.push_back(v.name());
  t.trials = static_cast<int>(trials.size());
  t.pairwise = Matrix::Zero(n, n);
  t.vs_truth = Matrix::Zero(n, 3);
  t.divergence_count.assign(n, 0);
  t.equivalence.available = trials.front().equivalence.available;

  for (const auto& r : trials) {
    t.pairwise += r.pairwise;
    for (int v = 0; v < n; ++v) {
      t.vs_truth(v, 0) += r.vs_truth[v].total;
      t.vs_truth(v, 1) += r.vs_truth[v].position;
      t.vs_truth(v, 2) += r.vs_truth[v].orientation;
      if (r.divergence[v].diverged) ++t.divergence_count[v];
    }
    t.equivalence.max_state_error =
        std::max(t.equivalence.max_state_error, r.equivalence.max_state_error);
    t.equivalence.max_cov_rel_error =
        std::max(t.equivalence.max_cov_rel_error, r.equivalence.max_cov_rel_error);
  }
  const double inv_m = 1.0 / static_cast<double>(t.trials);
  t.pairwise *= inv_m;
  t.vs_truth *= inv_m;

  const bool have_series = std::all_of(trials.begin(), trials.end(),
                                       [](const TrialResult& r) { return !r.series.empty(); });
  if (!have_series) return t;

  const std::size_t k_steps = trials.front().series.front()[0].size();
  const double dt = cfg.trajectory.dt();
  t.time.resize(k_steps);
  for (std::size_t k = 0; k < k_steps; ++k) t.time[k] = static_cast<double>(k + 1) * dt;
  t.series.resize(n);
  std::vector<double> column(trials.size());
  for (int v = 0; v < n; ++v) {
    for (int m = 0; m < 3; ++m) {
      SeriesStats& s = t.series[v][m];
      s.mean.resize(k_steps);
      s.p95.resize(k_steps);
      for (std::size_t k = 0; k < k_steps; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < trials.size(); ++i) {
          column[i] = trials[i].series[v][m][k];
          sum += column[i];
        }
        s.mean[k] = sum * inv_m;
        s.p95[k] = metrics::percentile_nearest_rank_inplace(column, 95.0);
      }
    }
  }
  return t;
}

MetricsTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ins::InsModel model(cfg.noise);
  const auto trials =
      run_trials_parallel(cfg, model, cfg.trials, cfg.output.workers, cfg.output.error_series);
  return aggregate(trials, cfg);
}

void write_outputs(const MetricsTable& table, const ExperimentConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw std::runtime_error(fmt::format("cannot write {}/{}", dir, name));
    return f;
  };
  const int n = static_cast<int>(table.names.size());

  {
    auto f = open("pairwise_mae.csv");
    f << "filter";
    for (const auto& s : table.names) f << ',' << s;
    f << '\n';
    for (int i = 0; i < n; ++i) {
      f << table.names[i];
      for (int j = 0; j < n; ++j) f << fmt::format(",{:.12g}", table.pairwise(i, j));
      f << '\n';
    }
  }
  {
    auto f = open("vs_truth_mae.csv");
    f << "filter,total,position,orientation,diverged_trials\n";
    for (int i = 0; i < n; ++i) {
      f << fmt::format("{},{:.12g},{:.12g},{:.12g},{}\n", table.names[i], table.vs_truth(i, 0),
                       table.vs_truth(i, 1), table.vs_truth(i, 2), table.divergence_count[i]);
    }
  }
  if (!table.series.empty()) {
    for (int m = 0; m < 3; ++m) {
      auto f = open(fmt::format("error_series_{}.csv", kMetricNames[m]).c_str());
      f << 't';
      for (const auto& s : table.names) f << ',' << s << "_mean," << s << "_p95";
      f << '\n';
      std::string line;
      for (std::size_t k = 0; k < table.time.size(); ++k) {
        line = fmt::format("{:.12g}", table.time[k]);
        for (int v = 0; v < n; ++v) {
          fmt::format_to(std::back_inserter(line), ",{:.12g},{:.12g}", table.series[v][m].mean[k],
                         table.series[v][m].p95[k]);
        }
        line += '\n';
        f << line;
      }
    }
  }
  {
    using nlohmann::json;
    json divergence = json::object();
    for (int i = 0; i < n; ++i) divergence[table.names[i]] = table.divergence_count[i];
    json manifest = {
        {"program", "lekf"},
        {"version", "0.1.0"},
        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                              EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
        {"master_seed", cfg.trajectory.master_seed},
        {"trials", table.trials},
        {"config", json::parse(config_to_json(cfg))},
        {"diverged_trials", divergence},
        {"float_format", "{:.12g}"},
    };
    if (table.equivalence.available) {
      manifest["equivalence"] = {{"max_state_error", table.equivalence.max_state_error},
                                 {"max_cov_rel_error", table.equivalence.max_cov_rel_error}};
    }
    auto f = open("manifest.json");
    f << manifest.dump(2) << '\n';
  }
}

bool full_order_ranks_first(const MetricsTable& table) {
  const int n = static_cast<int>(table.names.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return table.vs_truth(a, 0) < table.vs_truth(b, 0); });
  int full = 0;
  for (const auto& s : table.names) full += s.ends_with("-FO");
  if (full != 2 || n < 3) return false;
  return table.names[order[0]].ends_with("-FO") && table.names[order[1]].ends_with("-FO");
}

std::string summary(const MetricsTable& table) {
  const int n = static_cast<int>(table.names.size());
  std::string out = fmt::format("trials: {}\n\nPairwise total MAE\n{:>6}", table.trials, "");
  for (const auto& s : table.names) out += fmt::format(" {:>10}", s);
  out += '\n';
  for (int i = 0; i < n; ++i) {
    out += fmt::format("{:>6}", table.names[i]);
    for (int j = 0; j < n; ++j) out += fmt::format(" {:>10.4g}", table.pairwise(i, j));
    out += '\n';
  }
  out += fmt::format("\nMAE vs truth\n{:>6} {:>10} {:>10} {:>10} {:>9}\n", "", "total", "position",
                     "orient", "diverged");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return table.vs_truth(a, 0) < table.vs_truth(b, 0); });
  for (int i : order) {
    out += fmt::format("{:>6} {:>10.4g} {:>10.4g} {:>10.4g} {:>9}\n", table.names[i],
                       table.vs_truth(i, 0), table.vs_truth(i, 1), table.vs_truth(i, 2),
                       table.divergence_count[i]);
  }
  if (table.equivalence.available) {
    out += fmt::format("\nL-FO vs R-FO: max state error {:.3g}, max covariance rel. error {:.3g}\n",
                       table.equivalence.max_state_error, table.equivalence.max_cov_rel_error);
  }
  out += fmt::format("full-order variants rank first: {}\n",
                     full_order_ranks_first(table) ? "yes" : "NO");
  return out;
}

}  // namespace lekf::harness
