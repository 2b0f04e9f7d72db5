// Command-line front end: run, verify, simulate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lekf/config.hpp"
#include "lekf/harness.hpp"
#include "lekf/sim.hpp"
#include "lekf/verify.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kVerifyFailure = 4 };

lekf::harness::ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? lekf::harness::ExperimentConfig{} : lekf::load_config(path);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Left/right invariant extended Kalman filters on matrix Lie groups"};
  app.require_subcommand(1);

  std::string config_path;
  int trials = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int workers = -1;
  std::string variants;

  auto* run = app.add_subcommand("run", "Monte Carlo comparison of the filter variants");
  run->add_option("--config", config_path, "JSON configuration file")->required();
  run->add_option("--trials", trials, "number of trials (overrides the config)")
      ->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--workers", workers, "worker threads, 0 = all cores")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--variants", variants, "comma-separated list, e.g. L-FO,R-FO");

  int cases = 1000;
  int lemma_states = 100;
  int eq_trials = 10;
  auto* verify = app.add_subcommand("verify", "group identities, lemma and equivalence checks");
  verify->add_option("--config", config_path, "JSON configuration file");
  verify->add_option("--cases", cases, "random cases per group")->check(CLI::PositiveNumber);
  verify->add_option("--states", lemma_states, "random states for the lemma check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--trials", eq_trials, "trials for the equivalence check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--workers", workers, "worker threads, 0 = all cores")
      ->check(CLI::NonNegativeNumber);

  std::uint64_t trial_index = 0;
  std::string csv_path;
  auto* simulate = app.add_subcommand("simulate", "write one simulated trial as CSV");
  simulate->add_option("--config", config_path, "JSON configuration file");
  auto* sim_seed_opt = simulate->add_option("--seed", seed, "master seed (overrides the config)");
  simulate->add_option("--trial", trial_index, "trial index");
  simulate->add_option("--out", csv_path, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  seed_set = seed_opt->count() > 0 || sim_seed_opt->count() > 0;

  try {
    lekf::harness::ExperimentConfig cfg = load_or_default(config_path);
    if (trials > 0) cfg.trials = trials;
    if (seed_set) cfg.trajectory.master_seed = seed;
    if (!out_dir.empty()) cfg.output.directory = out_dir;
    if (workers >= 0) cfg.output.workers = workers;
    if (!variants.empty()) {
      cfg.filters.variants.clear();
      for (const auto& name : split(variants, ','))
        cfg.filters.variants.push_back(lekf::harness::Variant::parse(name));
    }
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw lekf::ConfigError(e.what());
    }

    if (*run) {
      const auto table = lekf::harness::run_experiment(cfg);
      lekf::harness::write_outputs(table, cfg, cfg.output.directory);
      std::cout << lekf::harness::summary(table);
      std::cout << "outputs written to " << cfg.output.directory << '\n';
      return kOk;
    }

    if (*verify) {
      lekf::verify::Report report = lekf::verify::group_suite(cases);
      report.append(lekf::verify::lemma_check(lemma_states));
      report.append(lekf::verify::ballistic_check());
      report.append(lekf::verify::equivalence_check(cfg, eq_trials));
      std::cout << report.to_string();
      const bool ok = report.passed();
      std::cout << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
      return ok ? kOk : kVerifyFailure;
    }

    if (*simulate) {
      const lekf::ins::InsModel model(cfg.noise);
      lekf::sim::TrajectoryConfig traj = cfg.trajectory;
      traj.trial_index = trial_index;
      const auto sc = lekf::sim::make_scenario(traj, model, cfg.initial_covariance);
      if (csv_path.empty()) {
        lekf::sim::write_truth_csv(std::cout, sc.truth, sc.sensors);
      } else {
        std::ofstream f(csv_path);
        if (!f) throw std::runtime_error("cannot write " + csv_path);
        lekf::sim::write_truth_csv(f, sc.truth, sc.sensors);
      }
      return kOk;
    }
  } catch (const lekf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const lekf::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
