// Monte Carlo trials: serial reference against the OpenMP runner.

#include <benchmark/benchmark.h>

#include "lekf/harness.hpp"

namespace {

lekf::harness::ExperimentConfig bench_config() {
  lekf::harness::ExperimentConfig cfg;
  cfg.trajectory.duration = 2.0;
  return cfg;
}

void BM_TrialsSerial(benchmark::State& state) {
  const auto cfg = bench_config();
  const lekf::ins::InsModel model(cfg.noise);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = lekf::harness::run_trials_serial(cfg, model, n, false);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_TrialsParallel(benchmark::State& state) {
  const auto cfg = bench_config();
  const lekf::ins::InsModel model(cfg.noise);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = lekf::harness::run_trials_parallel(cfg, model, n, 0, false);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

// One filter step, to see where trial time goes.
void BM_PropagateStep(benchmark::State& state) {
  const lekf::ins::InsModel model;
  lekf::FilterConfig cfg;
  cfg.side = state.range(0) ? lekf::Side::Right : lekf::Side::Left;
  lekf::FilterState s{lekf::ins::NavState{}.to_element(),
                      lekf::ins::InitialCovariance{}.matrix(), 0.0};
  const lekf::Vector u = lekf::ins::InsInput{{0.1, 0.2, 9.8}, {0.01, 0.02, 0.03}}.pack();
  for (auto _ : state) {
    auto next = lekf::propagate(s, model, u, cfg.dt, cfg);
    benchmark::DoNotOptimize(next);
  }
}

}  // namespace

BENCHMARK(BM_TrialsSerial)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PropagateStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
