#include "gridy/ajive.hpp"
#include "gridy/experiment.hpp"
#include "gridy/parallel.hpp"
#include "gridy/rank_selection.hpp"
#include "gridy/sca_fit.hpp"
#include "gridy/simulation.hpp"

#include <benchmark/benchmark.h>

using namespace gridy;

namespace {

const SimulatedData& dataset() {
  static const SimulatedData data = [] {
    SimulationConfig cfg;
    cfg.d = 100;
    cfg.T = 200;
    cfg.K = 5;
    cfg.c = 2.0;
    cfg.seed = 1;
    return simulate_dataset(cfg);
  }();
  return data;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_RotationalBootstrap(benchmark::State& state) {
  BootstrapOptions o;
  o.reps = 100;
  o.execution = mode(state);
  const Matrix& x = dataset().data.block(0).values;
  for (auto _ : state) benchmark::DoNotOptimize(rotational_bootstrap(x, o, 3).rank);
  label(state);
}

void BM_SegmentationThresholds(benchmark::State& state) {
  const auto& data = dataset().data;
  std::vector<Matrix> blocks;
  std::vector<Svd> svds;
  std::vector<int> ranks;
  for (const auto& b : data.blocks()) {
    blocks.push_back(b.values);
    svds.push_back(truncated_svd(b.values, 4));
    ranks.push_back(4);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(random_direction_threshold(data.dim(), ranks, 100, 5, mode(state)));
    benchmark::DoNotOptimize(wedin_threshold(blocks, svds, 100, 5, mode(state)));
  }
  label(state);
}

void BM_ScaStarts(benchmark::State& state) {
  std::vector<Matrix> blocks;
  for (const auto& b : dataset().data.blocks()) blocks.push_back(b.values);
  ScaOptions o;
  o.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pf2(blocks, 4, o, 7).sse);
  label(state);
}

void BM_Experiment(benchmark::State& state) {
  SimulationConfig cfg;
  cfg.d = 40;
  cfg.T = 100;
  cfg.K = 3;
  ExperimentOptions eo;
  eo.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment({cfg}, eo, 4, 9).outcomes.size());
  label(state);
}

}  // namespace

BENCHMARK(BM_RotationalBootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SegmentationThresholds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScaStarts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Experiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
