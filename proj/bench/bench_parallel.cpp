// Serial reference against the OpenMP path for the three parallel kernels.
// Argument 0 runs the serial loop, 1 the OpenMP loop.

#include <benchmark/benchmark.h>

#include <string>

#include "daps/harness.hpp"
#include "daps/metrics.hpp"
#include "daps/oracle.hpp"

using namespace daps;

namespace {

Exec exec_of(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  state.SetLabel(parallel ? "openmp x" + std::to_string(max_threads()) : "serial");
  return parallel ? Exec::kParallel : Exec::kSerial;
}

void BM_chains(benchmark::State& state) {
  const Exec exec = exec_of(state);
  auto cfg = ExperimentConfig::parse(preset_text("appendix_e_daps"));
  cfg.run.n_chains = 32;
  cfg.sampler.n_anneal = 50;
  cfg.oracle.kind = "none";
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg, exec));
}

void BM_distance_matrix(benchmark::State& state) {
  const Exec exec = exec_of(state);
  Rng rng(1);
  const Mat a = Mat::NullaryExpr(1000, 8, [&]() { return std::normal_distribution<double>()(rng); });
  const Mat b = Mat::NullaryExpr(1000, 8, [&]() { return std::normal_distribution<double>()(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(squared_distances(a, b, exec));
}

void BM_grid_oracle(benchmark::State& state) {
  const Exec exec = exec_of(state);
  const auto prior = GaussianMixture::diagonal({0.5, 0.5}, {Eigen::Vector2d(-0.3, -0.4), Eigen::Vector2d(0.6, 0.5)},
                                               {Eigen::Vector2d(0.01, 0.04), Eigen::Vector2d(0.01, 0.04)});
  const auto op = make_gauss_bumps2d(0.05, 1.0);
  const Measurement meas{Vec::Zero(1), 0.0, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(Grid2dOracle(prior, *op, meas, {}, 400, exec));
}

}  // namespace

BENCHMARK(BM_chains)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_distance_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_grid_oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
