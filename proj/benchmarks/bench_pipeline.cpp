#include <benchmark/benchmark.h>

#include <numbers>

#include "doaloc/estimation.hpp"
#include "doaloc/linear_system.hpp"
#include "doaloc/sdp_relaxation.hpp"
#include "doaloc/sim_harness.hpp"

namespace {

doaloc::MeasurementSet noisy_set(int k) {
  doaloc::TrajectoryConfig cfg;
  cfg.seed = 42;
  cfg.k_max = k;
  const doaloc::Scenario sc = doaloc::make_scenario(cfg, doaloc::sample_truth(7));
  return doaloc::add_noise(sc.noiseless, {std::numbers::pi / 180.0, 3});
}

void BM_SolveRelaxed(benchmark::State& state) {
  const auto ms = noisy_set(static_cast<int>(state.range(0)));
  const auto problem = doaloc::build_problem(doaloc::assemble(ms, doaloc::default_scale(ms)));
  for (auto _ : state) benchmark::DoNotOptimize(doaloc::solve_relaxed(problem));
}
BENCHMARK(BM_SolveRelaxed)->Arg(4)->Arg(6)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SdpO(benchmark::State& state) {
  const auto ms = noisy_set(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(doaloc::estimate_sdp_o(ms));
}
BENCHMARK(BM_SdpO)->Arg(6)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_LsO(benchmark::State& state) {
  const auto ms = noisy_set(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(doaloc::estimate_ls_o(ms));
}
BENCHMARK(BM_LsO)->Arg(6)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_RefineMle(benchmark::State& state) {
  const auto ms = noisy_set(8);
  const auto init = doaloc::estimate_sdp_o(ms);
  for (auto _ : state) benchmark::DoNotOptimize(doaloc::refine_mle(ms, init));
}
BENCHMARK(BM_RefineMle)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
