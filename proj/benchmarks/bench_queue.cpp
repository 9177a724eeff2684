#include <benchmark/benchmark.h>

#include "spectrum_queue/analytic.hpp"
#include "spectrum_queue/oracle.hpp"
#include "spectrum_queue/sim.hpp"

namespace {

using namespace spectrum_queue;

const SystemParams kPaper{7.0, 0.5, 3.0, 2.0, 2.0, 3.0};

void BM_GeometricRoot(benchmark::State& state) {
  double q = 0.0;
  for (auto _ : state) {
    q = q < 1.0 - 1e-6 ? q + 1e-6 : 0.0;
    benchmark::DoNotOptimize(analytic::geometric_root(kPaper, q));
  }
}
BENCHMARK(BM_GeometricRoot);

void BM_IndividualEquilibrium(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic::individual_equilibrium(kPaper));
  }
}
BENCHMARK(BM_IndividualEquilibrium);

void BM_SocialOptimumClosedForm(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic::social_optimum(kPaper));
  }
}
BENCHMARK(BM_SocialOptimumClosedForm);

void BM_SocialOptimumGoldenSection(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::numeric_social_optimum(kPaper));
  }
}
BENCHMARK(BM_SocialOptimumGoldenSection);

void BM_OptimalPrice(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic::optimal_price(kPaper));
  }
}
BENCHMARK(BM_OptimalPrice);

void BM_StationarySolve(benchmark::State& state) {
  const int truncation = static_cast<int>(state.range(0));
  const auto gen = oracle::build_generator(kPaper, 1.0, truncation);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::solve_stationary(gen));
  }
}
// The elimination is O(N); the post-solve residual sweep over the dense
// matrix dominates at O(N^2).
BENCHMARK(BM_StationarySolve)->Arg(64)->Arg(256)->Arg(1024)->Arg(4096);

void BM_BuildGenerator(benchmark::State& state) {
  const int truncation = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        oracle::build_generator(kPaper, 1.0, truncation));
  }
}
BENCHMARK(BM_BuildGenerator)->Arg(256)->Arg(1024);

void BM_Simulate(benchmark::State& state) {
  sim::SimConfig config;
  config.params = kPaper;
  config.strategy.q = 1.0;
  config.max_events = static_cast<std::uint64_t>(state.range(0));
  config.seed = 12345;
  std::uint64_t events = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::simulate(config));
    events += *config.max_events;
  }
  state.counters["events/s"] =
      benchmark::Counter(static_cast<double>(events),
                         benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000);

void BM_SweepPoint(benchmark::State& state) {
  // One full sweep row: both equilibria, both welfares and the fee.
  SystemParams p = kPaper;
  double reward = 0.1;
  for (auto _ : state) {
    reward = reward < 70.0 ? reward + 0.01 : 0.1;
    p.reward = reward;
    const auto individual = analytic::individual_equilibrium(p);
    const auto social = analytic::social_optimum(p);
    benchmark::DoNotOptimize(analytic::social_welfare(p, individual.q_star));
    benchmark::DoNotOptimize(analytic::social_welfare(p, social.q_star));
    benchmark::DoNotOptimize(analytic::optimal_price(p));
  }
}
BENCHMARK(BM_SweepPoint);

}  // namespace

BENCHMARK_MAIN();
