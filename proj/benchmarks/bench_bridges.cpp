#include <benchmark/benchmark.h>

#include <vector>

#include "pamlab/bridges.hpp"
#include "pamlab/chaos.hpp"

using namespace pamlab;

static void BM_FkSecondMoment(benchmark::State& state) {
  FKOptions o;
  o.replicas = static_cast<std::size_t>(state.range(0));
  o.steps = 128;
  const std::vector<Point> targets{{0.0}, {0.0}};
  const auto u0 = Measure::dirac({0.0});
  for (auto _ : state) {
    auto e = fk_moment_estimate(CovarianceSpec::gaussian_bump(1), 0.5, targets, u0, o);
    benchmark::DoNotOptimize(e.value);
    ++o.seed;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FkSecondMoment)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Theta(benchmark::State& state) {
  FKOptions o;
  o.replicas = 2000;
  o.steps = 64;
  for (auto _ : state) {
    auto th = theta_estimate(CovarianceSpec::gaussian_bump(1), 1.0, static_cast<int>(state.range(0)), o);
    benchmark::DoNotOptimize(th.best.log_value);
    ++o.seed;
  }
}
BENCHMARK(BM_Theta)->DenseRange(2, 6, 2)->Unit(benchmark::kMillisecond);

static void BM_ChaosThirdOrder(benchmark::State& state) {
  const auto u0 = Measure::dirac({0.0});
  const std::vector<double> x{0.0};
  ChaosOptions o;
  o.nodes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto c = chaos_second_moment(CovarianceSpec::gaussian_bump(1), u0, 0.5, x, 3, o);
    benchmark::DoNotOptimize(c.value);
  }
}
BENCHMARK(BM_ChaosThirdOrder)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);
