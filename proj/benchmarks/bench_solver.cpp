#include <benchmark/benchmark.h>

#include "pamlab/solver.hpp"

using namespace pamlab;

static void BM_EvolveMild(benchmark::State& state) {
  SpaceTimeGrid g;
  g.points = static_cast<int>(state.range(0));
  g.spacing = 0.05;
  g.dt = 0.005;
  g.t_end = 0.5;
  MildSolver solver(CovarianceSpec::gaussian_bump(1), g);
  const auto u0 = Measure::dirac({0.0});
  std::uint32_t r = 0;
  for (auto _ : state) {
    auto f = solver.evolve(u0, {7, Purpose::Noise, r++, 0}, 0.5);
    benchmark::DoNotOptimize(f.values.data());
  }
}
BENCHMARK(BM_EvolveMild)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_RatioField(benchmark::State& state) {
  SpaceTimeGrid g;
  g.points = static_cast<int>(state.range(0));
  g.spacing = 0.1;
  g.dt = 0.02;
  g.t_end = 1.0;
  RatioOptions o;
  o.audit_bias = false;
  std::uint32_t r = 0;
  for (auto _ : state) {
    auto f = ratio_field({0.0}, CovarianceSpec::gaussian_bump(1), g, {3, Purpose::Noise, r++, 0}, 1.0, -1.0, o);
    benchmark::DoNotOptimize(f.values.data());
  }
}
BENCHMARK(BM_RatioField)->Arg(4096)->Arg(65536)->Unit(benchmark::kMillisecond);
