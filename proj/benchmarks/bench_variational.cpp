#include <benchmark/benchmark.h>

#include "pamlab/variational.hpp"

using namespace pamlab;

static void BM_HartreeDelta(benchmark::State& state) {
  VariationalGrid g;
  g.points = static_cast<int>(state.range(0));
  g.extent = 40.0;
  VariationalOptions o;
  o.restarts = 1;
  for (auto _ : state) {
    auto r = hartree_energy(CovarianceSpec::white(), g, o);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_HartreeDelta)->Arg(512)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_HartreeRiesz(benchmark::State& state) {
  VariationalGrid g;
  g.points = 1024;
  g.extent = 40.0;
  VariationalOptions o;
  o.restarts = 1;
  for (auto _ : state) {
    auto r = hartree_energy(CovarianceSpec::riesz(0.5, 1), g, o);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_HartreeRiesz)->Unit(benchmark::kMillisecond);
