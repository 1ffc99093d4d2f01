#include <benchmark/benchmark.h>

#include <vector>

#include "pamlab/noise.hpp"

using namespace pamlab;

static void BM_SynthesizeGaussianBump(benchmark::State& state) {
  SpaceTimeGrid g;
  g.points = static_cast<int>(state.range(0));
  g.spacing = 0.1;
  g.dt = 0.01;
  g.t_end = 0.01;
  NoiseSynthesizer synth(CovarianceSpec::gaussian_bump(1), g);
  std::vector<double> out(g.sites());
  std::uint32_t step = 0;
  for (auto _ : state) {
    synth.synthesize_into({1, Purpose::Noise, 0, step++}, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthesizeGaussianBump)->RangeMultiplier(4)->Range(256, 65536);

static void BM_SynthesizeWhite(benchmark::State& state) {
  SpaceTimeGrid g;
  g.points = static_cast<int>(state.range(0));
  g.spacing = 0.1;
  g.dt = 0.01;
  g.t_end = 0.01;
  NoiseSynthesizer synth(CovarianceSpec::white(), g);
  std::vector<double> out(g.sites());
  std::uint32_t step = 0;
  for (auto _ : state) {
    synth.synthesize_into({1, Purpose::Noise, 0, step++}, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthesizeWhite)->RangeMultiplier(4)->Range(256, 65536);
