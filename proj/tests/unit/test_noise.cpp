#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "pamlab/error.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/stats.hpp"

using namespace pamlab;

namespace {

SpaceTimeGrid make_grid(int points, double dx, double dt) {
  SpaceTimeGrid g;
  g.points = points;
  g.spacing = dx;
  g.dt = dt;
  g.t_end = dt;
  return g;
}

std::vector<NoiseSlice> slices_for(const CovarianceSpec& spec, const SpaceTimeGrid& grid, int count, std::uint64_t seed) {
  NoiseSynthesizer synth(spec, grid);
  std::vector<NoiseSlice> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synth.synthesize({seed, Purpose::Noise, 0, static_cast<std::uint32_t>(i)}));
  return out;
}

}  // namespace

TEST(Noise, WhitePerSiteVariance) {
  const auto grid = make_grid(16, 0.1, 0.01);
  NoiseSynthesizer synth(CovarianceSpec::white(), grid);
  EXPECT_DOUBLE_EQ(synth.site_variance(), 0.1);
  std::vector<double> sq;
  std::vector<double> buf(grid.sites());
  for (int i = 0; i < 100000; ++i) {
    synth.synthesize_into({3, Purpose::Noise, 0, static_cast<std::uint32_t>(i)}, buf);
    sq.push_back(buf[5] * buf[5]);
  }
  const auto e = batch_mean(sq, 50);
  EXPECT_NEAR(e.mean, 0.1, 3.0 * e.standard_error);
}

TEST(Noise, GaussianBumpLagCovariance) {
  const auto grid = make_grid(256, 0.1, 0.01);
  const auto slices = slices_for(CovarianceSpec::gaussian_bump(1), grid, 10000, 11);
  const std::vector<Point> lags{{0.0}, {0.5}, {1.0}, {2.0}};
  const auto cov = empirical_covariance(slices, lags);
  for (const auto& c : cov) {
    const double target = std::exp(-c.lag[0] * c.lag[0]) * grid.dt;
    EXPECT_NEAR(c.estimate, target, 3.0 * c.standard_error) << c.lag[0];
  }
}

TEST(Noise, RieszMollifiedLagOne) {
  const auto spec = CovarianceSpec::riesz(0.5, 1, 0.05);
  const auto grid = make_grid(4096, 0.05, 0.01);
  const auto slices = slices_for(spec, grid, 400, 12);
  const std::vector<Point> lags{{1.0}};
  const auto cov = empirical_covariance(slices, lags, 40);
  const double target = gamma_eval(spec, 1.0) * grid.dt;
  EXPECT_NEAR(cov[0].estimate, target, 3.0 * cov[0].standard_error);
}

TEST(Noise, MollifyIdentityLimit) {
  const auto grid = make_grid(128, 0.1, 0.01);
  const auto s = synthesize_slice(CovarianceSpec::gaussian_bump(1), grid, {1, Purpose::Noise, 0, 0});
  const auto m = mollify_slice(s, 1e-12);
  for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_NEAR(m.values[i], s.values[i], 1e-9);
}

TEST(Noise, MollifyComposition) {
  const auto grid = make_grid(128, 0.1, 0.01);
  const auto s = synthesize_slice(CovarianceSpec::white(), grid, {1, Purpose::Noise, 0, 0});
  const auto twice = mollify_slice(mollify_slice(s, 0.07), 0.07);
  const auto once = mollify_slice(s, 0.14);
  for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_NEAR(twice.values[i], once.values[i], 1e-10);
  EXPECT_DOUBLE_EQ(twice.spec.epsilon, once.spec.epsilon);
}

TEST(Noise, MollifiedWhiteCovariance) {
  const auto grid = make_grid(256, 0.1, 0.01);
  auto slices = slices_for(CovarianceSpec::white(), grid, 4000, 21);
  for (auto& s : slices) s = mollify_slice(s, 0.1);
  const std::vector<Point> lags{{0.0}, {0.3}, {0.6}};
  for (const auto& c : empirical_covariance(slices, lags)) {
    EXPECT_NEAR(c.estimate, heat_kernel_1d(0.2, c.lag[0]) * grid.dt, 3.0 * c.standard_error) << c.lag[0];
  }
  // the tag follows the gamma_eps convention: white with eps = 0.05 is p_{0.2}
  EXPECT_NEAR(gamma_eval(slices[0].spec, 0.3), heat_kernel_1d(0.2, 0.3), 1e-15);
}

TEST(Noise, EmpiricalCovarianceContracts) {
  const auto grid = make_grid(64, 0.1, 1.0 / 64.0);
  std::vector<NoiseSlice> slices;
  Stream st({4, Purpose::Synthetic, 0, 0});
  for (int i = 0; i < 500; ++i) {
    NoiseSlice s;
    s.points = 64;
    s.spacing = 0.1;
    s.values.resize(64);
    st.fill_normal(s.values);
    slices.push_back(std::move(s));
  }
  const std::vector<Point> zero{{0.0}};
  const auto c = empirical_covariance(slices, zero);
  EXPECT_NEAR(c[0].estimate, 1.0, 3.0 * c[0].standard_error);
  const std::vector<Point> far{{3.3}};
  try {
    empirical_covariance(slices, far);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LagOutOfRange);
  }
  std::span<const NoiseSlice> few(slices.data(), 50);
  EXPECT_THROW(empirical_covariance(few, zero), Error);
}

TEST(Noise, Deterministic) {
  const auto grid = make_grid(128, 0.1, 0.01);
  const auto spec = CovarianceSpec::riesz(0.5, 1, 0.1);
  const auto a = synthesize_slice(spec, grid, {77, Purpose::Noise, 2, 9});
  const auto b = synthesize_slice(spec, grid, {77, Purpose::Noise, 2, 9});
  EXPECT_EQ(a.values, b.values);
}

TEST(Noise, WhiteInTime) {
  const auto grid = make_grid(64, 0.1, 0.01);
  NoiseSynthesizer synth(CovarianceSpec::gaussian_bump(1), grid);
  std::vector<double> prod;
  for (int i = 0; i < 10000; ++i) {
    const auto a = synth.synthesize({8, Purpose::Noise, 0, static_cast<std::uint32_t>(2 * i)});
    const auto b = synth.synthesize({8, Purpose::Noise, 0, static_cast<std::uint32_t>(2 * i + 1)});
    prod.push_back(a.values[10] * b.values[10]);
  }
  const auto e = batch_mean(prod, 50);
  EXPECT_NEAR(e.mean, 0.0, 3.0 * e.standard_error);
}

TEST(Noise, Stationary) {
  const auto grid = make_grid(64, 0.1, 0.01);
  NoiseSynthesizer synth(CovarianceSpec::gaussian_bump(1), grid);
  std::vector<std::vector<double>> per_base(3);
  const int bases[3] = {3, 30, 50};
  for (int i = 0; i < 8000; ++i) {
    const auto s = synth.synthesize({9, Purpose::Noise, 0, static_cast<std::uint32_t>(i)});
    for (int b = 0; b < 3; ++b) per_base[b].push_back(s.values[bases[b]] * s.values[bases[b] + 5]);
  }
  const double target = std::exp(-0.25) * grid.dt;
  for (int b = 0; b < 3; ++b) {
    const auto e = batch_mean(per_base[b], 40);
    EXPECT_NEAR(e.mean, target, 3.0 * e.standard_error);
  }
}

TEST(Noise, GridTooCoarse) {
  const auto grid = make_grid(16, 1.5, 0.01);
  try {
    NoiseSynthesizer synth(CovarianceSpec::gaussian_bump(1), grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridTooCoarse);
  }
}

TEST(Noise, RieszNeedsMollification) {
  const auto grid = make_grid(64, 0.1, 0.01);
  EXPECT_THROW(NoiseSynthesizer(CovarianceSpec::riesz(0.5, 1), grid), Error);
}

TEST(Noise, WeightsNonnegative) {
  const auto grid = make_grid(256, 0.05, 0.01);
  NoiseSynthesizer synth(CovarianceSpec::riesz(0.5, 1, 0.02), grid);
  for (double w : synth.weights()) EXPECT_GE(w, 0.0);
}

TEST(Noise, TwoDimensionalVariance) {
  SpaceTimeGrid grid;
  grid.dim = 2;
  grid.points = 64;
  grid.spacing = 0.2;
  grid.dt = 0.01;
  grid.t_end = 0.01;
  const auto slices = slices_for(CovarianceSpec::gaussian_bump(2), grid, 400, 5);
  const std::vector<Point> lags{{0.0, 0.0}, {0.4, 0.6}};
  for (const auto& c : empirical_covariance(slices, lags)) {
    const double r2 = c.lag[0] * c.lag[0] + c.lag[1] * c.lag[1];
    EXPECT_NEAR(c.estimate, std::exp(-r2) * grid.dt, 3.0 * c.standard_error);
  }
}

TEST(Noise, BinaryRoundTrip) {
  const auto grid = make_grid(32, 0.1, 0.01);
  const auto s = synthesize_slice(CovarianceSpec::gaussian_bump(1), grid, {5, Purpose::Noise, 1, 3});
  const std::string path = ::testing::TempDir() + "slice.bin";
  write_slice(path, s);
  const auto r = read_slice(path);
  EXPECT_EQ(r.values, s.values);
  EXPECT_EQ(r.step, 3u);
  EXPECT_EQ(r.stream.seed, 5u);
  std::remove(path.c_str());
}
