#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pamlab/asymptotics.hpp"
#include "pamlab/error.hpp"
#include "pamlab/rng.hpp"

using namespace pamlab;

namespace {

PeakSeries synthetic(double lambda, double a, double c, double noise, std::uint32_t seed) {
  PeakSeries s;
  Stream rng({seed, Purpose::Synthetic, 0, 0});
  for (double R : exponential_radii(1, 8)) s.entries.push_back({R, lambda * std::pow(std::log(R), a) + c + noise * rng.normal(), 0});
  return s;
}

SpaceTimeGrid grid1(int n, double dx, double dt, double t_end) {
  SpaceTimeGrid g;
  g.points = n;
  g.spacing = dx;
  g.dt = dt;
  g.t_end = t_end;
  return g;
}

}  // namespace

TEST(Growth, ExactRecovery) {
  const std::vector<PeakSeries> s{synthetic(2.0, 0.5, 0.3, 0.0, 1)};
  const auto f = fit_growth(s, 0.5);
  EXPECT_NEAR(f.slope, 2.0, 1e-9);
  EXPECT_NEAR(f.intercept, 0.3, 1e-9);
  EXPECT_FALSE(f.nonlinear);
}

TEST(Growth, NoisyRecoveryWithinHalfWidth) {
  int covered = 0;
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const std::vector<PeakSeries> s{synthetic(2.0, 0.5, 0.3, 0.01, seed)};
    const auto f = fit_growth(s, 0.5);
    covered += std::abs(f.slope - 2.0) <= f.half_width;
  }
  EXPECT_GE(covered, 16);
  int groups = 0;
  for (std::uint32_t g = 0; g < 20; ++g) {
    std::vector<PeakSeries> reps;
    for (std::uint32_t seed = 0; seed < 10; ++seed) reps.push_back(synthetic(2.0, 0.5, 0.3, 0.01, 100 + 10 * g + seed));
    const auto f = fit_growth(reps, 0.5);
    EXPECT_EQ(f.replicates, 10u);
    groups += std::abs(f.slope - 2.0) <= f.half_width;
  }
  EXPECT_GE(groups, 16);
}

TEST(Growth, MismatchedExponentFlagged) {
  const std::vector<PeakSeries> s{synthetic(2.0, 0.5, 0.0, 0.0, 1)};
  // sqrt is curved against log R only mildly; a strongly mismatched power shows it
  const auto f = fit_growth(s, 3.0);
  EXPECT_TRUE(f.nonlinear);
  EXPECT_THROW(fit_growth(std::vector<PeakSeries>{PeakSeries{}}, 0.5), Error);
}

TEST(MomentGrowth, ExactScaling) {
  for (double alpha : {0.0, 1.0}) {
    const double p = (4.0 - alpha) / (2.0 - alpha);
    std::vector<MomentPoint> pts;
    for (int m = 2; m <= 6; ++m) pts.push_back({m, 0.37 * std::pow(m, p), 0.01});
    const auto f = moment_growth_fit(pts, alpha);
    EXPECT_NEAR(f.p, p, 1e-9);
    EXPECT_NEAR(f.coefficient, 0.37, 1e-9);
    EXPECT_EQ(f.target_p, p);
  }
  std::vector<MomentPoint> two{{2, 1.0, 0.1}, {3, 2.0, 0.1}, {3, 2.1, 0.1}};
  EXPECT_THROW(moment_growth_fit(two, 0.0), Error);
}

TEST(Holder, SmoothCalibration) {
  std::vector<std::vector<double>> s;
  for (int r = 0; r < 16; ++r) {
    std::vector<double> v(2000);
    for (int i = 0; i < 2000; ++i) v[i] = std::sin(0.001 * i + 0.3 * r);
    s.push_back(v);
  }
  const std::vector<int> lags{1, 4, 16, 64};
  const auto f = holder_from_samples(s, 0.001, lags);
  EXPECT_NEAR(f.eta, 1.0, 0.05);
}

TEST(Holder, BrownianPaths) {
  std::vector<std::vector<double>> s;
  for (std::uint32_t r = 0; r < 16; ++r) {
    Stream rng({5, Purpose::Synthetic, r, 0});
    std::vector<double> v(4000, 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + std::sqrt(0.01) * rng.normal();
    s.push_back(v);
  }
  const std::vector<int> lags{1, 3, 10, 32, 100};
  const auto f = holder_from_samples(s, 0.01, lags);
  EXPECT_NEAR(f.eta, 0.5, 0.1);
  EXPECT_FALSE(f.saturated);
  const std::vector<int> narrow{1, 2, 4};
  EXPECT_THROW(holder_from_samples(s, 0.01, narrow), Error);
  std::vector<std::vector<double>> few(s.begin(), s.begin() + 8);
  try {
    holder_from_samples(few, 0.01, lags);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewReplicates);
  }
}

TEST(Holder, RatioFieldExponentInUnitInterval) {
  const auto grid = grid1(512, 0.05, 0.01, 0.5);
  RatioOptions o;
  o.radius = 8.0;
  o.audit_bias = false;
  o.window_cells = 512;
  std::vector<RatioField> fields;
  for (std::uint32_t r = 0; r < 16; ++r)
    fields.push_back(ratio_field({0.0}, CovarianceSpec::riesz(0.5, 1, 0.01), grid, {31, Purpose::Noise, r}, 0.5, 0.0, o));
  const std::vector<int> lags{1, 3, 10, 32};
  const auto f = holder_estimate(fields, lags);
  EXPECT_GT(f.eta, 0.0);
  EXPECT_LT(f.eta, 1.2);
}

TEST(Peaks, ZeroNoiseIsFlat) {
  const auto grid = grid1(1024, 0.1, 0.02, 1.0);
  RatioOptions o;
  o.zero_noise = true;
  o.radius = 40.0;
  const auto k = ratio_field({0.0}, CovarianceSpec::gaussian_bump(1), grid, {1}, 1.0, 0.0, o);
  const auto radii = exponential_radii(1, 3);
  const auto s = peak_series(k, radii);
  for (const auto& e : s.entries) EXPECT_NEAR(e.statistic, 0.0, 1e-6);

  SolverOptions so;
  so.zero_noise = true;
  Measure u0;
  u0.atoms = {{{0.0}, 1.0}, {{0.4}, 2.0}};
  u0.support_radius = 0.4;
  const auto st = evolve_mild(u0, CovarianceSpec::gaussian_bump(1), grid, {1}, 1.0, so);
  const std::vector<double> r{1.0, 5.0, 10.0};
  const auto ps = peak_series(st, u0, r);
  for (const auto& e : ps.entries) EXPECT_NEAR(e.statistic, 0.0, 1e-5);
  EXPECT_EQ(ps.entries[0].excluded, 0u);
  EXPECT_GT(ps.entries[2].excluded, 0u);
}

TEST(Peaks, NestedMonotone) {
  const auto grid = grid1(2048, 0.1, 0.02, 1.0);
  RatioOptions o;
  o.radius = 100.0;
  o.audit_bias = false;
  const auto k = ratio_field({0.0}, CovarianceSpec::gaussian_bump(1), grid, {2}, 1.0, 0.0, o);
  const auto s = peak_series(k, exponential_radii(0, 4));
  for (std::size_t i = 1; i < s.entries.size(); ++i) EXPECT_GE(s.entries[i].statistic, s.entries[i - 1].statistic);
  const std::vector<double> too_far{500.0};
  EXPECT_THROW(peak_series(k, too_far), Error);
}

TEST(Peaks, AllSitesNonpositive) {
  FieldState st;
  st.grid = grid1(64, 0.1, 0.01, 0.1);
  st.t = 0.1;
  st.values.assign(64, -1.0);
  const std::vector<double> r{1.0};
  try {
    peak_series(st, Measure::dirac({0.0}), r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AllSitesNonpositive);
  }
}

TEST(BoundAudit, ManualCases) {
  FKEstimate lhs, rhs;
  lhs.value = 1.0;
  rhs.value = 1.0;
  EXPECT_TRUE(bound_audit(lhs, rhs).passed);  // m = 1: both sides trivially one
  lhs.value = 1.2;
  lhs.standard_error = 0.01;
  rhs.standard_error = 0.01;
  try {
    bound_audit(lhs, rhs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BoundViolated);
  }
}

TEST(BoundAudit, CoincidentNearEquality) {
  FKOptions o;
  o.replicas = 4000;
  o.steps = 32;
  o.seed = 3;
  const auto suite = standard_bound_suite();
  EXPECT_EQ(suite.size(), 10u);
  const auto r = run_bound_case(suite[0], o);
  EXPECT_TRUE(r.audit.passed);
  EXPECT_LT(std::abs(r.audit.slack_sigmas), 4.0);
  const auto shifted = run_bound_case(suite[1], o);
  EXPECT_GT(shifted.audit.slack, 0.0);
}
