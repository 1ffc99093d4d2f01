#include <gtest/gtest.h>

#include <cmath>

#include "pamlab/chaos.hpp"
#include "pamlab/error.hpp"
#include "pamlab/quadrature.hpp"

using namespace pamlab;

namespace {

// gamma ~ 1 on the relevant scale: wide bump rescaled to unit height
CovarianceSpec nearly_constant(int dim) {
  auto s = CovarianceSpec::gaussian_bump(dim).with_epsilon(1e7);
  s.amplitude = std::pow(1.0 + 8e7, 0.5 * dim);
  return s;
}

}  // namespace

TEST(Chaos, OrderZeroIsMeanSquared) {
  Measure u0;
  u0.atoms = {{{0.0}, 2.0}, {{1.0}, 3.0}};
  u0.support_radius = 1.0;
  const double x[] = {0.0};
  const auto r = chaos_second_moment(CovarianceSpec::gaussian_bump(1), u0, 1.0, x, 0);
  EXPECT_NEAR(r.value, 1.523797 * 1.523797, 1e-5);
  EXPECT_NEAR(r.value, std::pow(heat_convolve_measure(1.0, u0, x), 2), 1e-13);
}

TEST(Chaos, FirstOrderMatchesBridgeIntegral) {
  // same start and end: the two bridge points share mean, their difference has
  // variance 2 s(t-s)/t, and E exp(-D^2) = (1 + 4 s(t-s)/t)^{-1/2}
  const double t = 0.7;
  const double x[] = {0.4};
  const auto u0 = Measure::dirac({0.4});
  const auto r = chaos_second_moment(CovarianceSpec::gaussian_bump(1), u0, t, x, 1, {20, false});
  const auto q = integrate([&](double s) { return 1.0 / std::sqrt(1.0 + 4.0 * s * (t - s) / t); }, 0.0, t);
  EXPECT_NEAR(r.terms[1], std::pow(heat_kernel_1d(t, 0.0), 2) * q.value, 1e-10);
}

TEST(Chaos, FirstOrderOffDiagonal) {
  // endpoints differ: bridge means still coincide, so the same integral applies
  const double t = 0.5;
  const double x[] = {1.1};
  const auto u0 = Measure::dirac({-0.3});
  const auto r = chaos_second_moment(CovarianceSpec::gaussian_bump(1).with_epsilon(0.1), u0, t, x, 1, {20, false});
  const double w = 1.8;
  const auto q = integrate([&](double s) { return 1.0 / std::sqrt(1.0 + 4.0 * s * (t - s) / (t * w)); }, 0.0, t);
  EXPECT_NEAR(r.terms[1], std::pow(heat_kernel_1d(t, 1.4), 2) * q.value / std::sqrt(w), 1e-10);
}

TEST(Chaos, ConstantKernelLimit) {
  // gamma = 1 gives u = p_t*u0 exp(W - t/2) and k-th term t^k/k! (p_t*u0)^2
  Measure u0;
  u0.atoms = {{{0.0}, 1.0}, {{0.5}, 0.5}};
  u0.support_radius = 0.5;
  const double t = 0.6;
  const double x[] = {0.2};
  const auto r = chaos_second_moment(nearly_constant(1), u0, t, x, 3, {20, false});
  const double m2 = std::pow(heat_convolve_measure(t, u0, x), 2);
  double fact = 1.0;
  for (int k = 0; k <= 3; ++k) {
    if (k > 0) fact *= k;
    EXPECT_NEAR(r.terms[k], m2 * std::pow(t, k) / fact, 1e-6 * m2) << k;
  }
}

TEST(Chaos, ConstantKernelLimitTwoDimensions) {
  const double t = 0.3;
  const double x[] = {0.1, -0.2};
  const auto u0 = Measure::dirac({0.0, 0.0});
  const auto r = chaos_second_moment(nearly_constant(2), u0, t, x, 2, {16, false});
  const double m2 = std::pow(heat_convolve_measure(t, u0, x), 2);
  EXPECT_NEAR(r.terms[2], m2 * t * t / 2.0, 1e-6 * m2);
}

TEST(Chaos, SmallTimeConverges) {
  const double x[] = {0.0};
  const auto u0 = Measure::dirac({0.0});
  const auto r = chaos_second_moment(CovarianceSpec::gaussian_bump(1), u0, 0.1, x, 3);
  EXPECT_LT(r.truncation_bound, 1e-3);
  // quadrature converged in the node count
  const auto fine = chaos_second_moment(CovarianceSpec::gaussian_bump(1), u0, 0.1, x, 3, {32, true});
  EXPECT_NEAR(r.value, fine.value, 1e-10 * fine.value);
  // the terms lie below the constant-kernel bound gamma <= gamma(0)
  const double m2 = std::pow(heat_kernel_1d(0.1, 0.0), 2);
  EXPECT_LT(r.terms[2], m2 * 0.01 / 2.0);
  EXPECT_GT(r.terms[2], 0.0);
}

TEST(Chaos, TruncationFlagged) {
  auto spec = CovarianceSpec::gaussian_bump(1);
  spec.amplitude = 40.0;
  const double x[] = {0.0};
  try {
    chaos_second_moment(spec, Measure::dirac({0.0}), 1.0, x, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationUnreliable);
  }
}

TEST(Chaos, RejectsSingularKernels) {
  const double x[] = {0.0};
  EXPECT_THROW(chaos_second_moment(CovarianceSpec::riesz(0.5, 1, 0.1), Measure::dirac({0.0}), 1.0, x, 2), Error);
  EXPECT_THROW(chaos_second_moment(CovarianceSpec::white(), Measure::dirac({0.0}), 1.0, x, 2), Error);
  EXPECT_THROW(chaos_second_moment(CovarianceSpec::gaussian_bump(1), Measure::dirac({0.0}), 1.0, x, 4), Error);
}
