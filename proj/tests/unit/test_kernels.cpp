#include <gtest/gtest.h>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_eigen.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_sf_hyperg.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pamlab/error.hpp"
#include "pamlab/kernels.hpp"

using namespace pamlab;

namespace {

constexpr double kPi = std::numbers::pi;

// |.|^{-eta} * p_{4 eps}: Gaussian average of a Riesz kernel (Kummer form).
double riesz_mollified_oracle(double eta, int dim, double eps, double r) {
  const double var = 4.0 * eps;
  return std::pow(2.0 * var, -0.5 * eta) * std::tgamma(0.5 * (dim - eta)) / std::tgamma(0.5 * dim) *
         gsl_sf_hyperg_1F1(0.5 * eta, 0.5 * dim, -r * r / (2.0 * var));
}

double riesz_constant_oracle(double eta, int dim) {
  return std::pow(kPi, 0.5 * dim) * std::pow(2.0, dim - eta) * std::tgamma(0.5 * (dim - eta)) / std::tgamma(0.5 * eta);
}

}  // namespace

TEST(Kernels, RieszConstantMatchesClosedForm) {
  for (auto [eta, dim] : std::vector<std::pair<double, int>>{{0.5, 1}, {0.25, 1}, {1.0, 2}, {1.5, 2}, {1.99, 2}, {1.2, 3}}) {
    EXPECT_NEAR(riesz_constant(eta, dim) / riesz_constant_oracle(eta, dim), 1.0, 1e-9) << eta << " " << dim;
  }
}

TEST(Kernels, RieszUnmollified) {
  const auto s = CovarianceSpec::riesz(1.0, 2);
  const double x[2] = {2.0, 0.0};
  EXPECT_DOUBLE_EQ(gamma_eval(s, x), 0.5);
  const double zero[2] = {0.0, 0.0};
  EXPECT_THROW(gamma_eval(s, zero), Error);
}

TEST(Kernels, RieszEtaEqualsDimOneIsInvalid) {
  const auto s = CovarianceSpec::riesz(1.0, 1);
  try {
    gamma_eval(s, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
  }
  const auto bad = CovarianceSpec::riesz(1.2, 1);
  EXPECT_THROW(dalang_value(bad), Error);
}

TEST(Kernels, GaussianBumpAtOrigin) {
  const auto s = CovarianceSpec::gaussian_bump(1);
  EXPECT_DOUBLE_EQ(gamma_eval(s, 0.0), 1.0);
  EXPECT_NEAR(gamma_eval(s, 1.5), std::exp(-2.25), 1e-15);
}

TEST(Kernels, GaussianBumpMollifiedMatchesQuadrature) {
  // Closed form vs. direct Fourier quadrature of mu * exp(-2 eps xi^2).
  for (int dim : {1, 2}) {
    auto s = CovarianceSpec::gaussian_bump(dim);
    s.epsilon = 0.3;
    for (double r : {0.0, 0.7, 2.0}) {
      const double q = radial_fourier([&](double p) { return spectral_density(s, p); }, dim, r, 40.0);
      EXPECT_NEAR(gamma_eval(s, r), q, 1e-8) << dim << " " << r;
    }
  }
}

TEST(Kernels, RieszMollifiedMatchesKummer) {
  for (auto [eta, dim] : std::vector<std::pair<double, int>>{{0.5, 1}, {0.8, 1}, {1.0, 2}, {1.5, 2}}) {
    for (double eps : {0.05, 0.25, 1.0}) {
      const auto s = CovarianceSpec::riesz(eta, dim, eps);
      for (double r : {0.0, 0.3, 1.0, 2.5, 6.0}) {
        const double oracle = riesz_mollified_oracle(eta, dim, eps, r);
        EXPECT_NEAR(gamma_eval(s, r), oracle, 1e-7 * (1.0 + oracle)) << eta << " " << dim << " " << eps << " " << r;
      }
    }
  }
}

TEST(Kernels, MollifierScalingExample) {
  // gamma_eps(1) = eps^{-eta/2} gamma_1(1/sqrt(eps)); eps = 1/4 gives sqrt(2) gamma_1(2).
  const auto s = CovarianceSpec::riesz(0.5, 1, 0.25);
  const double g1_at_2 = riesz_mollified_oracle(0.5, 1, 1.0, 2.0);
  EXPECT_NEAR(gamma_eval(s, 1.0), std::sqrt(2.0) * g1_at_2, 1e-8);
}

TEST(Kernels, MollifierScalingLaw) {
  for (double eps : {0.25, 1.0, 4.0}) {
    const auto s = CovarianceSpec::riesz(0.5, 1, eps);
    const auto s1 = CovarianceSpec::riesz(0.5, 1, 1.0);
    for (double x : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      EXPECT_NEAR(gamma_eval(s, x), std::pow(eps, -0.25) * gamma_eval(s1, x / std::sqrt(eps)), 1e-8);
    }
  }
}

TEST(Kernels, RieszHomogeneity) {
  const auto s = CovarianceSpec::riesz(0.7, 2);
  for (double c : {0.3, 2.0, 7.5}) {
    EXPECT_NEAR(gamma_eval(s, c * 1.3), std::pow(c, -0.7) * gamma_eval(s, 1.3), 1e-14);
  }
}

TEST(Kernels, EvaluatorMatchesQuadrature) {
  for (auto [eta, dim] : std::vector<std::pair<double, int>>{{0.5, 1}, {1.0, 2}}) {
    for (double eps : {0.05, 0.5}) {
      const auto s = CovarianceSpec::riesz(eta, dim, eps);
      const KernelEvaluator ev(s);
      for (double r : {0.0, 0.11, 0.9, 3.0, 10.0, 20.0, 100.0}) {
        const double oracle = riesz_mollified_oracle(eta, dim, eps, r);
        EXPECT_NEAR(ev.radial(r), oracle, 1e-6 * oracle) << eta << " " << eps << " " << r;
      }
    }
  }
}

TEST(Kernels, WhiteMollified) {
  const auto s = CovarianceSpec::white(0.1);
  EXPECT_NEAR(gamma_eval(s, 0.3), heat_kernel_1d(0.4, 0.3), 1e-15);
  EXPECT_THROW(gamma_eval(CovarianceSpec::white(0.0), 0.5), Error);
}

TEST(Kernels, GammaAtZeroDecreasesInEpsilon) {
  for (auto base : {CovarianceSpec::gaussian_bump(1), CovarianceSpec::riesz(0.5, 1), CovarianceSpec::white()}) {
    double prev = INFINITY;
    for (double eps : {0.05, 0.1, 0.4, 1.0}) {
      const double g0 = gamma_eval(base.with_epsilon(eps), 0.0);
      EXPECT_TRUE(std::isfinite(g0));
      EXPECT_LT(g0, prev);
      prev = g0;
    }
  }
}

TEST(Kernels, GaussianBumpPositiveDefinite) {
  const auto s = CovarianceSpec::gaussian_bump(1);
  const int n = 32;
  gsl_matrix* m = gsl_matrix_alloc(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gsl_matrix_set(m, i, j, gamma_eval(s, 0.37 * (i - j)));
  gsl_vector* ev = gsl_vector_alloc(n);
  gsl_eigen_symm_workspace* w = gsl_eigen_symm_alloc(n);
  gsl_eigen_symm(m, ev, w);
  EXPECT_GE(gsl_vector_min(ev), -1e-8);
  gsl_eigen_symm_free(w);
  gsl_vector_free(ev);
  gsl_matrix_free(m);
}

TEST(Kernels, DalangWhiteIsPi) { EXPECT_NEAR(dalang_value(CovarianceSpec::white()), kPi, 1e-8); }

TEST(Kernels, DalangRieszMatchesClosedForm) {
  // \int c|xi|^{eta-d}/(1+|xi|^2) dxi = c S_{d-1} pi / (2 sin(pi eta / 2))
  for (auto [eta, dim] : std::vector<std::pair<double, int>>{{0.5, 1}, {1.0, 2}, {1.99, 2}}) {
    const double area = 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim);
    const double oracle = riesz_constant_oracle(eta, dim) * area * kPi / (2.0 * std::sin(kPi * eta / 2.0));
    EXPECT_NEAR(dalang_value(CovarianceSpec::riesz(eta, dim)) / oracle, 1.0, 1e-6) << eta;
  }
}

TEST(Kernels, DalangDetectsDivergence) {
  try {
    dalang_integral([](double r) { return std::pow(r, 2.5 - 1.0); }, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergentIntegral);
  }
}

TEST(Kernels, HeatKernelValues) {
  const double o[1] = {0.0};
  EXPECT_NEAR(heat_kernel(1.0, o), 0.3989422804014327, 1e-15);
  const double x[2] = {1.0, 1.0};
  EXPECT_NEAR(heat_kernel(2.0, x), std::exp(-0.5) / (4.0 * kPi), 1e-15);
  EXPECT_THROW(heat_kernel(0.0, o), Error);
}

TEST(Kernels, HeatSemigroupAndMass) {
  const double h = 0.01;
  double mass = 0.0, conv = 0.0;
  for (int i = -1500; i <= 1500; ++i) {
    const double y = i * h;
    mass += h * heat_kernel_1d(1.0, y);
    conv += h * heat_kernel_1d(1.0, 0.7 - y) * heat_kernel_1d(1.0, y);
  }
  EXPECT_NEAR(mass, 1.0, 1e-6);
  EXPECT_NEAR(conv, heat_kernel_1d(2.0, 0.7), 1e-8);
}

TEST(Kernels, HeatConvolveAtoms) {
  Measure u0;
  u0.atoms = {{{0.0}, 2.0}, {{1.0}, 3.0}};
  u0.support_radius = 1.0;
  const double x[1] = {0.0};
  EXPECT_NEAR(heat_convolve_measure(1.0, u0, x), 1.523797, 1e-6);
  const auto d = Measure::dirac({0.4});
  EXPECT_DOUBLE_EQ(heat_convolve_measure(0.3, d, x), heat_kernel_1d(0.3, 0.4));
}

TEST(Kernels, HeatConvolveUniformDensity) {
  const auto u0 = Measure::uniform_interval(-1.0, 1.0, 1.0, 4000);
  u0.validate();
  const double x[1] = {0.0};
  const double oracle = 0.5 * (gsl_cdf_ugaussian_P(1.0) - gsl_cdf_ugaussian_P(-1.0));
  EXPECT_NEAR(heat_convolve_measure(1.0, u0, x), oracle, 1e-7);
}

TEST(Kernels, EmptyMeasure) {
  Measure empty;
  const double x[1] = {0.0};
  EXPECT_THROW(heat_convolve_measure(1.0, empty, x), Error);
  EXPECT_THROW(empty.validate(), Error);
}

TEST(Kernels, BridgeKernel) {
  const double z[1] = {0.0};
  EXPECT_DOUBLE_EQ(bridge_kernel(2.0, 1.0, z, z, z), heat_kernel_1d(0.5, 0.0));
  const double x[1] = {4.0}, y[1] = {1.0};
  EXPECT_NEAR(bridge_kernel(1.0, 0.25, z, x, y), 1.0 / std::sqrt(2.0 * kPi * 0.1875), 1e-12);
  EXPECT_NEAR(bridge_kernel(1.0, 0.25, z, x, y), 0.921318, 1e-6);
  EXPECT_THROW(bridge_kernel(1.0, 1.0, z, x, y), Error);
  // variance s(t-s)/t collapses as s -> 0
  EXPECT_GT(bridge_kernel(1.0, 1e-6, z, x, z), 100.0);
}

TEST(Kernels, SpecConfigRoundTrip) {
  const auto s = CovarianceSpec::riesz(0.5, 1, 0.05);
  const auto back = spec_from_config(spec_to_config(s));
  EXPECT_EQ(back.kind, KernelKind::Riesz);
  EXPECT_DOUBLE_EQ(back.eta, 0.5);
  EXPECT_DOUBLE_EQ(back.epsilon, 0.05);
  EXPECT_THROW(spec_from_config(ConfigMap::parse("kind = riesz\neta = 1.2\ndim = 1\n")), Error);
}

TEST(Kernels, CustomSpectralNegativeWeight) {
  const auto s = CovarianceSpec::custom("t", 1, {0.0, 1.0, 2.0}, {1.0, -0.5, 0.0});
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeSpectralWeight);
  }
}

TEST(Kernels, CustomSpectralFourier) {
  // Box spectrum on [0, 2] in one dimension: gamma(x) = sin(2x) / (pi x).
  const auto s = CovarianceSpec::custom("box", 1, {0.0, 2.0}, {1.0, 1.0});
  EXPECT_NEAR(gamma_eval(s, 0.0), 2.0 / kPi, 1e-9);
  EXPECT_NEAR(gamma_eval(s, 0.8), std::sin(1.6) / (kPi * 0.8), 1e-9);
  const KernelEvaluator ev(s);
  EXPECT_NEAR(ev.radial(0.8), std::sin(1.6) / (kPi * 0.8), 1e-6);
}
