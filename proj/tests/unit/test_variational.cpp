#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pamlab/error.hpp"
#include "pamlab/variational.hpp"

using namespace pamlab;

namespace {

VariationalGrid grid1(int n = 1024, double extent = 40.0) {
  VariationalGrid g;
  g.points = n;
  g.extent = extent;
  return g;
}

std::vector<double> sech_profile(const VariationalGrid& g, double a, double shift = 0.0) {
  std::vector<double> v(g.sites());
  const double h = g.spacing();
  for (int j = 0; j < g.points; ++j) v[j] = std::sqrt(a / 2.0) / std::cosh(a * ((j - g.points / 2) * h - shift));
  return v;
}

}  // namespace

TEST(Variational, SechFamilyOracle) {
  // Q(g_a) = a/3 - a^2/3 for g_a = sqrt(a/2) sech(a x); the lattice reproduces it
  const auto g = grid1(4096, 40.0);
  for (double a : {0.25, 0.5, 1.0}) {
    const auto v = evaluate_objective(CovarianceSpec::white(), g, sech_profile(g, a), VariationalObjective::Hartree);
    EXPECT_NEAR(v.norm_squared, 1.0, 1e-7);
    EXPECT_NEAR(v.value, a / 3.0 - a * a / 3.0, 1e-4) << a;
  }
}

TEST(Variational, DeltaHartree) {
  const auto r = hartree_energy(CovarianceSpec::white(), grid1());
  EXPECT_NEAR(r.value, 1.0 / 12.0, 0.01 / 12.0);
  EXPECT_NEAR(r.state.norm, 1.0, 1e-10);
  EXPECT_LT(std::abs(r.fourier_value - r.value), 1e-6 * r.value);
  EXPECT_EQ(r.restart_values.size(), 3u);
  EXPECT_LT(r.restart_spread, 0.01);
}

TEST(Variational, DeltaM) {
  const auto r = m_energy(CovarianceSpec::white(), grid1());
  EXPECT_NEAR(r.value, 0.75 * std::cbrt(1.0 / 6.0), 0.02 * 0.41274);
  EXPECT_NEAR(0.75 * std::cbrt(1.0 / 6.0), 0.41274, 1e-5);
}

TEST(Variational, ZeroKernel) {
  auto zero = CovarianceSpec::gaussian_bump(1);
  zero.amplitude = 0.0;
  VariationalOptions o;
  o.max_iter = 200000;
  const auto r = m_energy(zero, grid1(256, 20.0), o);
  EXPECT_NEAR(r.value, 0.0, 1e-3);
  EXPECT_LE(r.value, 0.0);
}

TEST(Variational, GaussianBumpBoundAndRefinement) {
  const auto coarse = hartree_energy(CovarianceSpec::gaussian_bump(1), grid1(512, 40.0));
  const auto fine = hartree_energy(CovarianceSpec::gaussian_bump(1), grid1(1024, 40.0));
  const auto wide = hartree_energy(CovarianceSpec::gaussian_bump(1), grid1(2048, 80.0));
  EXPECT_LE(fine.value, 1.0);
  EXPECT_GT(fine.value, 0.0);
  EXPECT_LT(std::abs(coarse.value - fine.value), 0.01 * fine.value);
  EXPECT_LT(std::abs(wide.value - fine.value), 0.005 * fine.value);
  EXPECT_LT(std::abs(fine.fourier_value - fine.value), 1e-6 * fine.value);
}

TEST(Variational, RieszScaling) {
  const auto spec = CovarianceSpec::riesz(0.5, 1);
  const auto base = hartree_energy(spec, grid1());
  const auto twice = hartree_energy(spec.scaled(2.0), grid1());
  EXPECT_NEAR(twice.value / base.value, std::pow(2.0, 4.0 / 3.0), 0.02 * std::pow(2.0, 4.0 / 3.0));
}

TEST(Variational, TranslationInvariance) {
  const auto g = grid1(512, 20.0);
  const auto a = sech_profile(g, 0.7);
  std::vector<double> b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) b[(i + 37) % a.size()] = a[i];
  for (const auto& spec : {CovarianceSpec::white(), CovarianceSpec::gaussian_bump(1), CovarianceSpec::riesz(0.5, 1)}) {
    const auto va = evaluate_objective(spec, g, a, VariationalObjective::Hartree);
    const auto vb = evaluate_objective(spec, g, b, VariationalObjective::Hartree);
    EXPECT_NEAR(va.value, vb.value, 1e-10);
  }
}

TEST(Variational, InterpolationInequality) {
  const auto spec = CovarianceSpec::white();
  const auto e = hartree_energy(spec, grid1());
  const double kappa = kappa_from_hartree(e.value, 1.0);
  EXPECT_LE(interpolation_ratio(spec, grid1(), kappa, 50, 3), 1.0 + 1e-6);
}

TEST(Variational, DomainTooSmall) {
  try {
    hartree_energy(CovarianceSpec::white(), grid1(64, 4.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainTooSmall);
  }
}

TEST(Variational, NoConvergence) {
  VariationalOptions o;
  o.max_iter = 3;
  try {
    hartree_energy(CovarianceSpec::white(), grid1(), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
  }
}

TEST(Variational, MeRequiresScaling) {
  try {
    me_relation_check(CovarianceSpec::gaussian_bump(1), grid1());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotScaling);
  }
}

TEST(Variational, KappaFormula) {
  EXPECT_NEAR(kappa_from_hartree(1.0 / 12.0, 1.0), 1.0 / std::sqrt(3.0), 1e-14);
  EXPECT_EQ(kappa_from_hartree(0.0, 1.0), 0.0);
  EXPECT_NEAR(kappa_from_hartree(1.0, 2.0 - 1e-9), 1.0, 1e-6);
  EXPECT_THROW(kappa_from_hartree(1.0, 2.0), Error);
  EXPECT_THROW(kappa_from_hartree(1.0, 0.0), Error);
}

TEST(Variational, LambdaZero) {
  for (double t : {0.5, 1.0, 2.0}) {
    const auto l = lambda0(1.0 / 12.0, 1.0, 1, t);
    EXPECT_NEAR(l.value, 0.75 * std::cbrt(2.0 * t / 3.0), 1e-12);
    EXPECT_NEAR(l.value, 1.5 * std::cbrt(t / 12.0), 1e-12);
    EXPECT_NEAR(l.exponent, 2.0 / 3.0, 1e-15);
  }
  for (int dim : {1, 2, 3}) EXPECT_NEAR(lambda0(1.0, 0.0, dim, 0.7).value, std::sqrt(2.0 * dim * 0.7), 1e-12);
  EXPECT_EQ(lambda0(0.0, 1.0, 1, 1.0).value, 0.0);
  EXPECT_THROW(lambda0(1.0, 2.0, 1, 1.0), Error);
}

TEST(Variational, DirichletGroundEnergy) {
  ExitFunctionalSpec h;
  h.radius = 2.0;
  // -(1/2) (pi / (2R))^2 for the free Laplacian
  EXPECT_NEAR(dirichlet_ground_energy(h), -0.5 * std::pow(std::numbers::pi / 4.0, 2), 1e-5);
  h.kind = ExitHamiltonian::Constant;
  h.level = 0.3;
  EXPECT_NEAR(dirichlet_ground_energy(h), 0.3 - 0.5 * std::pow(std::numbers::pi / 4.0, 2), 1e-5);
  h.kind = ExitHamiltonian::GaussianWell;
  h.level = 1.0;
  h.radius = 4.0;
  const double well = dirichlet_ground_energy(h);
  EXPECT_GT(well, 0.0);
  EXPECT_LT(well, 1.0);
}

TEST(Variational, MeRelationHolds) {
  const auto one = me_relation_check(CovarianceSpec::riesz(0.5, 1), grid1());
  EXPECT_LT(one.residual, 0.02);
  VariationalGrid g2;
  g2.dim = 2;
  g2.points = 128;
  g2.extent = 16.0;
  const auto two = me_relation_check(CovarianceSpec::riesz(1.0, 2), g2);
  EXPECT_LT(two.residual, 0.02);
  const auto delta = me_relation_check(CovarianceSpec::white(), grid1());
  EXPECT_LT(delta.residual, 0.02);
}

TEST(Variational, VirialBalance) {
  // at a maximizer of P - K the kinetic energy is (alpha / 2) P
  const auto r = hartree_energy(CovarianceSpec::riesz(0.5, 1), grid1());
  EXPECT_NEAR(r.state.kinetic, 0.25 * r.state.potential, 0.01 * r.state.potential);
}
