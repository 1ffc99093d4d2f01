#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pamlab/bridges.hpp"
#include "pamlab/kernels.hpp"

namespace pamlab {

// Periodic lattice on [-extent, extent)^dim with `points` sites per axis,
// site j at (j - points/2) h, h = 2 extent / points.
struct VariationalGrid {
  int dim = 1;
  int points = 1024;
  double extent = 40.0;

  double spacing() const { return 2.0 * extent / points; }
  std::size_t sites() const;
  void validate() const;
};

enum class VariationalObjective { Hartree, M };

struct VariationalOptions {
  double tol = 1e-6;  // L2 norm of the projected gradient
  int max_iter = 20000;
  int restarts = 3;
  std::uint64_t seed = 0;
  int workers = 1;
  double initial_width = 1.0;
};

struct VariationalState {
  VariationalGrid grid;
  std::vector<double> values;
  double norm = 0.0;
  double energy = 0.0;
  double potential = 0.0;  // double integral (or int g^4)
  double kinetic = 0.0;    // int |grad g|^2
  double residual = 0.0;
  int iterations = 0;
};

struct VariationalResult {
  double value = 0.0;
  VariationalState state;
  double fourier_value = 0.0;  // same objective from the spectral representation
  std::vector<double> restart_values;
  double restart_spread = 0.0;  // (max - min) / |max| over restarts
};

// gamma = delta is requested with the unmollified white spec; amplitude 0 is
// the zero kernel.
VariationalResult hartree_energy(const CovarianceSpec& spec, const VariationalGrid& grid,
                                 const VariationalOptions& opts = {});
VariationalResult m_energy(const CovarianceSpec& spec, const VariationalGrid& grid, const VariationalOptions& opts = {});
VariationalResult optimize(const CovarianceSpec& spec, const VariationalGrid& grid, VariationalObjective objective,
                           const VariationalOptions& opts = {});

// Objective pieces for a given (not necessarily normalized) lattice function.
struct ObjectiveValue {
  double potential = 0.0;
  double kinetic = 0.0;
  double norm_squared = 0.0;
  double value = 0.0;
};
ObjectiveValue evaluate_objective(const CovarianceSpec& spec, const VariationalGrid& grid, std::span<const double> g,
                                  VariationalObjective objective);

double kappa_from_hartree(double eH, double alpha);

// scaling exponent alpha of an H2 spec; NotScaling for H1
double scaling_exponent(const CovarianceSpec& spec);

struct MeCheck {
  double m_value = 0.0;
  double hartree_value = 0.0;
  double predicted_m = 0.0;  // ((4-a)/4) (2 E / (2-a))^{(2-a)/(4-a)}
  double residual = 0.0;
};
MeCheck me_relation_check(const CovarianceSpec& spec, const VariationalGrid& grid, const VariationalOptions& opts = {});

struct Lambda0 {
  double value = 0.0;
  double exponent = 0.0;  // a = 2 / (4 - alpha)
};
Lambda0 lambda0(double E, double alpha_bar, int dim, double t);

// max over random normalized g of  iint gamma g^2 g^2 / (kappa |g|^{4-a} |grad g|^a)
double interpolation_ratio(const CovarianceSpec& spec, const VariationalGrid& grid, double kappa, int samples,
                           std::uint64_t seed);

// sup_g { int_D h g^2 - (1/2) int_D |g'|^2 }, |g|_{L2(D)} = 1, Dirichlet on the
// interval D = (-radius, radius); one dimension, time-independent h.
double dirichlet_ground_energy(const ExitFunctionalSpec& h, int points = 800);

}  // namespace pamlab
