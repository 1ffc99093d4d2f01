#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pamlab/kernels.hpp"
#include "pamlab/measure.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

// m independent Brownian bridges from 0 to 0 on a uniform K-step grid.
struct BridgeEnsemble {
  int count = 0;
  double horizon = 0.0;
  int dim = 1;
  std::vector<double> times;  // K + 1
  std::vector<double> paths;  // count x (K+1) x dim
  StreamId stream;

  int steps() const { return static_cast<int>(times.size()) - 1; }
  double at(int path, int k, int d = 0) const {
    return paths[(static_cast<std::size_t>(path) * times.size() + static_cast<std::size_t>(k)) * dim + d];
  }
};

// Gaussian increments, then B(s) - (s/t) B(t).
BridgeEnsemble sample_bridges(int m, double t, int K, int dim, const StreamId& stream);
void sample_bridges_into(BridgeEnsemble& out, int m, double t, int K, int dim, const StreamId& stream);

struct FKEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  double log_value = 0.0;
  double log_standard_error = 0.0;  // se of log_value (delta method)
  std::size_t replicas = 0;
  double exponent_mean = 0.0;
  double exponent_max = 0.0;
  bool sampled_assignments = false;
};

enum class AssignmentMode { Auto, Exact };

struct FKOptions {
  std::size_t replicas = 10000;
  int steps = 128;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t batches = 50;
  // exact enumeration while atoms^m <= cap; beyond it Auto samples assignments
  // and Exact raises AssignmentExplosion
  std::size_t assignment_cap = 10000;
  AssignmentMode assignment_mode = AssignmentMode::Auto;
};

// E prod_j u(t, x_j) by the bridge representation with atomic u0.
FKEstimate fk_moment_estimate(const CovarianceSpec& spec, double t, std::span<const Point> targets, const Measure& u0,
                              const FKOptions& opts);

// E exp{ int_0^t sum_{j<k} gamma(B^j(s) - B^k(s) + o_j(s) - o_k(s)) ds } where
// path j carries the offset o_j(s) moving linearly from start[j] to end[j].
// Empty spans mean zero offsets.
FKEstimate bridge_exponential(const CovarianceSpec& spec, double t, int m, std::span<const Point> start,
                              std::span<const Point> end, const FKOptions& opts);

struct ThetaEstimate {
  FKEstimate best;  // at the argmax
  double argmax_s = 0.0;
  std::vector<double> s_grid;
  std::vector<FKEstimate> profile;
};

// sup over a geometric s grid (t 2^-10 .. t) of the bare m-path functional.
ThetaEstimate theta_estimate(const CovarianceSpec& spec, double t, int m, const FKOptions& opts, int s_grid_size = 16);

enum class GirsanovFunctional { ConstantOne, ExpNegIntegratedSquare, SupBelowOne, EndpointGaussian };

std::string to_string(GirsanovFunctional f);
GirsanovFunctional girsanov_functional_from_string(const std::string& name);

struct GirsanovResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double combined_se = 0.0;
  bool exact = false;  // both sides closed form
};

struct GirsanovOptions {
  std::size_t replicas = 100000;
  int steps = 200;  // grid on [0, lambda t]
  std::uint64_t seed = 0;
  std::size_t batches = 50;
  int workers = 1;
};

GirsanovResult girsanov_check(double lambda, double t, int dim, GirsanovFunctional f, const GirsanovOptions& opts);

enum class ExitHamiltonian { Zero, Constant, GaussianWell };

struct ExitFunctionalSpec {
  ExitHamiltonian kind = ExitHamiltonian::Zero;
  double level = 0.0;  // Constant: h = level; GaussianWell: h = level exp(-|x|^2)
  int dim = 1;
  double radius = 1.0;  // ball D
};

struct ExitResult {
  double value = 0.0;  // (1/t) log E[exp(int h); tau_D >= t]
  double standard_error = 0.0;
  double surviving_fraction = 0.0;
  std::size_t replicas = 0;
};

double exit_hamiltonian(const ExitFunctionalSpec& h, double s, std::span<const double> x);

ExitResult exit_restricted_functional(const ExitFunctionalSpec& h, double t, const FKOptions& opts);

}  // namespace pamlab
