#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pamlab/bridges.hpp"
#include "pamlab/solver.hpp"

namespace pamlab {

struct PeakEntry {
  double radius = 0.0;
  double statistic = 0.0;  // sup over the ball of log u - log p_t*u0 (log K for ratio fields)
  // sites inside the ball with u <= 0, or (full-lattice fields) where p_t*u0
  // is below 1e-10 of its peak and the lattice value is round-off
  std::size_t excluded = 0;
};

struct PeakSeries {
  std::vector<PeakEntry> entries;
  std::uint32_t replicate = 0;
};

PeakSeries peak_series(const FieldState& field, const Measure& u0, std::span<const double> radii);
PeakSeries peak_series(const RatioField& field, std::span<const double> radii);

// geometric radii e^first .. e^last
std::vector<double> exponential_radii(int first, int last);

struct GrowthFit {
  double exponent = 0.0;  // assumed a
  double slope = 0.0;     // lambda-hat
  double intercept = 0.0;
  double half_width = 0.0;  // 95%
  double r_squared = 0.0;
  bool nonlinear = false;  // r^2 < 0.99
  std::size_t replicates = 0;
};

// y = lambda (log R)^a + c per series; with several series the slope is the
// replicate mean and the half-width comes from the replicate spread.
GrowthFit fit_growth(std::span<const PeakSeries> series, double a);

struct MomentPoint {
  int m = 0;
  double log_theta = 0.0;
  double standard_error = 0.0;  // of log_theta
};

struct MomentGrowthFit {
  double p = 0.0;
  double coefficient = 0.0;  // c in log Theta = c m^p
  double p_se = 0.0;
  double target_p = 0.0;     // (4 - a) / (2 - a)
  double r_squared = 0.0;
};

MomentGrowthFit moment_growth_fit(std::span<const MomentPoint> points, double alpha_bar);

struct HolderFit {
  double eta = 0.0;  // clamped to [0, 1.2]
  double raw_slope = 0.0;
  double half_width = 0.0;
  bool saturated = false;  // slope > 1
  std::vector<double> separations;
  std::vector<double> mean_increments;
};

// samples: replicates of one function on a regular 1-d lattice; lags in cells.
// Increments |f(i + lag) - f(i)| are averaged over replicates and over every
// base index for which both points exist.
HolderFit holder_from_samples(std::span<const std::vector<double>> samples, double spacing, std::span<const int> lags);
HolderFit holder_estimate(std::span<const RatioField> fields, std::span<const int> lags);

struct BoundAudit {
  double lhs = 0.0;  // E prod u / p_t*|u0|
  double rhs = 0.0;  // Theta
  double combined_se = 0.0;
  double slack = 0.0;        // rhs - lhs
  double slack_sigmas = 0.0;  // slack / combined_se
  bool passed = true;
};

// lhs <= rhs + 3 se; BoundViolated otherwise.
BoundAudit bound_audit(const FKEstimate& normalized_moment, const FKEstimate& theta);

struct BoundCase {
  std::string name;
  CovarianceSpec spec;
  double t = 0.5;
  std::vector<Point> targets;
  Measure u0;
};

std::vector<BoundCase> standard_bound_suite();

struct BoundCaseResult {
  BoundCase config;
  FKEstimate moment;  // normalized
  ThetaEstimate theta;
  BoundAudit audit;
};

BoundCaseResult run_bound_case(const BoundCase& c, const FKOptions& opts);

}  // namespace pamlab
