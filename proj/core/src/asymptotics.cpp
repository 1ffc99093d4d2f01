#include "pamlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pamlab/error.hpp"
#include "pamlab/stats.hpp"

namespace pamlab {

namespace {

// log (p_t * u0)(x) without underflow for atomic data
double log_heat_profile(double t, const Measure& u0, std::span<const double> x) {
  if (!u0.atomic()) return std::log(heat_convolve_measure(t, u0, x));
  std::vector<double> terms;
  terms.reserve(u0.atoms.size());
  const double dim = static_cast<double>(x.size());
  for (const auto& a : u0.atoms) {
    terms.push_back(std::log(a.mass) - 0.5 * dim * std::log(2.0 * std::numbers::pi * t) -
                    squared_distance(a.location, x) / (2.0 * t));
  }
  return log_sum_exp(terms);
}

PeakSeries sup_by_radius(std::span<const double> distance, std::span<const double> stat, std::span<const char> valid,
                         std::span<const double> radii) {
  PeakSeries out;
  for (double R : radii) {
    PeakEntry e;
    e.radius = R;
    e.statistic = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < distance.size(); ++i) {
      if (distance[i] > R) continue;
      if (!valid[i]) {
        ++e.excluded;
        continue;
      }
      any = true;
      e.statistic = std::max(e.statistic, stat[i]);
    }
    if (!any) fail(ErrorKind::AllSitesNonpositive, "no positive site within radius " + std::to_string(R));
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace

std::vector<double> exponential_radii(int first, int last) {
  require(last >= first, ErrorKind::InvalidArgument, "empty radius range");
  std::vector<double> r;
  for (int n = first; n <= last; ++n) r.push_back(std::exp(static_cast<double>(n)));
  return r;
}

PeakSeries peak_series(const FieldState& field, const Measure& u0, std::span<const double> radii) {
  require(!radii.empty(), ErrorKind::InvalidArgument, "no radii given");
  const double half = 0.5 * field.grid.period();
  for (double R : radii) require(R > 0.0 && R <= half, ErrorKind::InvalidArgument, "radius exceeds half the lattice period");
  const std::size_t n = field.values.size();
  std::vector<double> dist(n), stat(n, 0.0), logp(n);
  std::vector<char> valid(n, 0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logp[i] = log_heat_profile(field.t, u0, field.grid.site(i));
    top = std::max(top, logp[i]);
  }
  // FFT round-off swamps the field where the mean profile is this far below its peak
  const double floor = top + std::log(1e-10);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = field.grid.site(i);
    dist[i] = std::sqrt(squared_norm(x));
    if (field.values[i] > 0.0 && logp[i] > floor) {
      valid[i] = 1;
      stat[i] = std::log(field.values[i]) - logp[i];
    }
  }
  return sup_by_radius(dist, stat, valid, radii);
}

PeakSeries peak_series(const RatioField& field, std::span<const double> radii) {
  require(!radii.empty(), ErrorKind::InvalidArgument, "no radii given");
  const std::size_t n = field.size();
  std::vector<double> dist(n), stat(n, 0.0);
  std::vector<char> valid(n, 0);
  double reach = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = field.position(i);
    dist[i] = std::sqrt(squared_distance(p, field.x0));
    reach = std::max(reach, dist[i]);
    if (field.values[i] > 0.0) {
      valid[i] = 1;
      stat[i] = std::log(field.values[i]);
    }
  }
  for (double R : radii)
    require(R > 0.0 && R <= reach * (1.0 + 1e-9), ErrorKind::InvalidArgument, "radius exceeds the ratio field");
  return sup_by_radius(dist, stat, valid, radii);
}

GrowthFit fit_growth(std::span<const PeakSeries> series, double a) {
  require(!series.empty(), ErrorKind::TooFewPoints, "no series to fit");
  require(a > 0.0, ErrorKind::InvalidArgument, "growth exponent must be positive");
  GrowthFit out;
  out.exponent = a;
  out.replicates = series.size();
  std::vector<double> slopes, intercepts;
  double r2 = 0.0;
  LineFit single;
  for (const auto& s : series) {
    require(s.entries.size() >= 4, ErrorKind::TooFewPoints, "fit_growth needs at least four radii");
    std::vector<double> x, y;
    for (const auto& e : s.entries) {
      require(e.radius > 1.0, ErrorKind::InvalidArgument, "radii must exceed 1");
      x.push_back(std::pow(std::log(e.radius), a));
      y.push_back(e.statistic);
    }
    single = fit_line(x, y);
    slopes.push_back(single.slope);
    intercepts.push_back(single.intercept);
    r2 += single.r_squared;
  }
  const double n = static_cast<double>(series.size());
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    out.slope += slopes[i] / n;
    out.intercept += intercepts[i] / n;
  }
  out.r_squared = r2 / n;
  if (series.size() == 1) {
    out.half_width = student_t_975(single.points - 2) * single.slope_se;
  } else {
    out.half_width = student_t_975(series.size() - 1) * std::sqrt(sample_variance(slopes) / n);
  }
  out.nonlinear = out.r_squared < 0.99;
  return out;
}

MomentGrowthFit moment_growth_fit(std::span<const MomentPoint> points, double alpha_bar) {
  require(alpha_bar >= 0.0 && alpha_bar < 2.0, ErrorKind::BadAlpha, "alpha must lie in [0, 2)");
  std::vector<double> x, y;
  std::vector<int> ms;
  for (const auto& p : points) {
    require(p.m >= 1 && p.log_theta > 0.0, ErrorKind::InvalidArgument, "moment points need m >= 1 and log Theta > 0");
    x.push_back(std::log(static_cast<double>(p.m)));
    y.push_back(std::log(p.log_theta));
    ms.push_back(p.m);
  }
  std::sort(ms.begin(), ms.end());
  require(std::unique(ms.begin(), ms.end()) - ms.begin() >= 3, ErrorKind::TooFewPoints,
          "moment growth fit needs at least three distinct m");
  const auto fit = fit_line(x, y);
  MomentGrowthFit out;
  out.p = fit.slope;
  out.p_se = fit.slope_se;
  out.coefficient = std::exp(fit.intercept);
  out.r_squared = fit.r_squared;
  out.target_p = (4.0 - alpha_bar) / (2.0 - alpha_bar);
  return out;
}

HolderFit holder_from_samples(std::span<const std::vector<double>> samples, double spacing, std::span<const int> lags) {
  require(samples.size() >= 16, ErrorKind::TooFewReplicates, "Holder estimate needs at least 16 replicates");
  require(lags.size() >= 3, ErrorKind::TooFewPoints, "Holder estimate needs at least three separations");
  const auto [lo, hi] = std::minmax_element(lags.begin(), lags.end());
  require(*lo >= 1 && static_cast<double>(*hi) / *lo >= std::pow(10.0, 1.5) - 1e-9, ErrorKind::InvalidArgument,
          "separations must span at least 1.5 decades");
  HolderFit out;
  std::vector<double> x, y;
  for (int lag : lags) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
      require(static_cast<std::size_t>(lag) < s.size(), ErrorKind::InvalidArgument, "separation exceeds sample length");
      for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < s.size(); ++i) {
        sum += std::abs(s[i + static_cast<std::size_t>(lag)] - s[i]);
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    require(mean > 0.0, ErrorKind::InvalidArgument, "increments vanish; the samples are constant");
    out.separations.push_back(lag * spacing);
    out.mean_increments.push_back(mean);
    x.push_back(std::log(lag * spacing));
    y.push_back(std::log(mean));
  }
  const auto fit = fit_line(x, y);
  out.raw_slope = fit.slope;
  out.eta = std::clamp(fit.slope, 0.0, 1.2);
  out.saturated = fit.slope > 1.0;
  out.half_width = fit.points > 2 ? student_t_975(fit.points - 2) * fit.slope_se : 0.0;
  return out;
}

HolderFit holder_estimate(std::span<const RatioField> fields, std::span<const int> lags) {
  require(fields.size() >= 16, ErrorKind::TooFewReplicates, "Holder estimate needs at least 16 replicates");
  std::vector<std::vector<double>> samples;
  double spacing = 0.0;
  for (const auto& f : fields) {
    require(f.dim == 1, ErrorKind::InvalidArgument, "Holder estimate works on 1-d ratio fields");
    require(f.size() >= 2, ErrorKind::InvalidArgument, "ratio field too small");
    const double d = f.coords[1] - f.coords[0];
    require(spacing == 0.0 || std::abs(d - spacing) < 1e-12 * spacing, ErrorKind::GridMismatch,
            "ratio fields use different lattices");
    spacing = d;
    samples.push_back(f.values);
  }
  return holder_from_samples(samples, spacing, lags);
}

BoundAudit bound_audit(const FKEstimate& normalized_moment, const FKEstimate& theta) {
  BoundAudit out;
  out.lhs = normalized_moment.value;
  out.rhs = theta.value;
  out.combined_se = std::hypot(normalized_moment.standard_error, theta.standard_error);
  out.slack = out.rhs - out.lhs;
  out.slack_sigmas = out.combined_se > 0.0 ? out.slack / out.combined_se
                                           : (out.slack >= -1e-12 * std::abs(out.rhs) ? 0.0 : -std::numeric_limits<double>::infinity());
  out.passed = out.lhs <= out.rhs + 3.0 * out.combined_se + 1e-12 * std::abs(out.rhs);
  if (!out.passed) {
    fail(ErrorKind::BoundViolated, "moment " + std::to_string(out.lhs) + " exceeds the bound " + std::to_string(out.rhs) +
                                       " by more than 3 standard errors");
  }
  return out;
}

std::vector<BoundCase> standard_bound_suite() {
  auto atoms = [](std::vector<std::pair<double, double>> list) {
    Measure m;
    for (auto [x, w] : list) {
      m.atoms.push_back({{x}, w});
      m.support_radius = std::max(m.support_radius, std::abs(x));
    }
    return m;
  };
  const auto gb = CovarianceSpec::gaussian_bump(1);
  const auto riesz = CovarianceSpec::riesz(0.5, 1, 0.1);
  std::vector<BoundCase> s;
  s.push_back({"gb_m2_coincident", gb, 0.5, {{0.0}, {0.0}}, Measure::dirac({0.0})});
  s.push_back({"gb_m2_shift_0.5", gb, 0.5, {{0.0}, {0.5}}, Measure::dirac({0.0})});
  s.push_back({"gb_m2_two_atoms", gb, 0.5, {{-1.0}, {1.0}}, atoms({{-0.5, 1.0}, {0.5, 2.0}})});
  s.push_back({"gb_m3_spread", gb, 0.5, {{0.0}, {0.3}, {-0.4}}, Measure::dirac({0.0})});
  s.push_back({"gb_m4_coincident", gb, 0.25, {{0.0}, {0.0}, {0.0}, {0.0}}, Measure::dirac({0.0})});
  s.push_back({"gb2d_m2_shift", CovarianceSpec::gaussian_bump(2), 0.5, {{0.0, 0.0}, {0.5, -0.5}},
               Measure::dirac({0.0, 0.0})});
  s.push_back({"riesz_m2_coincident", riesz, 0.5, {{0.0}, {0.0}}, Measure::dirac({0.0})});
  s.push_back({"riesz_m3_shift", riesz, 0.5, {{0.0}, {1.0}, {2.0}}, Measure::dirac({0.0})});
  s.push_back({"white_m2_shift_0.2", CovarianceSpec::white(0.05), 0.5, {{0.0}, {0.2}}, Measure::dirac({0.0})});
  s.push_back({"gb_m2_shift_2_three_atoms", gb, 1.0, {{0.0}, {2.0}}, atoms({{-1.0, 1.0}, {0.0, 0.5}, {1.0, 1.5}})});
  return s;
}

BoundCaseResult run_bound_case(const BoundCase& c, const FKOptions& opts) {
  BoundCaseResult out;
  out.config = c;
  auto raw = fk_moment_estimate(c.spec, c.t, c.targets, c.u0, opts);
  double log_norm = 0.0;
  for (const auto& x : c.targets) log_norm += log_heat_profile(c.t, c.u0, x);
  out.moment = raw;
  out.moment.log_value = raw.log_value - log_norm;
  out.moment.value = std::exp(out.moment.log_value);
  out.moment.standard_error = out.moment.value * raw.log_standard_error;
  FKOptions th = opts;
  th.seed = mix64(opts.seed + 0x5bd1e995ULL);
  out.theta = theta_estimate(c.spec, c.t, static_cast<int>(c.targets.size()), th);
  out.audit = bound_audit(out.moment, out.theta.best);
  return out;
}

}  // namespace pamlab
