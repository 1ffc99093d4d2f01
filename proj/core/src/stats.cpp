#include "pamlab/stats.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pamlab/error.hpp"

namespace pamlab {

namespace {

std::vector<std::size_t> batch_boundaries(std::size_t count, std::size_t batches) {
  std::vector<std::size_t> edges(batches + 1);
  for (std::size_t b = 0; b <= batches; ++b) edges[b] = b * count / batches;
  return edges;
}

}  // namespace

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

MeanEstimate batch_mean(std::span<const double> samples, std::size_t batches) {
  const std::size_t n = samples.size();
  require(n > 0, ErrorKind::InsufficientSamples, "batch_mean needs samples");
  batches = std::clamp<std::size_t>(batches, 1, n);
  const auto edges = batch_boundaries(n, batches);
  std::vector<double> means(batches);
  double total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = edges[b]; i < edges[b + 1]; ++i) s += samples[i];
    total += s;
    means[b] = s / static_cast<double>(edges[b + 1] - edges[b]);
  }
  MeanEstimate out;
  out.count = n;
  out.mean = total / static_cast<double>(n);
  out.standard_error = batches > 1 ? std::sqrt(sample_variance(means) / static_cast<double>(batches)) : 0.0;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double s = 0.0;
  for (double v : values) s += std::exp(v - peak);
  return peak + std::log(s);
}

LogMeanEstimate batch_log_mean(std::span<const double> log_samples, std::size_t batches) {
  const std::size_t n = log_samples.size();
  require(n > 0, ErrorKind::InsufficientSamples, "batch_log_mean needs samples");
  batches = std::clamp<std::size_t>(batches, 1, n);
  const auto edges = batch_boundaries(n, batches);
  std::vector<double> log_means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto part = log_samples.subspan(edges[b], edges[b + 1] - edges[b]);
    log_means[b] = log_sum_exp(part) - std::log(static_cast<double>(part.size()));
  }
  LogMeanEstimate out;
  out.count = n;
  out.log_mean = log_sum_exp(log_samples) - std::log(static_cast<double>(n));
  if (batches > 1 && std::isfinite(out.log_mean)) {
    std::vector<double> scaled(batches);
    for (std::size_t b = 0; b < batches; ++b) scaled[b] = std::exp(log_means[b] - out.log_mean);
    out.relative_error = std::sqrt(sample_variance(scaled) / static_cast<double>(batches));
  }
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::InvalidArgument, "fit_line: size mismatch");
  const std::size_t n = x.size();
  require(n >= 2, ErrorKind::TooFewPoints, "fit_line needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::TooFewPoints, "fit_line: abscissae are all equal");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.slope * x[i] - fit.intercept;
    rss += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  if (n > 2) {
    const double s2 = rss / static_cast<double>(n - 2);
    fit.slope_se = std::sqrt(s2 / sxx);
    fit.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  }
  return fit;
}

double student_t_975(std::size_t dof) {
  if (dof == 0) return std::numeric_limits<double>::infinity();
  return gsl_cdf_tdist_Pinv(0.975, static_cast<double>(dof));
}

}  // namespace pamlab
