#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pamlab {

/// Mean with a batch-means standard error. Sample i belongs to batch
/// i * batches / count, so the estimate does not depend on evaluation order.
struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

MeanEstimate batch_mean(std::span<const double> samples, std::size_t batches);

/// Same estimator for values supplied as logarithms, e.g. log of exponential
/// functionals that overflow in linear space. Returns log of the mean and the
/// standard error of the mean relative to the mean (delta method), so
/// mean = exp(log_mean) and se = mean * relative_error.
struct LogMeanEstimate {
  double log_mean = 0.0;
  double relative_error = 0.0;
  std::size_t count = 0;
};

LogMeanEstimate batch_log_mean(std::span<const double> log_samples, std::size_t batches);

/// log(sum(exp(values))) with the max subtracted; -inf for empty input.
double log_sum_exp(std::span<const double> values);

/// Ordinary least squares fit y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Two-sided 95% Student-t quantile with `dof` degrees of freedom.
double student_t_975(std::size_t dof);

double sample_variance(std::span<const double> values);

}  // namespace pamlab
