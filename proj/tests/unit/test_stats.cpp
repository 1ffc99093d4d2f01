#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pamlab/error.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"

using namespace pamlab;

TEST(Stats, BatchMeanOfConstant) {
  std::vector<double> v(1000, 2.5);
  const auto e = batch_mean(v, 20);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.standard_error, 0.0);
}

TEST(Stats, BatchMeanStandardError) {
  Stream s({5, Purpose::Synthetic, 0, 0});
  std::vector<double> v(100000);
  for (auto& x : v) x = s.normal();
  const auto e = batch_mean(v, 50);
  EXPECT_NEAR(e.standard_error, 1.0 / std::sqrt(1e5), 0.3 / std::sqrt(1e5));
}

TEST(Stats, LogMeanMatchesLinear) {
  std::vector<double> v{0.1, 0.5, 1.3, 2.0, -0.7, 0.0};
  std::vector<double> lv;
  double m = 0;
  for (double x : v) {
    lv.push_back(std::log(x + 2.0));
    m += x + 2.0;
  }
  m /= v.size();
  EXPECT_NEAR(batch_log_mean(lv, 3).log_mean, std::log(m), 1e-14);
}

TEST(Stats, LogSumExpHuge) {
  std::vector<double> v{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
}

TEST(Stats, FitLineExact) {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double xi : x) y.push_back(2.0 * xi + 0.3);
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.3, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(Stats, FitLineTooFew) {
  std::vector<double> x{1}, y{2};
  EXPECT_THROW(fit_line(x, y), Error);
}

TEST(Stats, StudentQuantile) { EXPECT_NEAR(student_t_975(10), 2.228138851986, 1e-9); }
