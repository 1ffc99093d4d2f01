#pragma once

#include <span>
#include <vector>

#include "pamlab/kernels.hpp"
#include "pamlab/measure.hpp"

namespace pamlab {

struct ChaosOptions {
  int nodes = 20;  // Gauss-Legendre nodes per time coordinate
  bool check_truncation = true;
};

struct ChaosSecondMoment {
  double value = 0.0;          // sum of terms
  std::vector<double> terms;   // k! ||f_k||^2, k = 0..n
  double truncation_bound = 0.0;  // last term / sum
};

// E[u(t,x)^2] truncated after chaos order n <= 3. Only Gaussian-form kernels
// (GaussianBump, any epsilon) are supported: then every order is an exact
// Gaussian integral in space and a nested Gauss-Legendre sum over the time
// simplex. TruncationUnreliable when the last term exceeds 10% of the sum.
ChaosSecondMoment chaos_second_moment(const CovarianceSpec& spec, const Measure& u0, double t,
                                      std::span<const double> x, int max_order, const ChaosOptions& opts = {});

}  // namespace pamlab
