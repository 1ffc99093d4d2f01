#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace pamlab {

struct QuadratureOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-10;
  int limit = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int status = 0;  // GSL status code; 0 on success
};

using RealFunction = std::function<double(double)>;

// Thin wrappers over the GSL adaptive routines. GSL's abort-on-error handler
// is switched off the first time any of these runs.
QuadratureResult integrate(const RealFunction& f, double a, double b, const QuadratureOptions& opts = {});
QuadratureResult integrate_to_infinity(const RealFunction& f, double a, const QuadratureOptions& opts = {});
// \int_a^b f(x) cos(omega x) dx
QuadratureResult integrate_cos(const RealFunction& f, double omega, double a, double b,
                               const QuadratureOptions& opts = {});

// Gauss-Legendre nodes and weights on [a, b].
std::vector<std::pair<double, double>> gauss_legendre(int n, double a, double b);

void disable_gsl_abort();

}  // namespace pamlab
