#include "pamlab/chaos.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "pamlab/error.hpp"
#include "pamlab/quadrature.hpp"

namespace pamlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxOrder = 3;
constexpr int kMaxVars = 2 * kMaxOrder;

using Matrix = std::array<std::array<double, kMaxVars>, kMaxVars>;

// log of \int exp(-z'Pz/2 + h'z) dz over R^d
double log_gaussian_integral(Matrix p, std::array<double, kMaxVars> h, int d) {
  double logdet = 0.0;
  for (int j = 0; j < d; ++j) {
    double s = p[j][j];
    for (int k = 0; k < j; ++k) s -= p[j][k] * p[j][k];
    if (!(s > 0.0)) fail(ErrorKind::ModuleError, "chaos: precision matrix not positive definite");
    p[j][j] = std::sqrt(s);
    logdet += 2.0 * std::log(p[j][j]);
    for (int i = j + 1; i < d; ++i) {
      double v = p[i][j];
      for (int k = 0; k < j; ++k) v -= p[i][k] * p[j][k];
      p[i][j] = v / p[j][j];
    }
  }
  // forward solve L y = h; h'P^{-1}h = |y|^2
  double quad = 0.0;
  for (int i = 0; i < d; ++i) {
    double v = h[i];
    for (int k = 0; k < i; ++k) v -= p[i][k] * h[k];
    h[i] = v / p[i][i];
    quad += h[i] * h[i];
  }
  return 0.5 * d * std::log(2.0 * kPi) - 0.5 * logdet + 0.5 * quad;
}

// One coordinate of the order-n pairing for atoms at a, b and target x:
// \int\int prod p(y path from a) prod p(y' path from b) prod exp(-(y_i-y'_i)^2/w) dy dy'
double coordinate_factor(const std::array<double, kMaxOrder + 2>& knots, int n, double a, double b, double x,
                         double w) {
  Matrix p{};
  std::array<double, kMaxVars> h{};
  double c0 = 0.0;
  double lognorm = 0.0;
  for (int side = 0; side < 2; ++side) {
    const double start = side == 0 ? a : b;
    const int off = side * n;
    for (int i = 0; i <= n; ++i) {
      const double dt = knots[i + 1] - knots[i];
      const double q = 1.0 / dt;
      lognorm -= 0.5 * std::log(2.0 * kPi * dt);
      // (z_hi - z_lo)^2 / (2 dt); endpoints fixed at start / x
      const int lo = i == 0 ? -1 : off + i - 1;
      const int hi = i == n ? -1 : off + i;
      const double flo = i == 0 ? start : 0.0;
      const double fhi = i == n ? x : 0.0;
      if (lo >= 0) p[lo][lo] += q;
      if (hi >= 0) p[hi][hi] += q;
      if (lo >= 0 && hi >= 0) {
        p[lo][hi] -= q;
        p[hi][lo] -= q;
      }
      if (lo < 0 && hi >= 0) h[hi] += q * flo;
      if (hi < 0 && lo >= 0) h[lo] += q * fhi;
      if (lo < 0 && hi < 0) {
        c0 += 0.5 * q * (fhi - flo) * (fhi - flo);
      } else {
        if (lo < 0) c0 += 0.5 * q * flo * flo;
        if (hi < 0) c0 += 0.5 * q * fhi * fhi;
      }
    }
  }
  const double g = 2.0 / w;
  for (int i = 0; i < n; ++i) {
    p[i][i] += g;
    p[n + i][n + i] += g;
    p[i][n + i] -= g;
    p[n + i][i] -= g;
  }
  if (n == 0) return std::exp(lognorm - c0);
  return std::exp(lognorm - c0 + log_gaussian_integral(p, h, 2 * n));
}

}  // namespace

ChaosSecondMoment chaos_second_moment(const CovarianceSpec& spec, const Measure& u0, double t,
                                      std::span<const double> x, int max_order, const ChaosOptions& opts) {
  spec.validate();
  u0.validate();
  require(spec.hypothesis == Hypothesis::H1 && spec.bounded(), ErrorKind::UnboundedKernel,
          "chaos expansion needs a bounded (H1) kernel");
  require(spec.kind == KernelKind::GaussianBump, ErrorKind::UnsupportedKernel,
          "chaos expansion is implemented for Gaussian-form kernels only");
  require(u0.atomic(), ErrorKind::InvalidArgument, "chaos expansion needs atomic initial data");
  require(t > 0.0, ErrorKind::NonPositiveTime, "t must be positive");
  require(max_order >= 0 && max_order <= kMaxOrder, ErrorKind::InvalidArgument, "chaos order must be in 0..3");
  require(static_cast<int>(x.size()) == spec.dim && u0.dim() == spec.dim, ErrorKind::InvalidArgument,
          "dimension mismatch");
  require(opts.nodes >= 2, ErrorKind::InvalidArgument, "need at least two quadrature nodes");

  const int dim = spec.dim;
  // gamma_eps(y) = A (1+8 eps)^{-dim/2} exp(-|y|^2 / (1 + 8 eps))
  const double w = 1.0 + 8.0 * spec.epsilon;
  const double gamma0 = spec.amplitude * std::pow(w, -0.5 * dim);
  const auto gl = gauss_legendre(opts.nodes, 0.0, 1.0);

  ChaosSecondMoment out;
  out.terms.assign(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (int n = 0; n <= max_order; ++n) {
    if (n > 0 && gamma0 == 0.0) break;
    double total = 0.0;
    std::array<double, kMaxOrder + 2> knots{};
    knots[0] = 0.0;
    knots[n + 1] = t;
    // s_n = t v_n, s_{k} = s_{k+1} v_k; jacobian t s_n ... s_2
    std::array<int, kMaxOrder> idx{};
    const std::size_t m = gl.size();
    std::size_t combos = 1;
    for (int k = 0; k < n; ++k) combos *= m;
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t r = c;
      for (int k = 0; k < n; ++k) {
        idx[k] = static_cast<int>(r % m);
        r /= m;
      }
      double weight = 1.0;
      double upper = t;
      for (int k = n; k >= 1; --k) {
        const auto& [v, wv] = gl[static_cast<std::size_t>(idx[k - 1])];
        knots[k] = upper * v;
        weight *= upper * wv;
        upper = knots[k];
      }
      double pairs = 0.0;
      for (const auto& a : u0.atoms) {
        for (const auto& b : u0.atoms) {
          double f = a.mass * b.mass;
          for (int d = 0; d < dim; ++d) f *= coordinate_factor(knots, n, a.location[d], b.location[d], x[d], w);
          pairs += f;
        }
      }
      total += weight * pairs;
    }
    out.terms[n] = std::pow(gamma0, n) * total;
  }
  for (double v : out.terms) out.value += v;
  out.truncation_bound = out.value > 0.0 ? out.terms.back() / out.value : 0.0;
  // order 0 is exact, nothing to certify
  if (opts.check_truncation && max_order >= 1 && out.truncation_bound > 0.1) {
    fail(ErrorKind::TruncationUnreliable,
         "chaos: last term is " + std::to_string(out.truncation_bound) + " of the partial sum");
  }
  return out;
}

}  // namespace pamlab
