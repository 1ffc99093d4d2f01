#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pamlab/config.hpp"
#include "pamlab/measure.hpp"
#include "pamlab/quadrature.hpp"

namespace pamlab {

enum class KernelKind { Riesz, GaussianBump, SpaceTimeWhite, CustomSpectral };
enum class Hypothesis { H1, H2 };

// Spatial covariance gamma with spectral measure mu(dxi) = mu(xi) dxi, related by
// gamma(x) = (2pi)^{-dim} \int mu(xi) e^{i xi.x} dxi. Every catalog kernel is
// radial. `amplitude` scales gamma (and mu) linearly; amplitude 0 is the zero
// kernel. Mollification multiplies mu by exp(-2 epsilon |xi|^2).
struct CovarianceSpec {
  KernelKind kind = KernelKind::GaussianBump;
  double eta = 0.0;  // Riesz exponent
  int dim = 1;
  Hypothesis hypothesis = Hypothesis::H1;
  double alpha = 0.0;
  double epsilon = 0.0;
  double amplitude = 1.0;
  // CustomSpectral: mu(|xi|) by linear interpolation in `custom_radii`, zero beyond.
  std::string custom_name;
  std::vector<double> custom_radii;
  std::vector<double> custom_weights;

  static CovarianceSpec riesz(double eta, int dim, double epsilon = 0.0);
  static CovarianceSpec gaussian_bump(int dim = 1);
  static CovarianceSpec white(double epsilon = 0.0);
  static CovarianceSpec custom(std::string name, int dim, std::vector<double> radii, std::vector<double> weights,
                               Hypothesis hypothesis = Hypothesis::H1, double alpha = 0.0);

  CovarianceSpec with_epsilon(double e) const;
  CovarianceSpec scaled(double factor) const;

  // gamma = delta (white, unmollified)
  bool is_delta() const { return kind == KernelKind::SpaceTimeWhite && epsilon == 0.0; }
  // finite gamma(0)
  bool bounded() const;

  void validate() const;  // InvalidSpec / NegativeSpectralWeight
};

std::string to_string(KernelKind kind);
CovarianceSpec spec_from_config(const ConfigMap& cfg);
ConfigMap spec_to_config(const CovarianceSpec& spec);

// Self-calibrated constant c with mu(xi) = c |xi|^{eta-dim} for gamma = |x|^{-eta}.
// Computed once per (eta, dim) and cached.
double riesz_constant(double eta, int dim);

// Spectral density mu_epsilon at radius |xi| (amplitude and mollifier included).
double spectral_density(const CovarianceSpec& spec, double radius);
// Same without the mollifier factor.
double spectral_density_raw(const CovarianceSpec& spec, double radius);

double gamma_eval(const CovarianceSpec& spec, std::span<const double> x, const QuadratureOptions& opts = {});
double gamma_eval(const CovarianceSpec& spec, double r, const QuadratureOptions& opts = {});

// (2pi)^{-dim} \int f(|xi|) e^{i xi.x} dxi for a radial f, truncated at `cutoff`.
double radial_fourier(const RealFunction& f, int dim, double r, double cutoff, const QuadratureOptions& opts = {});

// \int mu(xi) / (1 + |xi|^2) dxi
double dalang_value(const CovarianceSpec& spec);
// Same for an arbitrary radial density in `dim` dimensions; DivergentIntegral on failure.
double dalang_integral(const RealFunction& mu, int dim);

// Fast radial evaluator for repeated lattice use. Closed forms where
// available; mollified Riesz uses a cached spline of gamma_1 plus the scaling
// gamma_eps(x) = eps^{-eta/2} gamma_1(x / sqrt(eps)); custom kernels are tabulated.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(const CovarianceSpec& spec);
  ~KernelEvaluator();
  KernelEvaluator(const KernelEvaluator&);
  KernelEvaluator& operator=(const KernelEvaluator&);

  const CovarianceSpec& spec() const noexcept { return spec_; }
  double radial(double r) const;
  double operator()(std::span<const double> x) const;
  double at_origin() const;

  struct Table;

 private:
  CovarianceSpec spec_;
  std::shared_ptr<const Table> table_;
  double scale_ = 1.0;   // argument scale
  double factor_ = 1.0;  // value factor
};

double heat_kernel(double t, std::span<const double> x);
double heat_kernel(double t, double squared_radius, int dim);
double heat_kernel_1d(double t, double x);

// (p_t * u0)(x)
double heat_convolve_measure(double t, const Measure& u0, std::span<const double> x);

// p_{s(t-s)/t}(y - x0 - (s/t)(x - x0))
double bridge_kernel(double t, double s, std::span<const double> x0, std::span<const double> x,
                     std::span<const double> y);

}  // namespace pamlab
