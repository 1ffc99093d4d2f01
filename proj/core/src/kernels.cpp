#include "pamlab/kernels.hpp"

#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "pamlab/error.hpp"

namespace pamlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpectralFloor = 1e-14;
constexpr double kTableSpacing = 1.0 / 32.0;
constexpr double kTableExtent = 64.0;

double sphere_area(int dim) { return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim); }

double checked(const QuadratureResult& r, ErrorKind kind, const char* what) {
  require(std::isfinite(r.value), kind, std::string(what) + ": quadrature returned a non-finite value");
  return r.value;
}

// \int_0^\infty f over [0,1] and [1, inf); QAGS copes with integrable endpoint singularities.
double half_line(const RealFunction& f, const QuadratureOptions& opts, ErrorKind kind, const char* what) {
  const auto a = integrate(f, 0.0, 1.0, opts);
  const auto b = integrate_to_infinity(f, 1.0, opts);
  if (kind == ErrorKind::DivergentIntegral) {
    require(a.status == 0 && b.status == 0, kind, std::string(what) + ": integral does not converge");
  }
  return checked(a, kind, what) + checked(b, kind, what);
}

double custom_weight(const CovarianceSpec& s, double r) {
  const auto& R = s.custom_radii;
  const auto& W = s.custom_weights;
  if (r < R.front() || r > R.back()) return 0.0;
  const auto it = std::upper_bound(R.begin(), R.end(), r);
  if (it == R.end()) return W.back();
  const auto i = static_cast<std::size_t>(it - R.begin());
  const double u = (r - R[i - 1]) / (R[i] - R[i - 1]);
  return (1.0 - u) * W[i - 1] + u * W[i];
}

double spectral_cutoff(const CovarianceSpec& spec) {
  if (spec.kind == KernelKind::CustomSpectral) return spec.custom_radii.back();
  double r = 1.0;
  while (spectral_density(spec, r) >= kSpectralFloor && r < 1e6) r *= 1.05;
  return r;
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Riesz: return "riesz";
    case KernelKind::GaussianBump: return "gaussian-bump";
    case KernelKind::SpaceTimeWhite: return "white";
    case KernelKind::CustomSpectral: return "custom";
  }
  return "unknown";
}

CovarianceSpec CovarianceSpec::riesz(double eta, int dim, double epsilon) {
  CovarianceSpec s;
  s.kind = KernelKind::Riesz;
  s.eta = eta;
  s.dim = dim;
  s.hypothesis = Hypothesis::H2;
  s.alpha = eta;
  s.epsilon = epsilon;
  return s;
}

CovarianceSpec CovarianceSpec::gaussian_bump(int dim) {
  CovarianceSpec s;
  s.dim = dim;
  return s;
}

CovarianceSpec CovarianceSpec::white(double epsilon) {
  CovarianceSpec s;
  s.kind = KernelKind::SpaceTimeWhite;
  s.dim = 1;
  s.hypothesis = Hypothesis::H2;
  s.alpha = 1.0;
  s.epsilon = epsilon;
  return s;
}

CovarianceSpec CovarianceSpec::custom(std::string name, int dim, std::vector<double> radii,
                                      std::vector<double> weights, Hypothesis hypothesis, double alpha) {
  CovarianceSpec s;
  s.kind = KernelKind::CustomSpectral;
  s.dim = dim;
  s.hypothesis = hypothesis;
  s.alpha = alpha;
  s.custom_name = std::move(name);
  s.custom_radii = std::move(radii);
  s.custom_weights = std::move(weights);
  return s;
}

CovarianceSpec CovarianceSpec::with_epsilon(double e) const {
  auto s = *this;
  s.epsilon = e;
  return s;
}

CovarianceSpec CovarianceSpec::scaled(double factor) const {
  auto s = *this;
  s.amplitude *= factor;
  return s;
}

bool CovarianceSpec::bounded() const {
  if (kind == KernelKind::Riesz || kind == KernelKind::SpaceTimeWhite) return epsilon > 0.0 || amplitude == 0.0;
  return true;
}

void CovarianceSpec::validate() const {
  require(dim >= 1 && dim <= 3, ErrorKind::InvalidSpec, "dim must be 1..3");
  require(std::isfinite(epsilon) && epsilon >= 0.0, ErrorKind::InvalidSpec, "epsilon must be >= 0");
  require(std::isfinite(amplitude) && amplitude >= 0.0, ErrorKind::InvalidSpec, "amplitude must be >= 0");
  switch (kind) {
    case KernelKind::Riesz:
      require(eta > 0.0 && eta < std::min(2.0, static_cast<double>(dim)), ErrorKind::InvalidSpec,
              "riesz: need 0 < eta < min(2, dim)");
      require(hypothesis == Hypothesis::H2 && alpha == eta, ErrorKind::InvalidSpec,
              "riesz: hypothesis must be H2 with alpha = eta");
      break;
    case KernelKind::SpaceTimeWhite:
      require(dim == 1, ErrorKind::InvalidSpec, "white: dim must be 1");
      require(hypothesis == Hypothesis::H2 && alpha == 1.0, ErrorKind::InvalidSpec,
              "white: hypothesis must be H2 with alpha = 1");
      break;
    case KernelKind::GaussianBump:
      require(hypothesis == Hypothesis::H1 && alpha == 0.0, ErrorKind::InvalidSpec,
              "gaussian-bump: hypothesis must be H1 with alpha = 0");
      break;
    case KernelKind::CustomSpectral: {
      const auto& R = custom_radii;
      const auto& W = custom_weights;
      require(R.size() >= 2 && R.size() == W.size(), ErrorKind::InvalidSpec,
              "custom: need >= 2 (radius, weight) rows");
      for (std::size_t i = 0; i < R.size(); ++i) {
        require(std::isfinite(R[i]) && R[i] >= 0.0 && (i == 0 || R[i] > R[i - 1]), ErrorKind::InvalidSpec,
                "custom: radii must be increasing and >= 0");
        require(std::isfinite(W[i]), ErrorKind::InvalidSpec, "custom: non-finite weight");
        require(W[i] >= 0.0, ErrorKind::NegativeSpectralWeight, "custom: negative spectral weight");
      }
      if (hypothesis == Hypothesis::H1) {
        require(alpha == 0.0, ErrorKind::InvalidSpec, "custom: H1 requires alpha = 0");
      } else {
        require(alpha > 0.0 && alpha < 2.0, ErrorKind::InvalidSpec, "custom: H2 requires 0 < alpha < 2");
      }
      break;
    }
  }
}

CovarianceSpec spec_from_config(const ConfigMap& cfg) {
  std::string kind = cfg.get_string("kind");
  std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(kind.begin(), kind.end(), '_', '-');
  const int dim = static_cast<int>(cfg.get_int("dim", 1));
  const double eps = cfg.get_double("epsilon", 0.0);
  CovarianceSpec s;
  if (kind == "riesz") {
    s = CovarianceSpec::riesz(cfg.get_double("eta"), dim, eps);
  } else if (kind == "gaussian-bump" || kind == "gaussianbump" || kind == "gaussian") {
    s = CovarianceSpec::gaussian_bump(dim);
    s.epsilon = eps;
  } else if (kind == "zero") {
    s = CovarianceSpec::gaussian_bump(dim);
    s.amplitude = 0.0;
  } else if (kind == "white" || kind == "space-time-white" || kind == "spacetimewhite" || kind == "delta") {
    s = CovarianceSpec::white(kind == "delta" ? 0.0 : eps);
    s.dim = dim;
  } else if (kind == "custom" || kind == "custom-spectral") {
    s = CovarianceSpec::custom(cfg.get_string("name", "table"), dim, cfg.get_doubles("radii"),
                               cfg.get_doubles("weights"));
    s.epsilon = eps;
  } else {
    fail(ErrorKind::InvalidSpec, "unknown covariance kind '" + kind + "'");
  }
  if (cfg.has("hypothesis")) {
    const auto h = cfg.get_string("hypothesis");
    require(h == "H1" || h == "H2" || h == "h1" || h == "h2", ErrorKind::InvalidSpec, "hypothesis must be H1 or H2");
    s.hypothesis = (h == "H1" || h == "h1") ? Hypothesis::H1 : Hypothesis::H2;
  }
  if (cfg.has("alpha")) s.alpha = cfg.get_double("alpha");
  if (cfg.has("amplitude")) s.amplitude = cfg.get_double("amplitude");
  s.validate();
  return s;
}

ConfigMap spec_to_config(const CovarianceSpec& s) {
  ConfigMap c;
  c.set("kind", to_string(s.kind));
  c.set("dim", std::to_string(s.dim));
  c.set("hypothesis", s.hypothesis == Hypothesis::H1 ? "H1" : "H2");
  c.set("alpha", format_double(s.alpha));
  c.set("epsilon", format_double(s.epsilon));
  c.set("amplitude", format_double(s.amplitude));
  if (s.kind == KernelKind::Riesz) c.set("eta", format_double(s.eta));
  if (s.kind == KernelKind::CustomSpectral) {
    std::string r, w;
    for (std::size_t i = 0; i < s.custom_radii.size(); ++i) {
      r += (i ? "," : "") + format_double(s.custom_radii[i]);
      w += (i ? "," : "") + format_double(s.custom_weights[i]);
    }
    c.set("name", s.custom_name);
    c.set("radii", r);
    c.set("weights", w);
  }
  return c;
}

double riesz_constant(double eta, int dim) {
  static std::mutex mu;
  static std::map<std::pair<double, int>, double> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_pair(eta, dim);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  // Pair gamma and mu against the standard Gaussian:
  // \int |x|^{-eta} p_1(x) dx = (2pi)^{-dim} c \int |xi|^{eta-dim} e^{-|xi|^2/2} dxi.
  QuadratureOptions opts;
  opts.abs_tol = 0.0;
  opts.rel_tol = 1e-12;
  const double l = dim;
  const double num = half_line([&](double r) { return std::pow(r, l - 1.0 - eta) * std::exp(-0.5 * r * r); },
                               opts, ErrorKind::DivergentIntegral, "riesz calibration");
  const double den = half_line([&](double r) { return std::pow(r, eta - 1.0) * std::exp(-0.5 * r * r); }, opts,
                               ErrorKind::DivergentIntegral, "riesz calibration");
  const double c = std::pow(2.0 * kPi, 0.5 * l) * num / den;
  cache.emplace(key, c);
  return c;
}

double spectral_density_raw(const CovarianceSpec& s, double r) {
  switch (s.kind) {
    case KernelKind::Riesz:
      return s.amplitude * riesz_constant(s.eta, s.dim) * std::pow(r, s.eta - s.dim);
    case KernelKind::GaussianBump:
      return s.amplitude * std::pow(kPi, 0.5 * s.dim) * std::exp(-0.25 * r * r);
    case KernelKind::SpaceTimeWhite:
      return s.amplitude;
    case KernelKind::CustomSpectral:
      return s.amplitude * custom_weight(s, r);
  }
  return 0.0;
}

double spectral_density(const CovarianceSpec& s, double r) {
  const double raw = spectral_density_raw(s, r);
  if (s.epsilon == 0.0 || raw == 0.0) return raw;
  return raw * std::exp(-2.0 * s.epsilon * r * r);
}

double radial_fourier(const RealFunction& f, int dim, double r, double cutoff, const QuadratureOptions& opts) {
  if (dim == 1) {
    if (r == 0.0) return checked(integrate(f, 0.0, cutoff, opts), ErrorKind::SingularEvaluation, "fourier") / kPi;
    return checked(integrate_cos(f, r, 0.0, cutoff, opts), ErrorKind::SingularEvaluation, "fourier") / kPi;
  }
  const double l = dim;
  if (r == 0.0) {
    const auto g = [&](double p) { return f(p) * std::pow(p, l - 1.0); };
    return sphere_area(dim) * std::pow(2.0 * kPi, -l) *
           checked(integrate(g, 0.0, cutoff, opts), ErrorKind::SingularEvaluation, "fourier");
  }
  const double nu = 0.5 * l - 1.0;
  const auto g = [&](double p) { return f(p) * gsl_sf_bessel_Jnu(nu, p * r) * std::pow(p, 0.5 * l); };
  // One chunk per Bessel period keeps each QAGS call non-oscillatory.
  const double chunk = 2.0 * kPi / r;
  const int pieces = std::max(1, static_cast<int>(std::ceil(cutoff / chunk)));
  QuadratureOptions local = opts;
  local.abs_tol = opts.abs_tol / pieces;
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double a = cutoff * i / pieces;
    const double b = cutoff * (i + 1) / pieces;
    total += checked(integrate(g, a, b, local), ErrorKind::SingularEvaluation, "fourier");
  }
  return std::pow(2.0 * kPi, -0.5 * l) * std::pow(r, 1.0 - 0.5 * l) * total;
}

double gamma_eval(const CovarianceSpec& spec, std::span<const double> x, const QuadratureOptions& opts) {
  require(static_cast<int>(x.size()) == spec.dim, ErrorKind::InvalidArgument, "gamma_eval: dimension mismatch");
  return gamma_eval(spec, std::sqrt(squared_norm(x)), opts);
}

double gamma_eval(const CovarianceSpec& spec, double r, const QuadratureOptions& opts) {
  spec.validate();
  r = std::abs(r);
  const double A = spec.amplitude;
  switch (spec.kind) {
    case KernelKind::GaussianBump: {
      const double w = 1.0 + 8.0 * spec.epsilon;
      return A * std::pow(w, -0.5 * spec.dim) * std::exp(-r * r / w);
    }
    case KernelKind::SpaceTimeWhite:
      require(spec.epsilon > 0.0, ErrorKind::SingularEvaluation, "white kernel has no pointwise value");
      return A * heat_kernel(4.0 * spec.epsilon, r * r, 1);
    case KernelKind::Riesz:
      if (spec.epsilon == 0.0) {
        require(r > 0.0, ErrorKind::SingularEvaluation, "riesz kernel is singular at 0");
        return A * std::pow(r, -spec.eta);
      }
      break;
    case KernelKind::CustomSpectral:
      break;
  }
  if (A == 0.0) return 0.0;
  return radial_fourier([&](double p) { return spectral_density(spec, p); }, spec.dim, r, spectral_cutoff(spec),
                        opts);
}

double dalang_integral(const RealFunction& mu, int dim) {
  QuadratureOptions opts;
  opts.abs_tol = 1e-10;
  opts.rel_tol = 1e-10;
  const auto g = [&](double r) { return mu(r) * std::pow(r, dim - 1) / (1.0 + r * r); };
  return sphere_area(dim) * half_line(g, opts, ErrorKind::DivergentIntegral, "dalang");
}

double dalang_value(const CovarianceSpec& spec) {
  spec.validate();
  require(spec.hypothesis == Hypothesis::H2, ErrorKind::InvalidSpec, "dalang_value: hypothesis must be H2");
  if (spec.kind == KernelKind::CustomSpectral) {
    const auto g = [&](double r) { return spectral_density_raw(spec, r) * std::pow(r, spec.dim - 1) / (1.0 + r * r); };
    return sphere_area(spec.dim) * checked(integrate(g, 0.0, spec.custom_radii.back()), ErrorKind::DivergentIntegral,
                                           "dalang");
  }
  return dalang_integral([&](double r) { return spectral_density_raw(spec, r); }, spec.dim);
}

// ---------------------------------------------------------------------------

struct KernelEvaluator::Table {
  gsl_spline* spline = nullptr;
  double extent = kTableExtent;
  // Riesz tail: r^{-eta}(1 + a/r^2 + b/r^4)
  bool riesz_tail = false;
  double eta = 0.0, a = 0.0, b = 0.0;

  ~Table() {
    if (spline) gsl_spline_free(spline);
  }
  double eval(double r) const {
    if (r <= extent) return gsl_spline_eval(spline, r, nullptr);
    if (!riesz_tail) return 0.0;
    const double i2 = 1.0 / (r * r);
    return std::pow(r, -eta) * (1.0 + a * i2 + b * i2 * i2);
  }
};

namespace {

std::shared_ptr<const KernelEvaluator::Table> build_table(const CovarianceSpec& spec, bool riesz) {
  auto t = std::make_shared<KernelEvaluator::Table>();
  const int n = static_cast<int>(kTableExtent / kTableSpacing) + 1;
  std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
  QuadratureOptions opts;
  opts.abs_tol = 1e-11;
  opts.rel_tol = 1e-11;
  const double cutoff = spectral_cutoff(spec);
  const auto mu = [&](double p) { return spectral_density(spec, p); };
  for (int i = 0; i < n; ++i) {
    xs[i] = i * kTableSpacing;
    ys[i] = radial_fourier(mu, spec.dim, xs[i], cutoff, opts);
  }
  t->spline = gsl_spline_alloc(gsl_interp_cspline, static_cast<std::size_t>(n));
  gsl_spline_init(t->spline, xs.data(), ys.data(), static_cast<std::size_t>(n));
  if (riesz) {
    const double e = spec.eta, l = spec.dim;
    t->riesz_tail = true;
    t->eta = e;
    t->a = 2.0 * e * (e + 2.0 - l);
    t->b = 2.0 * e * (e + 2.0 - l) * (e + 2.0) * (e + 4.0 - l);
  }
  return t;
}

}  // namespace

KernelEvaluator::KernelEvaluator(const CovarianceSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.amplitude == 0.0) return;
  if (spec_.kind == KernelKind::Riesz && spec_.epsilon > 0.0) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, std::shared_ptr<const Table>> cache;
    std::lock_guard lock(mu);
    const auto key = std::make_pair(spec_.eta, spec_.dim);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_table(CovarianceSpec::riesz(spec_.eta, spec_.dim, 1.0), true)).first;
    table_ = it->second;
    scale_ = 1.0 / std::sqrt(spec_.epsilon);
    factor_ = spec_.amplitude * std::pow(spec_.epsilon, -0.5 * spec_.eta);
  } else if (spec_.kind == KernelKind::CustomSpectral) {
    auto unit = spec_;
    unit.amplitude = 1.0;
    table_ = build_table(unit, false);
    factor_ = spec_.amplitude;
  }
}

KernelEvaluator::~KernelEvaluator() = default;
KernelEvaluator::KernelEvaluator(const KernelEvaluator&) = default;
KernelEvaluator& KernelEvaluator::operator=(const KernelEvaluator&) = default;

double KernelEvaluator::radial(double r) const {
  r = std::abs(r);
  const double A = spec_.amplitude;
  if (A == 0.0) return 0.0;
  if (table_) return factor_ * table_->eval(r * scale_);
  switch (spec_.kind) {
    case KernelKind::GaussianBump: {
      const double w = 1.0 + 8.0 * spec_.epsilon;
      return A * std::pow(w, -0.5 * spec_.dim) * std::exp(-r * r / w);
    }
    case KernelKind::SpaceTimeWhite:
      if (spec_.epsilon > 0.0) return A * heat_kernel(4.0 * spec_.epsilon, r * r, 1);
      require(r > 0.0, ErrorKind::SingularEvaluation, "white kernel has no pointwise value");
      return 0.0;
    case KernelKind::Riesz:
      require(r > 0.0, ErrorKind::SingularEvaluation, "riesz kernel is singular at 0");
      return A * std::pow(r, -spec_.eta);
    case KernelKind::CustomSpectral:
      break;
  }
  return 0.0;
}

double KernelEvaluator::operator()(std::span<const double> x) const { return radial(std::sqrt(squared_norm(x))); }

double KernelEvaluator::at_origin() const { return radial(0.0); }

// ---------------------------------------------------------------------------

double heat_kernel(double t, double squared_radius, int dim) {
  require(t > 0.0, ErrorKind::NonPositiveTime, "heat kernel needs t > 0");
  return std::pow(2.0 * kPi * t, -0.5 * dim) * std::exp(-squared_radius / (2.0 * t));
}

double heat_kernel(double t, std::span<const double> x) {
  return heat_kernel(t, squared_norm(x), static_cast<int>(x.size()));
}

double heat_kernel_1d(double t, double x) { return heat_kernel(t, x * x, 1); }

double heat_convolve_measure(double t, const Measure& u0, std::span<const double> x) {
  require(t > 0.0, ErrorKind::NonPositiveTime, "heat_convolve_measure needs t > 0");
  require(!u0.atoms.empty() || !u0.density.empty(), ErrorKind::EmptyMeasure, "empty initial measure");
  const int dim = static_cast<int>(x.size());
  double total = 0.0;
  for (const auto& a : u0.atoms) total += a.mass * heat_kernel(t, squared_distance(a.location, x), dim);
  for (const auto& d : u0.density) {
    const double w = std::pow(d.spacing, d.dim);
    double s = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      if (d.values[i] == 0.0) continue;
      const auto y = d.site(i);
      s += d.values[i] * heat_kernel(t, squared_distance(y, x), dim);
    }
    total += w * s;
  }
  require(total > 0.0 || u0.total_mass() > 0.0, ErrorKind::EmptyMeasure, "initial measure has zero mass");
  return total;
}

double bridge_kernel(double t, double s, std::span<const double> x0, std::span<const double> x,
                     std::span<const double> y) {
  require(s > 0.0 && s < t, ErrorKind::TimeOutOfRange, "bridge_kernel needs 0 < s < t");
  const double var = s * (t - s) / t;
  double r2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - x0[i] - (s / t) * (x[i] - x0[i]);
    r2 += d * d;
  }
  return heat_kernel(var, r2, static_cast<int>(y.size()));
}

}  // namespace pamlab
