#include "pamlab/variational.hpp"

#include <gsl/gsl_eigen.h>
#include <gsl/gsl_matrix.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "pamlab/error.hpp"
#include "pamlab/fft.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/quadrature.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

std::size_t VariationalGrid::sites() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
  return n;
}

void VariationalGrid::validate() const {
  require(dim == 1 || dim == 2, ErrorKind::InvalidArgument, "variational grid must be 1-d or 2-d");
  require(points >= 16 && points % 2 == 0, ErrorKind::InvalidArgument, "variational grid needs an even point count >= 16");
  require(extent > 0.0, ErrorKind::InvalidArgument, "variational extent must be positive");
}

namespace {

enum class Potential { Kernel, Delta, Zero };

// average of |x|^{-eta} over the lattice cell at the origin
double riesz_cell_average(double eta, int dim, double h) {
  const double b = 0.5 * h;
  if (dim == 1) return std::pow(b, -eta) / (1.0 - eta);
  // square [-b, b]^2: 8 b^{2-eta} / (2-eta) int_0^{pi/4} sec^{2-eta}
  double acc = 0.0;
  for (const auto& [th, w] : gauss_legendre(40, 0.0, 0.25 * std::numbers::pi)) acc += w * std::pow(std::cos(th), eta - 2.0);
  return 8.0 * std::pow(b, 2.0 - eta) / (2.0 - eta) * acc / (h * h);
}

class Problem {
 public:
  Problem(const CovarianceSpec& spec, const VariationalGrid& grid, VariationalObjective obj)
      : grid_(grid), obj_(obj), fft_(std::vector<int>(static_cast<std::size_t>(grid.dim), grid.points)) {
    grid.validate();
    spec.validate();
    require(spec.dim == grid.dim, ErrorKind::InvalidArgument, "kernel and grid dimensions differ");
    h_ = grid.spacing();
    cell_ = std::pow(h_, grid.dim);
    n_ = grid.sites();
    if (spec.amplitude == 0.0) {
      pot_ = Potential::Zero;
    } else if (spec.is_delta()) {
      pot_ = Potential::Delta;
    } else {
      pot_ = Potential::Kernel;
      build_kernel(spec);
    }
    sigma_.resize(fft_.spectral_size());
    for_each_wavenumber(fft_, h_, [&](std::size_t flat, double, std::span<const double> k) {
      double s = 0.0;
      for (double ka : k) {
        const double v = 2.0 * std::sin(0.5 * ka * h_) / h_;
        s += v * v;
      }
      sigma_[flat] = s;
    });
    work_.resize(n_);
  }

  const VariationalGrid& grid() const { return grid_; }
  std::size_t size() const { return n_; }
  double cell() const { return cell_; }
  Potential potential_kind() const { return pot_; }

  double dot(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += a[i] * b[i];
    return s * cell_;
  }

  // c = cell * sum_j k_{i-j} a_j
  void convolve(std::span<const double> a, std::span<double> c) {
    auto real = fft_.real();
    std::copy(a.begin(), a.end(), real.begin());
    fft_.forward();
    auto sp = fft_.spectrum();
    for (std::size_t k = 0; k < sp.size(); ++k) sp[k] *= khat_[k];
    fft_.backward();
    const double scale = cell_ / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = real[i] * scale;
  }

  double kinetic(std::span<const double> g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (int a = 0; a < grid_.dim; ++a) {
        const double d = g[neighbour(i, a, 1)] - g[i];
        s += d * d;
      }
    }
    return s * cell_ / (h_ * h_);
  }

  // -Delta_h g
  void neg_laplacian(std::span<const double> g, std::span<double> out) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int a = 0; a < grid_.dim; ++a) s += 2.0 * g[i] - g[neighbour(i, a, 1)] - g[neighbour(i, a, -1)];
      out[i] = s / (h_ * h_);
    }
  }

  ObjectiveValue evaluate(std::span<const double> g, std::vector<double>* conv = nullptr) {
    ObjectiveValue v;
    v.norm_squared = dot(g, g);
    v.kinetic = kinetic(g);
    if (pot_ == Potential::Delta) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i) s += g[i] * g[i] * g[i] * g[i];
      v.potential = s * cell_;
    } else if (pot_ == Potential::Kernel) {
      for (std::size_t i = 0; i < n_; ++i) work_[i] = g[i] * g[i];
      std::vector<double> c(n_);
      convolve(work_, c);
      v.potential = dot(c, work_);
      if (conv) *conv = std::move(c);
    }
    v.value = combine(v.potential, v.kinetic);
    return v;
  }

  double combine(double p, double k) const {
    return obj_ == VariationalObjective::Hartree ? p - k : std::sqrt(std::max(p, 0.0)) - 0.5 * k;
  }

  // functional derivative of the objective
  ObjectiveValue gradient(std::span<const double> g, std::span<double> grad) {
    std::vector<double> conv;
    const auto v = evaluate(g, &conv);
    std::vector<double> lap(n_);
    neg_laplacian(g, lap);
    const bool hartree = obj_ == VariationalObjective::Hartree;
    const double pf = hartree ? 1.0 : (v.potential > 0.0 ? 0.5 / std::sqrt(v.potential) : 0.0);
    const double kf = hartree ? 2.0 : 1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double gp = 0.0;
      if (pot_ == Potential::Delta) gp = 4.0 * g[i] * g[i] * g[i];
      if (pot_ == Potential::Kernel) gp = 4.0 * conv[i] * g[i];
      grad[i] = pf * gp - kf * lap[i];
    }
    return v;
  }

  // (1 - Delta_h)^{-1}
  void precondition(std::span<double> v) {
    auto real = fft_.real();
    std::copy(v.begin(), v.end(), real.begin());
    fft_.forward();
    auto sp = fft_.spectrum();
    for (std::size_t k = 0; k < sp.size(); ++k) sp[k] /= (1.0 + sigma_[k]);
    fft_.backward();
    for (std::size_t i = 0; i < n_; ++i) v[i] = real[i] / static_cast<double>(n_);
  }

  // the same objective from the lattice spectral symbols (Parseval)
  double fourier_value(std::span<const double> g) {
    auto real = fft_.real();
    const std::size_t last = static_cast<std::size_t>(grid_.points / 2 + 1);
    auto weight = [&](std::size_t flat) {
      const std::size_t j = flat % last;
      return (j == 0 || j == last - 1) ? 1.0 : 2.0;
    };
    std::copy(g.begin(), g.end(), real.begin());
    fft_.forward();
    double kin = 0.0;
    auto sp = fft_.spectrum();
    for (std::size_t k = 0; k < sp.size(); ++k) kin += weight(k) * sigma_[k] * std::norm(sp[k]);
    kin *= cell_ / static_cast<double>(n_);
    double pot = 0.0;
    if (pot_ != Potential::Zero) {
      for (std::size_t i = 0; i < n_; ++i) real[i] = g[i] * g[i];
      fft_.forward();
      sp = fft_.spectrum();
      for (std::size_t k = 0; k < sp.size(); ++k) {
        const double symbol = pot_ == Potential::Delta ? 1.0 / cell_ : khat_[k];
        pot += weight(k) * symbol * std::norm(sp[k]);
      }
      pot *= cell_ * cell_ / static_cast<double>(n_);
    }
    return combine(pot, kin);
  }

  std::size_t neighbour(std::size_t i, int axis, int step) const {
    const std::size_t N = static_cast<std::size_t>(grid_.points);
    std::size_t stride = 1;
    for (int a = grid_.dim - 1; a > axis; --a) stride *= N;
    const std::size_t coord = (i / stride) % N;
    const std::size_t moved = (coord + N + static_cast<std::size_t>(step + static_cast<int>(N))) % N;
    return i + (moved - coord) * stride;
  }

 private:
  void build_kernel(const CovarianceSpec& spec) {
    const KernelEvaluator gamma(spec);
    auto real = fft_.real();
    const int N = grid_.points;
    std::vector<double> lag(static_cast<std::size_t>(grid_.dim));
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t rem = i;
      double r2 = 0.0;
      for (int a = grid_.dim - 1; a >= 0; --a) {
        const int c = static_cast<int>(rem % static_cast<std::size_t>(N));
        rem /= static_cast<std::size_t>(N);
        const double d = (c <= N / 2 ? c : c - N) * h_;
        r2 += d * d;
      }
      if (r2 == 0.0 && !spec.bounded()) {
        require(spec.kind == KernelKind::Riesz, ErrorKind::UnsupportedKernel, "unbounded kernel without a cell average");
        real[i] = spec.amplitude * riesz_cell_average(spec.eta, grid_.dim, h_);
      } else {
        real[i] = gamma.radial(std::sqrt(r2));
      }
    }
    fft_.forward();
    const auto sp = fft_.spectrum();
    khat_.resize(sp.size());
    for (std::size_t k = 0; k < sp.size(); ++k) khat_[k] = sp[k].real();
  }

  VariationalGrid grid_;
  VariationalObjective obj_;
  RealFft fft_;
  Potential pot_ = Potential::Kernel;
  double h_ = 0.0;
  double cell_ = 0.0;
  std::size_t n_ = 0;
  std::vector<double> khat_;
  std::vector<double> sigma_;
  std::vector<double> work_;
};

void normalize(Problem& p, std::span<double> g) {
  const double n = std::sqrt(p.dot(g, g));
  for (double& v : g) v /= n;
}

std::vector<double> initial_guess(const VariationalGrid& grid, double width, int restart, std::uint64_t seed) {
  const std::size_t n = grid.sites();
  const double h = grid.spacing();
  const int N = grid.points;
  std::vector<double> g(n);
  Stream rng({seed, Purpose::Variational, static_cast<std::uint32_t>(restart), 0});
  // restarts vary the width and add a smooth random perturbation
  const double w = restart == 0 ? width : width * std::exp2(rng.uniform() * 3.0 - 1.5);
  const double amp = restart == 0 ? 0.0 : 0.1;
  std::vector<double> shift(static_cast<std::size_t>(grid.dim));
  for (double& s : shift) s = amp * w * (rng.uniform() - 0.5);
  std::array<double, 4> coef{};
  for (double& c : coef) c = amp * (2.0 * rng.uniform() - 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rem = i;
    double r2 = 0.0, first = 0.0;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const int c = static_cast<int>(rem % static_cast<std::size_t>(N));
      rem /= static_cast<std::size_t>(N);
      const double x = (c - N / 2) * h - shift[a];
      r2 += x * x;
      if (a == 0) first = x;
    }
    const double base = std::exp(-r2 / (2.0 * w * w));
    const double y = first / w;
    g[i] = base * (1.0 + coef[0] * y + coef[1] * y * y + coef[2] * std::cos(3.0 * y) + coef[3] * std::sin(2.0 * y));
  }
  return g;
}

// cyclic shift moving the peak of |g| to the lattice centre
void recentre(const VariationalGrid& grid, std::vector<double>& g) {
  const int N = grid.points;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g[i]) > std::abs(g[peak])) peak = i;
  std::vector<int> offset(static_cast<std::size_t>(grid.dim));
  std::size_t rem = peak;
  for (int a = grid.dim - 1; a >= 0; --a) {
    offset[a] = N / 2 - static_cast<int>(rem % static_cast<std::size_t>(N));
    rem /= static_cast<std::size_t>(N);
  }
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t r = i, target = 0, stride = 1;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const int c = static_cast<int>(r % static_cast<std::size_t>(N));
      r /= static_cast<std::size_t>(N);
      target += static_cast<std::size_t>(((c + offset[a]) % N + N) % N) * stride;
      stride *= static_cast<std::size_t>(N);
    }
    out[target] = g[i];
  }
  g = std::move(out);
}

double boundary_max(const VariationalGrid& grid, std::span<const double> g) {
  const int N = grid.points;
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t r = i;
    bool edge = false;
    for (int a = 0; a < grid.dim; ++a) {
      const int c = static_cast<int>(r % static_cast<std::size_t>(N));
      r /= static_cast<std::size_t>(N);
      edge = edge || c == 0 || c == N - 1;
    }
    if (edge) m = std::max(m, std::abs(g[i]));
  }
  return m;
}

VariationalState ascend(Problem& p, std::vector<double> g, const VariationalOptions& opts) {
  const std::size_t n = p.size();
  normalize(p, g);
  std::vector<double> grad(n), dir(n), trial(n);
  VariationalState st;
  st.grid = p.grid();
  int it = 0;
  double residual = std::numeric_limits<double>::infinity();
  ObjectiveValue cur;
  bool stalled = false;
  for (; it <= opts.max_iter; ++it) {
    cur = p.gradient(g, grad);
    const double radial = p.dot(grad, g);
    for (std::size_t i = 0; i < n; ++i) grad[i] -= radial * g[i];
    residual = std::sqrt(p.dot(grad, grad));
    if (residual < opts.tol || it == opts.max_iter) break;
    dir = grad;
    p.precondition(dir);
    const double back = p.dot(dir, g);
    for (std::size_t i = 0; i < n; ++i) dir[i] -= back * g[i];
    const double slope = p.dot(grad, dir);
    double tau = 0.5;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = g[i] + tau * dir[i];
      normalize(p, trial);
      const auto tv = p.evaluate(trial);
      if (tv.value >= cur.value + 1e-4 * tau * slope) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    g.swap(trial);
  }
  if (residual >= opts.tol) {
    // a stalled line search at round-off level counts as converged
    if (!(stalled && residual < 100.0 * opts.tol))
      fail(ErrorKind::NoConvergence, "variational ascent stopped with residual " + std::to_string(residual) +
                                         " after " + std::to_string(it) + " iterations");
  }
  st.values = std::move(g);
  st.norm = std::sqrt(p.dot(st.values, st.values));
  st.energy = cur.value;
  st.potential = cur.potential;
  st.kinetic = cur.kinetic;
  st.residual = residual;
  st.iterations = it;
  return st;
}

}  // namespace

VariationalResult optimize(const CovarianceSpec& spec, const VariationalGrid& grid, VariationalObjective objective,
                           const VariationalOptions& opts) {
  require(opts.restarts >= 1, ErrorKind::InvalidArgument, "need at least one start");
  require(opts.tol > 0.0 && opts.max_iter > 0, ErrorKind::InvalidArgument, "bad optimizer tolerances");
  Problem probe(spec, grid, objective);
  const bool zero = probe.potential_kind() == Potential::Zero;
  std::vector<VariationalState> states(static_cast<std::size_t>(opts.restarts));
  parallel_for(states.size(), opts.workers, [&](std::size_t r, int) {
    Problem p(spec, grid, objective);
    states[r] = ascend(p, initial_guess(grid, opts.initial_width, static_cast<int>(r), opts.seed), opts);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < states.size(); ++r) {
    const auto& a = states[r];
    const auto& b = states[best];
    if (a.energy > b.energy + 1e-12 * std::abs(b.energy) ||
        (std::abs(a.energy - b.energy) <= 1e-12 * std::abs(b.energy) && a.residual < b.residual))
      best = r;
  }
  VariationalResult out;
  out.state = states[best];
  recentre(grid, out.state.values);
  if (!zero && boundary_max(grid, out.state.values) > 1e-6)
    fail(ErrorKind::DomainTooSmall, "maximizer does not decay below 1e-6 at the boundary; enlarge the extent");
  out.value = out.state.energy;
  out.fourier_value = probe.fourier_value(out.state.values);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : states) {
    out.restart_values.push_back(s.energy);
    lo = std::min(lo, s.energy);
    hi = std::max(hi, s.energy);
  }
  out.restart_spread = hi == 0.0 ? hi - lo : (hi - lo) / std::abs(hi);
  return out;
}

VariationalResult hartree_energy(const CovarianceSpec& spec, const VariationalGrid& grid,
                                 const VariationalOptions& opts) {
  return optimize(spec, grid, VariationalObjective::Hartree, opts);
}

VariationalResult m_energy(const CovarianceSpec& spec, const VariationalGrid& grid, const VariationalOptions& opts) {
  return optimize(spec, grid, VariationalObjective::M, opts);
}

ObjectiveValue evaluate_objective(const CovarianceSpec& spec, const VariationalGrid& grid, std::span<const double> g,
                                  VariationalObjective objective) {
  Problem p(spec, grid, objective);
  require(g.size() == p.size(), ErrorKind::InvalidArgument, "function does not match the grid");
  return p.evaluate(g);
}

double kappa_from_hartree(double eH, double alpha) {
  require(alpha > 0.0 && alpha < 2.0, ErrorKind::BadAlpha, "alpha must lie in (0, 2)");
  require(eH >= 0.0, ErrorKind::InvalidArgument, "Hartree energy must be nonnegative");
  if (eH == 0.0) return 0.0;
  return (2.0 / alpha) * std::pow(alpha / (2.0 - alpha) * eH, 0.5 * (2.0 - alpha));
}

double scaling_exponent(const CovarianceSpec& spec) {
  spec.validate();
  require(spec.hypothesis == Hypothesis::H2, ErrorKind::NotScaling, "the identity needs a scaling (H2) kernel");
  require(spec.epsilon == 0.0, ErrorKind::NotScaling, "mollified kernels do not scale");
  require(spec.kind == KernelKind::Riesz || spec.kind == KernelKind::SpaceTimeWhite, ErrorKind::NotScaling,
          "only Riesz and white kernels are exactly scaling");
  return spec.alpha;
}

MeCheck me_relation_check(const CovarianceSpec& spec, const VariationalGrid& grid, const VariationalOptions& opts) {
  const double a = scaling_exponent(spec);
  MeCheck out;
  out.hartree_value = hartree_energy(spec, grid, opts).value;
  out.m_value = m_energy(spec, grid, opts).value;
  out.predicted_m = (4.0 - a) / 4.0 * std::pow(2.0 * out.hartree_value / (2.0 - a), (2.0 - a) / (4.0 - a));
  out.residual = std::abs(out.m_value - out.predicted_m) / out.predicted_m;
  return out;
}

Lambda0 lambda0(double E, double alpha_bar, int dim, double t) {
  require(alpha_bar >= 0.0 && alpha_bar < 2.0, ErrorKind::BadAlpha, "alpha must lie in [0, 2)");
  require(E >= 0.0, ErrorKind::InvalidArgument, "energy must be nonnegative");
  require(t > 0.0, ErrorKind::NonPositiveTime, "t must be positive");
  require(dim >= 1, ErrorKind::InvalidArgument, "dimension must be >= 1");
  Lambda0 out;
  out.exponent = 2.0 / (4.0 - alpha_bar);
  out.value = 0.5 * (4.0 - alpha_bar) * std::pow(static_cast<double>(dim), out.exponent) *
              std::pow(E * t / (2.0 - alpha_bar), (2.0 - alpha_bar) / (4.0 - alpha_bar));
  return out;
}

double interpolation_ratio(const CovarianceSpec& spec, const VariationalGrid& grid, double kappa, int samples,
                           std::uint64_t seed) {
  const double a = scaling_exponent(spec);
  require(samples >= 1, ErrorKind::InvalidArgument, "need at least one sample");
  require(kappa > 0.0, ErrorKind::InvalidArgument, "kappa must be positive");
  Problem p(spec, grid, VariationalObjective::Hartree);
  const std::size_t n = p.size();
  const int N = grid.points;
  const double h = grid.spacing();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Stream rng({seed, Purpose::Variational, 1000u + static_cast<std::uint32_t>(s), 0});
    std::vector<double> g(n, 0.0);
    const int bumps = 1 + static_cast<int>(rng.uniform() * 3.0);
    for (int b = 0; b < bumps; ++b) {
      const double width = 0.3 * std::pow(10.0, rng.uniform());
      const double sign = rng.uniform() < 0.3 ? -1.0 : 1.0;
      const double weight = sign * (0.2 + rng.uniform());
      std::vector<double> centre(static_cast<std::size_t>(grid.dim));
      for (double& c : centre) c = (rng.uniform() - 0.5) * 0.25 * grid.extent;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        double r2 = 0.0;
        for (int ax = grid.dim - 1; ax >= 0; --ax) {
          const int c = static_cast<int>(rem % static_cast<std::size_t>(N));
          rem /= static_cast<std::size_t>(N);
          const double x = (c - N / 2) * h - centre[ax];
          r2 += x * x;
        }
        g[i] += weight * std::exp(-r2 / (2.0 * width * width));
      }
    }
    normalize(p, g);
    const auto v = p.evaluate(g);
    const double bound = kappa * std::pow(v.norm_squared, 0.5 * (4.0 - a)) * std::pow(v.kinetic, 0.5 * a);
    worst = std::max(worst, v.potential / bound);
  }
  return worst;
}

double dirichlet_ground_energy(const ExitFunctionalSpec& h, int points) {
  require(h.dim == 1, ErrorKind::InvalidArgument, "the Dirichlet problem is implemented on an interval only");
  require(h.radius > 0.0 && points >= 8, ErrorKind::InvalidArgument, "bad Dirichlet discretization");
  const int n = points;
  const double dx = 2.0 * h.radius / (n + 1);
  gsl_matrix* a = gsl_matrix_calloc(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  const double off = 0.5 / (dx * dx);
  for (int i = 0; i < n; ++i) {
    const double x[] = {-h.radius + (i + 1) * dx};
    gsl_matrix_set(a, i, i, -2.0 * off + exit_hamiltonian(h, 0.0, x));
    if (i + 1 < n) {
      gsl_matrix_set(a, i, i + 1, off);
      gsl_matrix_set(a, i + 1, i, off);
    }
  }
  gsl_vector* eval = gsl_vector_alloc(static_cast<std::size_t>(n));
  gsl_eigen_symm_workspace* ws = gsl_eigen_symm_alloc(static_cast<std::size_t>(n));
  const int status = gsl_eigen_symm(a, eval, ws);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) top = std::max(top, gsl_vector_get(eval, i));
  gsl_eigen_symm_free(ws);
  gsl_vector_free(eval);
  gsl_matrix_free(a);
  require(status == 0, ErrorKind::ModuleError, "eigensolver failed");
  return top;
}

}  // namespace pamlab
