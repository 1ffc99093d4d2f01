#include "pamlab/solver.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "pamlab/error.hpp"
#include "pamlab/parallel.hpp"

namespace pamlab {

namespace {

constexpr double kPi = std::numbers::pi;

double min_image(double d, double period) { return d - period * std::round(d / period); }

long floor_mod(long a, long n) {
  const long r = a % n;
  return r < 0 ? r + n : r;
}

void check_finite(std::span<const double> v, int step) {
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::UnstableRun, "non-finite field value at step " + std::to_string(step));
  }
}

// sites below -floor count; the floor sits at FFT round-off relative to the
// field maximum so that far-tail sign noise is not reported as negativity
double negative_fraction(std::span<const double> v) {
  double top = 0.0;
  for (double x : v) top = std::max(top, std::abs(x));
  const double floor = 1e-13 * top;
  std::size_t neg = 0;
  for (double x : v) neg += x < -floor;
  return v.empty() ? 0.0 : static_cast<double>(neg) / static_cast<double>(v.size());
}

}  // namespace

int steps_for(double t, double dt) {
  require(t > 0.0, ErrorKind::NonPositiveTime, "evolution time must be positive");
  const double r = t / dt;
  const long k = std::lround(r);
  require(k >= 1 && std::abs(r - static_cast<double>(k)) < 1e-9 * std::max(1.0, r), ErrorKind::InvalidArgument,
          "t must be a positive integer multiple of dt");
  return static_cast<int>(k);
}

std::vector<double> lattice_heat_profile(double t, const Measure& u0, const SpaceTimeGrid& grid) {
  require(t > 0.0, ErrorKind::NonPositiveTime, "heat profile needs t > 0");
  require(u0.dim() == grid.dim, ErrorKind::GridMismatch, "measure and grid dimensions differ");
  const double period = grid.period();
  std::vector<double> out(grid.sites(), 0.0);
  if (!u0.atoms.empty()) {
    RealFft fft(std::vector<int>(static_cast<std::size_t>(grid.dim), grid.points));
    auto spec = fft.spectrum();
    const double norm = std::pow(period, -grid.dim);
    for_each_wavenumber(fft, grid.spacing, [&](std::size_t flat, double k2, std::span<const double> kv) {
      // site j sits at (j - N/2) dx, hence the (-1)^{k} phase
      long parity = 0;
      for (double k : kv) parity += std::lround(k * period / (2.0 * kPi));
      std::complex<double> sum = 0.0;
      for (const auto& a : u0.atoms) {
        double phase = 0.0;
        for (std::size_t c = 0; c < kv.size(); ++c) phase -= kv[c] * a.location[c];
        sum += a.mass * std::polar(1.0, phase);
      }
      spec[flat] = sum * (norm * std::exp(-0.5 * t * k2) * ((parity & 1) ? -1.0 : 1.0));
    });
    fft.backward();
    std::copy(fft.real().begin(), fft.real().end(), out.begin());
  }
  for (const auto& d : u0.density) {
    const double w = std::pow(d.spacing, d.dim);
    for (std::size_t s = 0; s < out.size(); ++s) {
      const auto x = grid.site(s);
      double acc = 0.0;
      for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (d.values[i] == 0.0) continue;
        const auto y = d.site(i);
        double r2 = 0.0;
        for (int c = 0; c < grid.dim; ++c) {
          const double dd = min_image(x[c] - y[c], period);
          r2 += dd * dd;
        }
        acc += d.values[i] * heat_kernel(t, r2, grid.dim);
      }
      out[s] += w * acc;
    }
  }
  return out;
}

MildSolver::MildSolver(const CovarianceSpec& spec, const SpaceTimeGrid& grid)
    : spec_(spec),
      grid_(grid),
      synth_(spec, grid),
      fft_(std::vector<int>(static_cast<std::size_t>(grid.dim), grid.points)),
      noise_(grid.sites()) {
  multiplier_.resize(fft_.spectral_size());
  const double inv = 1.0 / static_cast<double>(grid_.sites());
  for_each_wavenumber(fft_, grid_.spacing, [&](std::size_t flat, double k2, std::span<const double>) {
    multiplier_[flat] = std::exp(-0.5 * grid_.dt * k2) * inv;
  });
}

void MildSolver::heat(std::span<double> field) {
  auto real = fft_.real();
  std::copy(field.begin(), field.end(), real.begin());
  fft_.forward();
  auto spec = fft_.spectrum();
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= multiplier_[k];
  fft_.backward();
  std::copy(real.begin(), real.end(), field.begin());
}

void MildSolver::step(std::span<double> field, std::span<const double> noise) {
  for (std::size_t i = 0; i < field.size(); ++i) field[i] += field[i] * noise[i];
  heat(field);
}

FieldState MildSolver::evolve(const Measure& u0, const StreamId& stream, double t, const SolverOptions& opts) {
  u0.validate();
  const int k = steps_for(t, grid_.dt);
  FieldState st;
  st.t = t;
  st.steps = k;
  st.grid = grid_;
  st.u0 = u0;
  st.values = lattice_heat_profile(grid_.dt, u0, grid_);
  StreamId id = stream;
  id.purpose = Purpose::Noise;
  for (int n = 0; n < k; ++n) {
    if (!opts.zero_noise) {
      id.step = static_cast<std::uint32_t>(n);
      synth_.synthesize_into(id, noise_);
    }
    if (n == 0) {
      if (!opts.zero_noise)
        for (std::size_t i = 0; i < st.values.size(); ++i) st.values[i] += st.values[i] * noise_[i];
    } else if (opts.zero_noise) {
      heat(st.values);
    } else {
      step(st.values, noise_);
    }
    check_finite(st.values, n);
  }
  st.negativity_fraction = negative_fraction(st.values);
  st.min_value = *std::min_element(st.values.begin(), st.values.end());
  return st;
}

FieldState evolve_mild(const Measure& u0, const CovarianceSpec& spec, const SpaceTimeGrid& grid,
                       const StreamId& stream, double t, const SolverOptions& opts) {
  MildSolver solver(spec, grid);
  return solver.evolve(u0, stream, t, opts);
}

std::size_t lattice_index(const SpaceTimeGrid& grid, std::span<const double> x) {
  require(static_cast<int>(x.size()) == grid.dim, ErrorKind::GridMismatch, "probe dimension mismatch");
  std::size_t flat = 0;
  for (int c = 0; c < grid.dim; ++c) {
    const double cells = x[c] / grid.spacing;
    const long j = std::lround(cells);
    require(std::abs(cells - static_cast<double>(j)) < 1e-6, ErrorKind::InvalidArgument, "probe is not a lattice site");
    flat = flat * static_cast<std::size_t>(grid.points) +
           static_cast<std::size_t>(floor_mod(j + grid.points / 2, grid.points));
  }
  return flat;
}

EnsembleMoments ensemble_moments(const Measure& u0, const CovarianceSpec& spec, const SpaceTimeGrid& grid,
                                 std::uint64_t seed, double t, std::size_t replicas, std::span<const Point> probes,
                                 int workers, const SolverOptions& opts) {
  require(replicas >= 2, ErrorKind::InsufficientSamples, "ensemble needs at least two replicas");
  std::vector<std::size_t> idx;
  for (const auto& p : probes) idx.push_back(lattice_index(grid, p));
  const std::size_t np = probes.size();
  std::vector<double> values(replicas * np);
  std::vector<double> negativity(replicas);
  workers = std::max(1, workers);
  std::vector<std::unique_ptr<MildSolver>> solvers(static_cast<std::size_t>(workers));
  parallel_for(replicas, workers, [&](std::size_t r, int w) {
    auto& solver = solvers[static_cast<std::size_t>(w)];
    if (!solver) solver = std::make_unique<MildSolver>(spec, grid);
    const auto st = solver->evolve(u0, {seed, Purpose::Noise, static_cast<std::uint32_t>(r), 0}, t, opts);
    for (std::size_t p = 0; p < np; ++p) values[r * np + p] = st.values[idx[p]];
    negativity[r] = st.negativity_fraction;
  });
  EnsembleMoments out;
  out.probes.assign(probes.begin(), probes.end());
  out.replicas = replicas;
  const std::size_t batches = std::min<std::size_t>(50, replicas);
  std::vector<double> col(replicas), sq(replicas);
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t r = 0; r < replicas; ++r) {
      col[r] = values[r * np + p];
      sq[r] = col[r] * col[r];
    }
    out.mean.push_back(batch_mean(col, batches));
    out.second.push_back(batch_mean(sq, batches));
  }
  double neg = 0.0;
  for (double v : negativity) neg += v;
  out.mean_negativity = neg / static_cast<double>(replicas);
  return out;
}

double default_dirac_width(const SpaceTimeGrid& grid) { return std::max(grid.spacing * grid.spacing, grid.dt); }

namespace {

struct Window {
  double width = 0.0;
  double theta = 0.0;
  std::vector<double> ring;
  std::vector<std::complex<double>> multiplier;
};

RatioField ratio_field_1d(const Point& x0, const CovarianceSpec& spec, const SpaceTimeGrid& grid,
                          const StreamId& stream, double t, double delta, const RatioOptions& opts) {
  const int n_sites = grid.points;
  const int wc = std::min(opts.window_cells, n_sites);
  require(wc >= 16 && (wc & (wc - 1)) == 0, ErrorKind::InvalidArgument, "window_cells must be a power of two >= 16");
  const double dx = grid.spacing;
  const double half_window = 0.5 * wc * dx;
  const double spread = 6.0 * std::sqrt(t + delta);
  const double spacing = opts.tile_spacing;
  require(spacing > 0.0 && 0.5 * spacing + spread <= half_window, ErrorKind::InvalidArgument,
          "window too narrow for the tile spacing and diffusion spread");
  const double max_radius = 0.5 * grid.period();
  const double radius = opts.radius < 0.0 ? max_radius : opts.radius;
  require(radius <= max_radius + 1e-12, ErrorKind::InvalidArgument, "ratio radius exceeds half the period");
  const int k = steps_for(t, grid.dt);
  const double c0 = x0[0];

  const long jmin = static_cast<long>(std::ceil((c0 - radius) / dx - 1e-9));
  const long jmax = static_cast<long>(std::floor((c0 + radius) / dx + 1e-9));
  const long mmax = std::lround(radius / spacing) + 1;

  std::vector<double> widths{delta};
  if (opts.audit_bias) widths.push_back(0.5 * delta);

  // tiles that own at least one cell
  std::vector<long> tile_ids;
  for (long m = -mmax; m <= mmax; ++m) {
    const double lo = c0 + (m - 0.5) * spacing, hi = c0 + (m + 0.5) * spacing;
    if (hi >= jmin * dx && lo <= jmax * dx) tile_ids.push_back(m);
  }

  // Tile m ends centred at x_m = x0 + m * spacing. Its surrogate source sits at
  // a = x0 - delta (x_m - x0) / t, which is where the bridge from a to x_m
  // starts after averaging over p_delta: exactly x0. With theta = (x_m - x0) / t
  // the tilted datum is p_delta(. - x0) and the centre moves as x0 + theta s.
  const double dk = 2.0 * kPi / (wc * dx);
  std::vector<Window> windows;
  windows.reserve(tile_ids.size() * widths.size());
  for (long m : tile_ids) {
    const double theta = m * spacing / t;
    std::vector<std::complex<double>> mult(static_cast<std::size_t>(wc / 2 + 1));
    for (int f = 0; f <= wc / 2; ++f) {
      const double kk = f * dk;
      mult[f] = std::exp(std::complex<double>(-0.5 * kk * kk, -theta * kk) * grid.dt) / double(wc);
    }
    for (double width : widths) {
      Window w;
      w.width = width;
      w.theta = theta;
      w.multiplier = mult;
      const long origin = std::lround(c0 / dx) - wc / 2;
      w.ring.assign(static_cast<std::size_t>(wc), 0.0);
      double mass = 0.0;
      for (long j = origin; j < origin + wc; ++j) {
        const double v = heat_kernel_1d(width, j * dx - c0);
        w.ring[floor_mod(j, wc)] = v;
        mass += v * dx;
      }
      for (auto& v : w.ring) v /= mass;
      windows.push_back(std::move(w));
    }
  }

  NoiseSynthesizer synth(spec, grid);
  std::vector<double> noise(grid.sites(), 0.0);
  RealFft fft({wc});
  StreamId id = stream;
  id.purpose = Purpose::Noise;
  for (int n = 0; n < k; ++n) {
    if (!opts.zero_noise) {
      id.step = static_cast<std::uint32_t>(n);
      synth.synthesize_into(id, noise);
    }
    const double s = n * grid.dt;
    for (auto& w : windows) {
      auto real = fft.real();
      if (opts.zero_noise) {
        std::copy(w.ring.begin(), w.ring.end(), real.begin());
      } else {
        const long origin = std::lround((c0 + w.theta * s) / dx) - wc / 2;
        for (long j = origin; j < origin + wc; ++j) {
          const long r = floor_mod(j, wc);
          real[r] = w.ring[r] * (1.0 + noise[floor_mod(j + n_sites / 2, n_sites)]);
        }
      }
      fft.forward();
      auto sp = fft.spectrum();
      for (std::size_t f = 0; f < sp.size(); ++f) sp[f] *= w.multiplier[f];
      fft.backward();
      std::copy(real.begin(), real.end(), w.ring.begin());
      check_finite(w.ring, n);
    }
  }

  RatioField out;
  out.x0 = x0;
  out.t = t;
  out.delta = delta;
  out.dim = 1;
  out.tiles = static_cast<int>(tile_ids.size());
  const std::size_t ncell = static_cast<std::size_t>(jmax - jmin + 1);
  out.coords.resize(ncell);
  out.values.resize(ncell);
  std::size_t negatives = 0;
  double bias = 0.0;
  const std::size_t per_tile = widths.size();
  for (std::size_t c = 0; c < ncell; ++c) {
    const long j = jmin + static_cast<long>(c);
    const double y = j * dx;
    const long m = std::lround((y - c0) / spacing);
    const auto pos = static_cast<std::size_t>(std::lower_bound(tile_ids.begin(), tile_ids.end(), m) - tile_ids.begin());
    double kv[2] = {0.0, 0.0};
    for (std::size_t wi = 0; wi < per_tile; ++wi) {
      const auto& w = windows[pos * per_tile + wi];
      const double centre = c0 + w.theta * t;
      kv[wi] = w.ring[floor_mod(j, wc)] / heat_kernel_1d(t + w.width, y - centre);
    }
    out.coords[c] = y;
    out.values[c] = kv[0];
    if (kv[0] <= 0.0) ++negatives;
    if (per_tile == 2 && kv[0] > 0.0 && kv[1] > 0.0) bias = std::max(bias, std::abs(std::log(kv[0]) - std::log(kv[1])));
  }
  out.negativity_fraction = static_cast<double>(negatives) / static_cast<double>(ncell);
  out.bias = bias;
  return out;
}

RatioField ratio_field_nd(const Point& x0, const CovarianceSpec& spec, const SpaceTimeGrid& grid,
                          const StreamId& stream, double t, double delta, const RatioOptions& opts) {
  const double period = grid.period();
  const double reach = std::sqrt(2.0 * (t + delta) * 300.0);
  const double radius = opts.radius < 0.0 ? std::min(0.5 * period, reach) : opts.radius;
  require(radius <= std::min(0.5 * period, reach) + 1e-12, ErrorKind::InvalidArgument,
          "ratio radius too large for an untilted run");
  const int k = steps_for(t, grid.dt);
  std::vector<double> widths{delta};
  if (opts.audit_bias) widths.push_back(0.5 * delta);
  const auto displacement = [&](std::size_t s) {
    const auto x = grid.site(s);
    double r2 = 0.0;
    for (int c = 0; c < grid.dim; ++c) {
      const double d = min_image(x[c] - x0[c], period);
      r2 += d * d;
    }
    return r2;
  };
  MildSolver solver(spec, grid);
  std::vector<std::vector<double>> fields;
  for (double width : widths) {
    std::vector<double> f(grid.sites());
    double mass = 0.0;
    for (std::size_t s = 0; s < f.size(); ++s) {
      f[s] = heat_kernel(width, displacement(s), grid.dim);
      mass += f[s];
    }
    const double norm = mass * std::pow(grid.spacing, grid.dim);
    for (auto& v : f) v /= norm;
    fields.push_back(std::move(f));
  }
  std::vector<double> noise(grid.sites(), 0.0);
  StreamId id = stream;
  id.purpose = Purpose::Noise;
  for (int n = 0; n < k; ++n) {
    if (!opts.zero_noise) {
      id.step = static_cast<std::uint32_t>(n);
      solver.synthesizer().synthesize_into(id, noise);
    }
    for (auto& f : fields) {
      solver.step(f, noise);
      check_finite(f, n);
    }
  }
  RatioField out;
  out.x0 = x0;
  out.t = t;
  out.delta = delta;
  out.dim = grid.dim;
  out.tiles = 1;
  std::size_t negatives = 0;
  double bias = 0.0;
  for (std::size_t s = 0; s < grid.sites(); ++s) {
    const double r2 = displacement(s);
    if (r2 > radius * radius) continue;
    const double kd = fields[0][s] / heat_kernel(t + delta, r2, grid.dim);
    const auto x = grid.site(s);
    for (int c = 0; c < grid.dim; ++c) out.coords.push_back(x0[c] + min_image(x[c] - x0[c], period));
    out.values.push_back(kd);
    if (kd <= 0.0) ++negatives;
    if (fields.size() == 2) {
      const double kh = fields[1][s] / heat_kernel(t + 0.5 * delta, r2, grid.dim);
      if (kd > 0.0 && kh > 0.0) bias = std::max(bias, std::abs(std::log(kd) - std::log(kh)));
    }
  }
  out.negativity_fraction = out.values.empty() ? 0.0 : double(negatives) / double(out.values.size());
  out.bias = bias;
  return out;
}

}  // namespace

RatioField ratio_field(const Point& x0, const CovarianceSpec& spec, const SpaceTimeGrid& grid, const StreamId& stream,
                       double t, double delta, const RatioOptions& opts) {
  spec.validate();
  grid.validate();
  require(static_cast<int>(x0.size()) == grid.dim && spec.dim == grid.dim, ErrorKind::GridMismatch,
          "source point, covariance and grid dimensions differ");
  require(t > 0.0, ErrorKind::NonPositiveTime, "ratio_field needs t > 0");
  if (delta <= 0.0) delta = default_dirac_width(grid);
  require(delta >= grid.spacing * grid.spacing * (1.0 - 1e-12), ErrorKind::InvalidArgument,
          "dirac width must be at least spacing^2");
  RatioField out = grid.dim == 1 ? ratio_field_1d(x0, spec, grid, stream, t, delta, opts)
                                 : ratio_field_nd(x0, spec, grid, stream, t, delta, opts);
  if (opts.audit_bias && out.bias > opts.bias_tolerance) {
    fail(ErrorKind::SurrogateBiasExceeded,
         "dirac surrogate bias " + std::to_string(out.bias) + " exceeds " + std::to_string(opts.bias_tolerance));
  }
  return out;
}

}  // namespace pamlab
