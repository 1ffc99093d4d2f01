#include "pamlab/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "pamlab/error.hpp"
#include "pamlab/stats.hpp"

namespace pamlab {

namespace {

constexpr double kPi = std::numbers::pi;

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

std::size_t SpaceTimeGrid::sites() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points);
  return s;
}

int SpaceTimeGrid::steps() const { return static_cast<int>(std::llround(t_end / dt)); }

Point SpaceTimeGrid::site(std::size_t flat) const {
  Point x(static_cast<std::size_t>(dim));
  for (int a = dim - 1; a >= 0; --a) {
    x[a] = coordinate(static_cast<int>(flat % static_cast<std::size_t>(points)));
    flat /= static_cast<std::size_t>(points);
  }
  return x;
}

bool SpaceTimeGrid::same_lattice(const SpaceTimeGrid& o) const {
  return dim == o.dim && points == o.points && spacing == o.spacing;
}

void SpaceTimeGrid::validate() const {
  require(dim >= 1 && dim <= 2, ErrorKind::InvalidArgument, "grid: field simulation supports dim 1 or 2");
  require(power_of_two(points), ErrorKind::InvalidArgument, "grid: points per axis must be a power of two");
  require(spacing > 0.0 && dt > 0.0 && t_end > 0.0, ErrorKind::InvalidArgument,
          "grid: spacing, dt and t_end must be positive");
  const double ratio = t_end / dt;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio), ErrorKind::InvalidArgument,
          "grid: t_end must be an integer multiple of dt");
  require(period() >= 8.0 * std::sqrt(t_end), ErrorKind::InvalidArgument,
          "grid: period must be at least 8 sqrt(t_end)");
}

double aliased_mass_fraction(const CovarianceSpec& spec, double spacing) {
  spec.validate();
  if (spec.amplitude == 0.0) return 0.0;
  if (spec.kind == KernelKind::SpaceTimeWhite && spec.epsilon == 0.0) return 0.0;  // exact lattice surrogate
  require(spec.kind != KernelKind::Riesz || spec.epsilon > 0.0, ErrorKind::InvalidSpec,
          "riesz noise synthesis needs epsilon > 0");
  const double rc = kPi / spacing;
  const auto g = [&](double r) { return spectral_density(spec, r) * std::pow(r, spec.dim - 1); };
  QuadratureOptions opts;
  opts.abs_tol = 0.0;
  opts.rel_tol = 1e-9;
  double inner, outer;
  if (spec.kind == KernelKind::CustomSpectral) {
    const double rmax = spec.custom_radii.back();
    inner = integrate(g, 0.0, std::min(rc, rmax), opts).value;
    outer = rc < rmax ? integrate(g, rc, rmax, opts).value : 0.0;
  } else {
    inner = integrate(g, 0.0, rc, opts).value;
    outer = integrate_to_infinity(g, rc, opts).value;
  }
  const double total = inner + outer;
  return total > 0.0 ? outer / total : 0.0;
}

NoiseSynthesizer::NoiseSynthesizer(const CovarianceSpec& spec, const SpaceTimeGrid& grid, double max_aliased_fraction)
    : spec_(spec), grid_(grid), fft_(std::vector<int>(static_cast<std::size_t>(grid.dim), grid.points)) {
  spec_.validate();
  grid_.validate();
  require(spec_.dim == grid_.dim, ErrorKind::GridMismatch, "covariance and grid dimensions differ");
  const double cell_volume = ipow(grid_.spacing, grid_.dim);
  const auto sites = static_cast<double>(grid_.sites());
  if (spec_.amplitude == 0.0) {
    zero_ = true;
    return;
  }
  if (spec_.is_delta()) {
    iid_ = true;
    site_variance_ = spec_.amplitude * grid_.dt / cell_volume;
    return;
  }
  aliased_ = aliased_mass_fraction(spec_, grid_.spacing);
  require(aliased_ <= max_aliased_fraction, ErrorKind::GridTooCoarse,
          "aliased spectral mass " + std::to_string(aliased_) + " exceeds the allowed fraction");

  weights_.assign(fft_.spectral_size(), 0.0);
  amplitude_.assign(fft_.spectral_size(), 0.0);
  const int half = grid_.points / 2 + 1;
  const double dk = 2.0 * kPi / grid_.period();
  double variance = 0.0;
  for_each_wavenumber(fft_, grid_.spacing, [&](std::size_t flat, double k2, std::span<const double>) {
    double mu;
    if (k2 == 0.0 && spec_.kind == KernelKind::Riesz) {
      // mean of c|xi|^{eta-d} over the ball whose volume equals one frequency cell
      const double d = grid_.dim;
      const double ball = std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
      const double r = dk * std::pow(1.0 / ball, 1.0 / d);
      mu = spec_.amplitude * riesz_constant(spec_.eta, grid_.dim) * (d / spec_.eta) * std::pow(r, spec_.eta - d);
    } else {
      mu = spectral_density(spec_, std::sqrt(k2));
    }
    require(mu >= 0.0 && std::isfinite(mu), ErrorKind::NegativeSpectralWeight, "invalid lattice spectral weight");
    const double lambda = grid_.dt * mu / cell_volume;
    weights_[flat] = lambda;
    amplitude_[flat] = std::sqrt(lambda) / sites;
    const int last = static_cast<int>(flat % static_cast<std::size_t>(half));
    const double mult = (last == 0 || 2 * last == grid_.points) ? 1.0 : 2.0;
    variance += mult * lambda;
  });
  site_variance_ = variance / sites;
}

void NoiseSynthesizer::synthesize_into(const StreamId& id, std::span<double> out) {
  require(out.size() == grid_.sites(), ErrorKind::GridMismatch, "slice buffer has the wrong size");
  if (zero_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  Stream stream(id);
  if (iid_) {
    stream.fill_normal(out);
    const double sd = std::sqrt(site_variance_);
    for (auto& v : out) v *= sd;
    return;
  }
  auto real = fft_.real();
  stream.fill_normal(real);
  fft_.forward();
  auto spec = fft_.spectrum();
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= amplitude_[k];
  fft_.backward();
  std::copy(real.begin(), real.end(), out.begin());
}

NoiseSlice NoiseSynthesizer::synthesize(const StreamId& id) {
  NoiseSlice s;
  s.dim = grid_.dim;
  s.points = grid_.points;
  s.spacing = grid_.spacing;
  s.dt = grid_.dt;
  s.spec = spec_;
  s.step = id.step;
  s.stream = id;
  s.values.resize(grid_.sites());
  synthesize_into(id, s.values);
  return s;
}

NoiseSlice synthesize_slice(const CovarianceSpec& spec, const SpaceTimeGrid& grid, const StreamId& id) {
  NoiseSynthesizer synth(spec, grid);
  return synth.synthesize(id);
}

NoiseSlice mollify_slice(const NoiseSlice& slice, double eps) {
  require(eps > 0.0, ErrorKind::InvalidArgument, "mollify_slice needs eps > 0");
  std::size_t sites = 1;
  for (int a = 0; a < slice.dim; ++a) sites *= static_cast<std::size_t>(slice.points);
  require(slice.values.size() == sites, ErrorKind::GridMismatch, "slice size does not match its lattice");
  RealFft fft(std::vector<int>(static_cast<std::size_t>(slice.dim), slice.points));
  std::copy(slice.values.begin(), slice.values.end(), fft.real().begin());
  fft.forward();
  auto spec = fft.spectrum();
  const double inv = 1.0 / static_cast<double>(sites);
  for_each_wavenumber(fft, slice.spacing, [&](std::size_t flat, double k2, std::span<const double>) {
    spec[flat] *= std::exp(-0.5 * eps * k2) * inv;
  });
  fft.backward();
  NoiseSlice out = slice;
  std::copy(fft.real().begin(), fft.real().end(), out.values.begin());
  out.spec.epsilon += 0.5 * eps;
  return out;
}

std::vector<LagCovariance> empirical_covariance(std::span<const NoiseSlice> slices, std::span<const Point> lags,
                                                std::size_t batches) {
  require(slices.size() >= 100, ErrorKind::InsufficientSamples, "empirical_covariance needs >= 100 slices");
  const auto& first = slices.front();
  const int dim = first.dim;
  const int n = first.points;
  const double period = n * first.spacing;
  for (const auto& s : slices) {
    require(s.dim == dim && s.points == n && s.spacing == first.spacing, ErrorKind::GridMismatch,
            "slices live on different lattices");
  }
  std::vector<LagCovariance> out;
  std::vector<double> per_slice(slices.size());
  for (const auto& lag : lags) {
    require(static_cast<int>(lag.size()) == dim, ErrorKind::InvalidArgument, "lag dimension mismatch");
    std::vector<int> offset(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      require(std::abs(lag[a]) <= 0.5 * period, ErrorKind::LagOutOfRange, "lag exceeds half the period");
      const double cells = lag[a] / first.spacing;
      require(std::abs(cells - std::round(cells)) < 1e-6, ErrorKind::InvalidArgument, "lag is not on the lattice");
      offset[a] = static_cast<int>(std::lround(cells));
    }
    for (std::size_t s = 0; s < slices.size(); ++s) {
      const auto& v = slices[s].values;
      double acc = 0.0;
      if (dim == 1) {
        const int o = ((offset[0] % n) + n) % n;
        for (int j = 0; j < n; ++j) acc += v[j] * v[(j + o) % n];
      } else {
        const int o0 = ((offset[0] % n) + n) % n, o1 = ((offset[1] % n) + n) % n;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            acc += v[static_cast<std::size_t>(i) * n + j] * v[static_cast<std::size_t>((i + o0) % n) * n + (j + o1) % n];
      }
      per_slice[s] = acc / static_cast<double>(v.size());
    }
    const auto est = batch_mean(per_slice, batches);
    out.push_back({lag, est.mean, est.standard_error});
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'P', 'A', 'M', 'S', 'L', 'I', 'C', 'E'};

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_slice(const std::string& path, const NoiseSlice& s) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::OutputUnwritable, "cannot write " + path);
  f.write(kMagic, 8);
  put<std::uint32_t>(f, 1);  // version
  put<std::uint32_t>(f, static_cast<std::uint32_t>(s.dim));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(s.points));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(s.spec.kind));
  put<double>(f, s.spacing);
  put<double>(f, s.dt);
  put<double>(f, s.spec.eta);
  put<double>(f, s.spec.epsilon);
  put<double>(f, s.spec.amplitude);
  put<std::uint64_t>(f, s.stream.seed);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(s.stream.purpose));
  put<std::uint32_t>(f, s.stream.replica);
  put<std::uint32_t>(f, s.step);
  put<std::uint32_t>(f, 0);
  put<std::uint64_t>(f, s.values.size());
  f.write(reinterpret_cast<const char*>(s.values.data()), static_cast<std::streamsize>(s.values.size() * sizeof(double)));
  require(f.good(), ErrorKind::OutputUnwritable, "short write to " + path);
}

NoiseSlice read_slice(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::InvalidArgument, "cannot read " + path);
  char magic[8];
  f.read(magic, 8);
  require(std::memcmp(magic, kMagic, 8) == 0, ErrorKind::InvalidArgument, "not a slice dump");
  require(get<std::uint32_t>(f) == 1, ErrorKind::InvalidArgument, "unsupported slice dump version");
  NoiseSlice s;
  s.dim = static_cast<int>(get<std::uint32_t>(f));
  s.points = static_cast<int>(get<std::uint32_t>(f));
  s.spec.kind = static_cast<KernelKind>(get<std::uint32_t>(f));
  s.spacing = get<double>(f);
  s.dt = get<double>(f);
  s.spec.eta = get<double>(f);
  s.spec.epsilon = get<double>(f);
  s.spec.amplitude = get<double>(f);
  s.spec.dim = s.dim;
  s.stream.seed = get<std::uint64_t>(f);
  s.stream.purpose = static_cast<Purpose>(get<std::uint32_t>(f));
  s.stream.replica = get<std::uint32_t>(f);
  s.step = get<std::uint32_t>(f);
  s.stream.step = s.step;
  get<std::uint32_t>(f);
  const auto count = get<std::uint64_t>(f);
  s.values.resize(count);
  f.read(reinterpret_cast<char*>(s.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  require(f.good(), ErrorKind::InvalidArgument, "truncated slice dump");
  return s;
}

}  // namespace pamlab
