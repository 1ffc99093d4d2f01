#include "pamlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pamlab/bridges.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/solver.hpp"
#include "pamlab/stats.hpp"
#include "pamlab/variational.hpp"

#ifndef PAMLAB_VERSION
#define PAMLAB_VERSION "0.0.0"
#endif

namespace pamlab {

namespace fs = std::filesystem;

namespace {

// ModuleError that remembers the class it wraps
class WrappedError : public Error {
 public:
  WrappedError(ErrorKind cause, const std::string& message)
      : Error(ErrorKind::ModuleError, message), cause_(cause) {}
  ErrorKind cause() const noexcept { return cause_; }

 private:
  ErrorKind cause_;
};

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::Simulate, "simulate"},   {ExperimentKind::FkMoments, "fk-moments"},
      {ExperimentKind::Theta, "theta"},         {ExperimentKind::Hartree, "hartree"},
      {ExperimentKind::MeCheck, "me-check"},    {ExperimentKind::Peaks, "peaks"},
      {ExperimentKind::Holder, "holder"},       {ExperimentKind::Girsanov, "girsanov"},
      {ExperimentKind::NoiseCheck, "noise-check"},
  };
  return names;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "kind", "seed", "t", "m", "replicas", "workers", "zero_noise",
      "output.dir", "output.binary",
      "covariance.kind", "covariance.dim", "covariance.eta", "covariance.epsilon", "covariance.amplitude",
      "covariance.hypothesis", "covariance.alpha", "covariance.name", "covariance.radii", "covariance.weights",
      "grid.points", "grid.spacing", "grid.dt",
      "initial.kind", "initial.atoms", "initial.masses", "initial.lo", "initial.hi", "initial.mass", "initial.cells",
      "simulate.probes",
      "fk.steps", "fk.batches", "fk.targets", "fk.assignment_cap", "fk.assignment_mode",
      "theta.grid_size",
      "variational.objective", "variational.points", "variational.extent", "variational.tol",
      "variational.max_iter", "variational.restarts", "variational.initial_width",
      "ratio.delta", "ratio.window_cells", "ratio.tile_spacing", "ratio.bias_tolerance", "ratio.audit_bias",
      "ratio.radius",
      "peaks.first", "peaks.last", "peaks.exponent", "peaks.replicates",
      "holder.lags", "holder.replicates",
      "girsanov.lambda", "girsanov.functionals", "girsanov.steps", "girsanov.dim",
      "noise.slices", "noise.lags", "noise.batches",
      "tolerance.zero_noise", "tolerance.me_residual", "tolerance.noise_sigmas", "tolerance.peak_band",
  };
  return keys;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<Point> group_points(const std::vector<double>& flat, int dim, const std::string& key) {
  require(!flat.empty() && flat.size() % static_cast<std::size_t>(dim) == 0, ErrorKind::ConfigInvalid,
          key + " needs a multiple of " + std::to_string(dim) + " coordinates");
  std::vector<Point> out;
  for (std::size_t i = 0; i < flat.size(); i += static_cast<std::size_t>(dim))
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i), flat.begin() + static_cast<std::ptrdiff_t>(i) + dim);
  return out;
}

Measure measure_from(const ConfigMap& c, int dim) {
  const std::string kind = c.get_string("initial.kind", "dirac");
  if (kind == "dirac") {
    Point at(static_cast<std::size_t>(dim), 0.0);
    if (c.has("initial.atoms")) at = group_points(c.get_doubles("initial.atoms"), dim, "initial.atoms").at(0);
    return Measure::dirac(at, c.get_double("initial.mass", 1.0));
  }
  if (kind == "atoms") {
    const auto pts = group_points(c.get_doubles("initial.atoms"), dim, "initial.atoms");
    const auto masses = c.get_doubles("initial.masses", std::vector<double>(pts.size(), 1.0));
    require(masses.size() == pts.size(), ErrorKind::ConfigInvalid, "initial.masses must match initial.atoms");
    Measure u;
    for (std::size_t i = 0; i < pts.size(); ++i) u.atoms.push_back({pts[i], masses[i]});
    for (const auto& a : u.atoms) u.support_radius = std::max(u.support_radius, std::sqrt(squared_norm(a.location)));
    return u;
  }
  if (kind == "uniform") {
    require(dim == 1, ErrorKind::ConfigInvalid, "uniform initial data is one-dimensional");
    return Measure::uniform_interval(c.get_double("initial.lo"), c.get_double("initial.hi"),
                                     c.get_double("initial.mass", 1.0), static_cast<int>(c.get_int("initial.cells", 64)));
  }
  fail(ErrorKind::ConfigInvalid, "unknown initial.kind '" + kind + "'");
}

bool needs_grid(ExperimentKind k) {
  return k == ExperimentKind::Simulate || k == ExperimentKind::Peaks || k == ExperimentKind::Holder ||
         k == ExperimentKind::NoiseCheck;
}

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

std::string range_label(std::uint64_t seed, Purpose purpose, std::size_t count) {
  return std::to_string(seed) + ":" + std::to_string(static_cast<std::uint32_t>(purpose)) + ":0-" +
         std::to_string(count == 0 ? 0 : count - 1) + ":*";
}

double median(std::vector<double> v) {
  require(!v.empty(), ErrorKind::InvalidArgument, "median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Output sink rooted at one directory; only bare file names are accepted.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void prepare() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    require(!ec && fs::is_directory(dir_), ErrorKind::OutputUnwritable, "cannot create " + dir_.string());
    const auto probe = dir_ / ".pamlab-write-test";
    std::ofstream f(probe);
    require(f.good(), ErrorKind::OutputUnwritable, "cannot write into " + dir_.string());
    f.close();
    fs::remove(probe, ec);
  }

  std::ofstream open(const std::string& name) {
    require(name.find('/') == std::string::npos, ErrorKind::InvalidArgument, "artifact names are bare");
    std::ofstream f(dir_ / name);
    require(f.good(), ErrorKind::OutputUnwritable, "cannot write " + (dir_ / name).string());
    f.precision(17);
    files_.push_back(name);
    return f;
  }

  std::vector<OutputFile> manifest() const {
    std::vector<OutputFile> out;
    for (const auto& n : files_) out.push_back({n, file_digest(dir_ / n)});
    return out;
  }

  const fs::path& dir() const { return dir_; }
  void track(const std::string& name) { files_.push_back(name); }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

using Headlines = std::vector<std::pair<std::string, double>>;

FKOptions fk_options(const ExperimentConfig& c) {
  FKOptions o;
  o.replicas = c.replicas;
  o.steps = static_cast<int>(c.entries.get_int("fk.steps", 128));
  o.batches = static_cast<std::size_t>(c.entries.get_int("fk.batches", 50));
  o.seed = c.seed;
  o.workers = c.workers;
  o.assignment_cap = static_cast<std::size_t>(c.entries.get_int("fk.assignment_cap", 10000));
  o.assignment_mode = c.entries.get_string("fk.assignment_mode", "auto") == "exact" ? AssignmentMode::Exact
                                                                                    : AssignmentMode::Auto;
  return o;
}

VariationalGrid variational_grid(const ExperimentConfig& c) {
  VariationalGrid g;
  g.dim = c.spec.dim;
  g.points = static_cast<int>(c.entries.get_int("variational.points", 1024));
  g.extent = c.entries.get_double("variational.extent", 40.0);
  return g;
}

VariationalOptions variational_options(const ExperimentConfig& c) {
  VariationalOptions o;
  o.tol = c.entries.get_double("variational.tol", 1e-6);
  o.max_iter = static_cast<int>(c.entries.get_int("variational.max_iter", 20000));
  o.restarts = static_cast<int>(c.entries.get_int("variational.restarts", 3));
  o.initial_width = c.entries.get_double("variational.initial_width", 1.0);
  o.seed = c.seed;
  o.workers = c.workers;
  return o;
}

RatioOptions ratio_options(const ExperimentConfig& c) {
  RatioOptions o;
  o.window_cells = static_cast<int>(c.entries.get_int("ratio.window_cells", 256));
  o.tile_spacing = c.entries.get_double("ratio.tile_spacing", 8.0);
  o.bias_tolerance = c.entries.get_double("ratio.bias_tolerance", std::numeric_limits<double>::infinity());
  o.audit_bias = c.entries.get_bool("ratio.audit_bias", true);
  o.radius = c.entries.get_double("ratio.radius", -1.0);
  o.zero_noise = c.zero_noise;
  return o;
}

void write_point(std::ostream& out, std::span<const double> x) {
  for (double v : x) out << v << ',';
}

std::string coord_header(int dim) {
  std::string h;
  for (int d = 0; d < dim; ++d) h += "x" + std::to_string(d) + ",";
  return h;
}

Headlines run_simulate(const ExperimentConfig& c, Outputs& out) {
  SolverOptions so;
  so.zero_noise = c.zero_noise;
  const StreamId first{c.seed, Purpose::Noise, 0, 0};
  const auto field = evolve_mild(c.u0, c.spec, c.grid, first, c.t, so);
  Headlines h;
  double mass = 0.0, max_dev = 0.0, max_ref = 0.0;
  const double cell = std::pow(c.grid.spacing, c.grid.dim);
  {
    auto f = out.open("field.csv");
    f << coord_header(c.grid.dim) << "u,stream\n";
    const std::string label = first.label();
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      const auto x = c.grid.site(i);
      write_point(f, x);
      f << field.values[i] << ',' << label << '\n';
      mass += field.values[i] * cell;
      const double ref = heat_convolve_measure(c.t, c.u0, x);
      max_dev = std::max(max_dev, std::abs(field.values[i] - ref));
      max_ref = std::max(max_ref, ref);
    }
  }
  h.emplace_back("steps", field.steps);
  h.emplace_back("mass", mass);
  h.emplace_back("min_value", field.min_value);
  h.emplace_back("negativity_fraction", field.negativity_fraction);
  h.emplace_back("max_abs_dev_from_heat", max_dev);
  if (c.zero_noise) {
    const double tol = c.entries.get_double("tolerance.zero_noise", 1e-8);
    h.emplace_back("zero_noise_pass", max_dev < tol ? 1.0 : 0.0);
  }
  if (c.replicas > 1) {
    std::vector<Point> probes{Point(static_cast<std::size_t>(c.grid.dim), 0.0)};
    if (c.entries.has("simulate.probes"))
      probes = group_points(c.entries.get_doubles("simulate.probes"), c.grid.dim, "simulate.probes");
    const auto ens = ensemble_moments(c.u0, c.spec, c.grid, c.seed, c.t, c.replicas, probes, c.workers, so);
    auto f = out.open("moments.csv");
    f << coord_header(c.grid.dim) << "mean,mean_se,second,second_se,replicas,stream\n";
    const std::string label = range_label(c.seed, Purpose::Noise, c.replicas);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      write_point(f, probes[i]);
      f << ens.mean[i].mean << ',' << ens.mean[i].standard_error << ',' << ens.second[i].mean << ','
        << ens.second[i].standard_error << ',' << ens.replicas << ',' << label << '\n';
    }
    h.emplace_back("mean_negativity", ens.mean_negativity);
    h.emplace_back("probe0_mean", ens.mean[0].mean);
    h.emplace_back("probe0_second", ens.second[0].mean);
    h.emplace_back("probe0_second_se", ens.second[0].standard_error);
  }
  return h;
}

std::vector<Point> fk_targets(const ExperimentConfig& c) {
  if (!c.entries.has("fk.targets")) return std::vector<Point>(static_cast<std::size_t>(c.m), Point(static_cast<std::size_t>(c.spec.dim), 0.0));
  auto pts = group_points(c.entries.get_doubles("fk.targets"), c.spec.dim, "fk.targets");
  require(pts.size() == static_cast<std::size_t>(c.m), ErrorKind::ConfigInvalid, "fk.targets must hold m points");
  return pts;
}

Headlines run_fk(const ExperimentConfig& c, Outputs& out) {
  const auto targets = fk_targets(c);
  const auto e = fk_moment_estimate(c.spec, c.t, targets, c.u0, fk_options(c));
  auto f = out.open("fk_moment.csv");
  f << "m,value,standard_error,log_value,log_standard_error,replicas,stream\n";
  f << c.m << ',' << e.value << ',' << e.standard_error << ',' << e.log_value << ',' << e.log_standard_error << ','
    << e.replicas << ',' << range_label(c.seed, Purpose::Bridges, e.replicas) << '\n';
  return {{"value", e.value},
          {"standard_error", e.standard_error},
          {"log_value", e.log_value},
          {"log_standard_error", e.log_standard_error},
          {"exponent_max", e.exponent_max},
          {"sampled_assignments", e.sampled_assignments ? 1.0 : 0.0}};
}

Headlines run_theta(const ExperimentConfig& c, Outputs& out) {
  const auto th = theta_estimate(c.spec, c.t, c.m, fk_options(c), static_cast<int>(c.entries.get_int("theta.grid_size", 16)));
  auto f = out.open("theta_profile.csv");
  f << "m,s,log_value,log_standard_error,stream\n";
  for (std::size_t i = 0; i < th.s_grid.size(); ++i) {
    f << c.m << ',' << th.s_grid[i] << ',' << th.profile[i].log_value << ',' << th.profile[i].log_standard_error << ','
      << range_label(mix64(c.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1))), Purpose::Bridges, th.profile[i].replicas)
      << '\n';
  }
  return {{"m", static_cast<double>(c.m)},
          {"log_theta", th.best.log_value},
          {"log_theta_se", th.best.log_standard_error},
          {"argmax_s", th.argmax_s}};
}

void write_state(Outputs& out, const VariationalState& st, const std::string& name, std::uint64_t seed) {
  auto f = out.open(name);
  const auto& g = st.grid;
  f << coord_header(g.dim) << "g,stream\n";
  const std::string label = range_label(seed, Purpose::Variational, 1);
  const double h = g.spacing();
  for (std::size_t i = 0; i < st.values.size(); ++i) {
    std::size_t rest = i;
    std::vector<double> x(static_cast<std::size_t>(g.dim));
    for (int d = g.dim - 1; d >= 0; --d) {
      x[static_cast<std::size_t>(d)] = (static_cast<double>(rest % static_cast<std::size_t>(g.points)) - g.points / 2) * h;
      rest /= static_cast<std::size_t>(g.points);
    }
    write_point(f, x);
    f << st.values[i] << ',' << label << '\n';
  }
}

Headlines run_hartree(const ExperimentConfig& c, Outputs& out) {
  const std::string objective = c.entries.get_string("variational.objective", "hartree");
  const auto obj = objective == "m" ? VariationalObjective::M : VariationalObjective::Hartree;
  const auto r = optimize(c.spec, variational_grid(c), obj, variational_options(c));
  write_state(out, r.state, "maximizer.csv", c.seed);
  Headlines h{{"value", r.value},
              {"fourier_value", r.fourier_value},
              {"residual", r.state.residual},
              {"iterations", r.state.iterations},
              {"kinetic", r.state.kinetic},
              {"potential", r.state.potential},
              {"restart_spread", r.restart_spread}};
  if (obj == VariationalObjective::Hartree && c.spec.hypothesis == Hypothesis::H2) {
    try {
      const double a = scaling_exponent(c.spec);
      h.emplace_back("alpha", a);
      h.emplace_back("kappa", kappa_from_hartree(r.value, a));
      h.emplace_back("lambda0", lambda0(r.value, a, c.spec.dim, c.t).value);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotScaling && e.kind() != ErrorKind::BadAlpha) throw;
    }
  }
  return h;
}

Headlines run_me(const ExperimentConfig& c, Outputs& out) {
  const auto me = me_relation_check(c.spec, variational_grid(c), variational_options(c));
  auto f = out.open("me_check.csv");
  f << "m_value,hartree_value,predicted_m,residual,stream\n";
  f << me.m_value << ',' << me.hartree_value << ',' << me.predicted_m << ',' << me.residual << ','
    << range_label(c.seed, Purpose::Variational, 1) << '\n';
  const double tol = c.entries.get_double("tolerance.me_residual", 0.02);
  return {{"m_value", me.m_value},
          {"hartree_value", me.hartree_value},
          {"predicted_m", me.predicted_m},
          {"residual", me.residual},
          {"pass", me.residual < tol ? 1.0 : 0.0}};
}

Point source_point(const ExperimentConfig& c) {
  require(c.u0.atomic() && c.u0.atoms.size() == 1, ErrorKind::ConfigInvalid,
          "ratio-field experiments need a single Dirac initial datum");
  return c.u0.atoms[0].location;
}

std::vector<RatioField> ratio_fields(const ExperimentConfig& c, std::size_t count, const RatioOptions& ro) {
  const Point x0 = source_point(c);
  const double delta = c.entries.get_double("ratio.delta", -1.0);
  std::vector<RatioField> fields(count);
  // the ratio field is sequential inside; replicas run side by side
  parallel_for(count, c.workers, [&](std::size_t r, int) {
    fields[r] = ratio_field(x0, c.spec, c.grid, {c.seed, Purpose::Noise, static_cast<std::uint32_t>(r), 0}, c.t, delta, ro);
  });
  return fields;
}

Headlines run_peaks(const ExperimentConfig& c, Outputs& out) {
  const int first = static_cast<int>(c.entries.get_int("peaks.first", 1));
  const int last = static_cast<int>(c.entries.get_int("peaks.last", 8));
  const double a = c.entries.get_double("peaks.exponent", 0.5);
  const auto reps = static_cast<std::size_t>(c.entries.get_int("peaks.replicates", 32));
  const auto radii = exponential_radii(first, last);
  auto ro = ratio_options(c);
  // one cell of slack so the lattice reaches the largest radius
  ro.radius = radii.back() + c.grid.spacing;
  const auto fields = ratio_fields(c, reps, ro);
  std::vector<PeakSeries> series;
  double max_bias = 0.0;
  int violations = 0;
  auto f = out.open("peaks.csv");
  f << "replicate,R,statistic,excluded,stream\n";
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = peak_series(fields[r], radii);
    s.replicate = static_cast<std::uint32_t>(r);
    max_bias = std::max(max_bias, fields[r].bias);
    const std::string label = StreamId{c.seed, Purpose::Noise, static_cast<std::uint32_t>(r), 0}.label();
    for (std::size_t k = 0; k < s.entries.size(); ++k) {
      const auto& e = s.entries[k];
      if (k > 0 && e.statistic < s.entries[k - 1].statistic) ++violations;
      f << r << ',' << e.radius << ',' << e.statistic << ',' << e.excluded << ',' << label << '\n';
    }
    series.push_back(std::move(s));
  }
  const auto fit = fit_growth(series, a);
  std::vector<double> normalized;
  const double R = radii.back();
  for (const auto& s : series) normalized.push_back(s.entries.back().statistic / std::sqrt(std::log(R)));
  const double med = median(normalized);
  const double target = std::sqrt(2.0 * KernelEvaluator(c.spec).at_origin() * c.t);
  const double band = c.entries.get_double("tolerance.peak_band", 0.5);
  auto m = out.open("peaks_median.csv");
  m << "R,median_statistic,replicates,stream\n";
  for (std::size_t k = 0; k < radii.size(); ++k) {
    std::vector<double> col;
    for (const auto& s : series) col.push_back(s.entries[k].statistic);
    m << radii[k] << ',' << median(col) << ',' << reps << ',' << range_label(c.seed, Purpose::Noise, reps) << '\n';
  }
  const double ratio = med / target;
  return {{"median_normalized_peak", med},
          {"target", target},
          {"ratio_to_target", ratio},
          {"within_band", (ratio >= 1.0 - band && ratio <= 1.0 + band) ? 1.0 : 0.0},
          {"monotone_violations", violations},
          {"fit_slope", fit.slope},
          {"fit_half_width", fit.half_width},
          {"fit_r_squared", fit.r_squared},
          {"max_surrogate_bias", max_bias}};
}

Headlines run_holder(const ExperimentConfig& c, Outputs& out) {
  const auto reps = static_cast<std::size_t>(c.entries.get_int("holder.replicates", 16));
  std::vector<int> lags;
  for (double l : c.entries.get_doubles("holder.lags", {1, 2, 4, 8, 16, 32, 64})) lags.push_back(static_cast<int>(l));
  const auto fields = ratio_fields(c, reps, ratio_options(c));
  const auto hf = holder_estimate(fields, lags);
  auto f = out.open("holder.csv");
  f << "separation,mean_increment,replicates,stream\n";
  for (std::size_t i = 0; i < hf.separations.size(); ++i)
    f << hf.separations[i] << ',' << hf.mean_increments[i] << ',' << reps << ','
      << range_label(c.seed, Purpose::Noise, reps) << '\n';
  return {{"eta", hf.eta},
          {"raw_slope", hf.raw_slope},
          {"half_width", hf.half_width},
          {"saturated", hf.saturated ? 1.0 : 0.0}};
}

Headlines run_girsanov(const ExperimentConfig& c, Outputs& out) {
  GirsanovOptions o;
  o.replicas = c.replicas;
  o.steps = static_cast<int>(c.entries.get_int("girsanov.steps", 200));
  o.seed = c.seed;
  o.workers = c.workers;
  const double lambda = c.entries.get_double("girsanov.lambda", 0.5);
  const int dim = static_cast<int>(c.entries.get_int("girsanov.dim", 1));
  std::vector<std::string> names{"constant_one", "exp_neg_integrated_square", "sup_below_one", "endpoint_gaussian"};
  if (c.entries.has("girsanov.functionals")) names = split_list(c.entries.get_string("girsanov.functionals"));
  Headlines h;
  auto f = out.open("girsanov.csv");
  f << "functional,lhs,rhs,lhs_se,rhs_se,combined_se,exact,stream\n";
  double worst = 0.0;
  for (const auto& n : names) {
    const auto fn = girsanov_functional_from_string(n);
    const auto r = girsanov_check(lambda, c.t, dim, fn, o);
    f << n << ',' << r.lhs << ',' << r.rhs << ',' << r.lhs_se << ',' << r.rhs_se << ',' << r.combined_se << ','
      << (r.exact ? 1 : 0) << ',' << range_label(c.seed, Purpose::Girsanov, o.replicas) << '\n';
    h.emplace_back(n + ".lhs", r.lhs);
    h.emplace_back(n + ".rhs", r.rhs);
    const double gap = std::abs(r.lhs - r.rhs);
    const double z = r.exact ? (gap <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity()) : gap / r.combined_se;
    h.emplace_back(n + ".sigmas", z);
    worst = std::max(worst, z);
  }
  h.emplace_back("max_sigmas", worst);
  return h;
}

Headlines run_noise_check(const ExperimentConfig& c, Outputs& out) {
  const auto count = static_cast<std::size_t>(c.entries.get_int("noise.slices", 10000));
  NoiseSynthesizer synth(c.spec, c.grid);
  std::vector<NoiseSlice> slices;
  slices.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    slices.push_back(synth.synthesize({c.seed, Purpose::Noise, 0, static_cast<std::uint32_t>(i)}));
  std::vector<Point> lags;
  for (double l : c.entries.get_doubles("noise.lags", {0.0, 0.5, 1.0, 2.0})) {
    Point p(static_cast<std::size_t>(c.grid.dim), 0.0);
    p[0] = l;
    lags.push_back(p);
  }
  const auto cov = empirical_covariance(slices, lags, static_cast<std::size_t>(c.entries.get_int("noise.batches", 50)));
  if (c.entries.get_bool("output.binary", false)) {
    write_slice((out.dir() / "slice0.bin").string(), slices[0]);
    out.track("slice0.bin");
  }
  const double sigmas = c.entries.get_double("tolerance.noise_sigmas", 3.0);
  const double cell = std::pow(c.grid.spacing, c.grid.dim);
  auto f = out.open("noise_covariance.csv");
  f << "lag,estimate,standard_error,expected,z,stream\n";
  Headlines h;
  double worst = 0.0;
  for (const auto& lc : cov) {
    double expected;
    if (c.spec.is_delta()) {
      expected = squared_norm(lc.lag) == 0.0 ? c.grid.dt / cell : 0.0;
    } else {
      expected = gamma_eval(c.spec, lc.lag) * c.grid.dt;
    }
    const double z = std::abs(lc.estimate - expected) / lc.standard_error;
    worst = std::max(worst, z);
    f << lc.lag[0] << ',' << lc.estimate << ',' << lc.standard_error << ',' << expected << ',' << z << ','
      << "0-" << count - 1 << '@' << range_label(c.seed, Purpose::Noise, 1) << '\n';
    h.emplace_back("lag" + format_double(lc.lag[0]) + ".z", z);
  }
  h.emplace_back("aliased_fraction", synth.aliased_fraction());
  h.emplace_back("max_z", worst);
  h.emplace_back("pass", worst <= sigmas ? 1.0 : 0.0);
  return h;
}

Headlines dispatch(const ExperimentConfig& c, Outputs& out) {
  switch (c.kind) {
    case ExperimentKind::Simulate: return run_simulate(c, out);
    case ExperimentKind::FkMoments: return run_fk(c, out);
    case ExperimentKind::Theta: return run_theta(c, out);
    case ExperimentKind::Hartree: return run_hartree(c, out);
    case ExperimentKind::MeCheck: return run_me(c, out);
    case ExperimentKind::Peaks: return run_peaks(c, out);
    case ExperimentKind::Holder: return run_holder(c, out);
    case ExperimentKind::Girsanov: return run_girsanov(c, out);
    case ExperimentKind::NoiseCheck: return run_noise_check(c, out);
  }
  fail(ErrorKind::ConfigInvalid, "unhandled experiment kind");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  require(f.good(), ErrorKind::OutputUnwritable, "cannot write " + p.string());
  f << text;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, n] : kind_names())
    if (k == kind) return n;
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kind_names())
    if (n == name) return k;
  fail(ErrorKind::ConfigInvalid, "unknown experiment kind '" + name + "'");
}

std::vector<std::string> experiment_kind_names() {
  std::vector<std::string> out;
  for (const auto& [k, n] : kind_names()) out.push_back(n);
  return out;
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
  for (const auto& [k, v] : map.entries())
    require(known_keys().count(k) > 0, ErrorKind::ConfigInvalid, "unknown config key '" + k + "'");
  require(map.has("kind"), ErrorKind::ConfigInvalid, "config needs a kind");
  require(map.has("seed"), ErrorKind::ConfigInvalid, "config needs a seed");
  ExperimentConfig c;
  c.entries = map;
  try {
    c.kind = experiment_kind_from_string(map.get_string("kind"));
    c.seed = map.get_uint("seed");
    c.t = map.get_double("t", 1.0);
    c.m = static_cast<int>(map.get_int("m", 2));
    const auto reps = map.get_int("replicas", 1);
    c.workers = static_cast<int>(map.get_int("workers", default_workers()));
    c.zero_noise = map.get_bool("zero_noise", false);
    c.output_dir = map.get_string("output.dir", "pam-lab-out");
    require(c.t > 0.0, ErrorKind::ConfigInvalid, "t must be positive");
    require(c.m >= 1, ErrorKind::ConfigInvalid, "m must be at least 1");
    require(reps >= 1, ErrorKind::ConfigInvalid, "replicas must be at least 1");
    require(c.workers >= 1, ErrorKind::ConfigInvalid, "workers must be at least 1");
    c.replicas = static_cast<std::size_t>(reps);

    ConfigMap cov = map.subtree("covariance");
    if (!cov.has("kind")) cov.set("kind", "gaussian-bump");
    c.spec = spec_from_config(cov);

    c.u0 = measure_from(map, c.spec.dim);
    c.u0.validate();

    c.grid.dim = c.spec.dim;
    c.grid.points = static_cast<int>(map.get_int("grid.points", 256));
    c.grid.spacing = map.get_double("grid.spacing", 0.1);
    c.grid.dt = map.get_double("grid.dt", 0.01);
    c.grid.t_end = c.t;
    if (needs_grid(c.kind)) c.grid.validate();

    switch (c.kind) {
      case ExperimentKind::FkMoments:
        require(c.u0.atomic(), ErrorKind::ConfigInvalid, "fk-moments needs atomic initial data");
        fk_targets(c);
        break;
      case ExperimentKind::Theta:
        require(c.m >= 2, ErrorKind::ConfigInvalid, "theta needs m >= 2");
        break;
      case ExperimentKind::MeCheck:
        scaling_exponent(c.spec);
        variational_grid(c).validate();
        break;
      case ExperimentKind::Hartree:
        variational_grid(c).validate();
        break;
      case ExperimentKind::Peaks: {
        source_point(c);
        const int first = static_cast<int>(map.get_int("peaks.first", 1));
        const int last = static_cast<int>(map.get_int("peaks.last", 8));
        require(first >= 1 && last - first >= 3, ErrorKind::ConfigInvalid, "peaks needs at least four radii e^1 ..");
        require(std::exp(static_cast<double>(last)) + c.grid.spacing <= 0.5 * c.grid.period(), ErrorKind::ConfigInvalid,
                "largest radius exceeds half the lattice period");
        require(c.grid.dim == 1, ErrorKind::ConfigInvalid, "peaks runs in one dimension");
        require(map.get_int("peaks.replicates", 32) >= 1, ErrorKind::ConfigInvalid, "peaks.replicates must be >= 1");
        break;
      }
      case ExperimentKind::Holder:
        source_point(c);
        require(c.grid.dim == 1, ErrorKind::ConfigInvalid, "holder runs in one dimension");
        require(map.get_int("holder.replicates", 16) >= 16, ErrorKind::ConfigInvalid, "holder needs >= 16 replicates");
        break;
      case ExperimentKind::Girsanov:
        if (map.has("girsanov.functionals"))
          for (const auto& n : split_list(map.get_string("girsanov.functionals"))) girsanov_functional_from_string(n);
        require(map.get_double("girsanov.lambda", 0.5) > 0.0 && map.get_double("girsanov.lambda", 0.5) < 1.0,
                ErrorKind::ConfigInvalid, "girsanov.lambda must lie in (0, 1)");
        break;
      case ExperimentKind::NoiseCheck:
        require(map.get_int("noise.slices", 10000) >= 2, ErrorKind::ConfigInvalid, "noise.slices must be >= 2");
        break;
      case ExperimentKind::Simulate:
        break;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    throw Error(ErrorKind::ConfigInvalid, std::string(to_string(e.kind())) + ": " + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from_map(ConfigMap::load(path)); }

std::string ExperimentConfig::hash() const {
  ConfigMap h = entries;
  h.erase("output.dir");
  h.erase("workers");
  return h.hash();
}

std::optional<double> RunRecord::headline(const std::string& name) const {
  for (const auto& [n, v] : headlines)
    if (n == name) return v;
  return std::nullopt;
}

std::string RunRecord::headline_digest() const {
  std::string text;
  for (const auto& [n, v] : headlines) text += n + "=" + format_double(v) + "\n";
  return hex64(fnv1a64(text));
}

std::string RunRecord::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["started"] = started;
  j["finished"] = finished;
  j["seed"] = seed;
  j["status"] = status;
  if (!error_cause.empty()) j["error_cause"] = error_cause;
  if (!message.empty()) j["message"] = message;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"digest", o.digest}});
  nlohmann::ordered_json h = nlohmann::ordered_json::object();
  for (const auto& [n, v] : headlines) {
    if (std::isfinite(v)) {
      h[n] = v;
    } else {
      h[n] = v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    }
  }
  j["headlines"] = h;
  j["headline_digest"] = headline_digest();
  return j.dump(2) + "\n";
}

std::string code_version() { return PAMLAB_VERSION; }

RunRecord run(const ExperimentConfig& config) {
  RunRecord rec;
  rec.kind = to_string(config.kind);
  rec.config_hash = config.hash();
  rec.code_version = code_version();
  rec.seed = config.seed;
  rec.started = now_utc();
  Outputs out(config.output_dir);
  out.prepare();
  {
    std::ofstream f(out.dir() / "config.txt");
    require(f.good(), ErrorKind::OutputUnwritable, "cannot write config.txt");
    f << config.entries.canonical_text();
  }
  try {
    rec.headlines = dispatch(config, out);
  } catch (const Error& e) {
    rec.finished = now_utc();
    if (e.kind() == ErrorKind::OutputUnwritable || e.kind() == ErrorKind::ConfigInvalid) {
      rec.status = std::string(to_string(e.kind()));
      rec.message = e.what();
      try {
        write_text(out.dir() / "record.json", rec.to_json());
      } catch (const Error&) {
      }
      throw;
    }
    rec.status = std::string(to_string(ErrorKind::ModuleError));
    rec.error_cause = std::string(to_string(e.kind()));
    rec.message = e.what();
    rec.outputs = out.manifest();
    write_text(out.dir() / "record.json", rec.to_json());
    throw WrappedError(e.kind(), e.what());
  }
  rec.finished = now_utc();
  rec.outputs = out.manifest();
  write_text(out.dir() / "record.json", rec.to_json());
  return rec;
}

SweepOutcome sweep(const ExperimentConfig& base, const std::string& axis, std::span<const std::string> values) {
  require(known_keys().count(axis) > 0 && axis != "kind" && axis != "seed" && axis != "output.dir",
          ErrorKind::ConfigInvalid, "sweep axis '" + axis + "' is not a config leaf");
  require(!values.empty(), ErrorKind::ConfigInvalid, "sweep needs at least one value");
  SweepOutcome res;
  const fs::path root(base.output_dir);
  std::vector<ExperimentConfig> configs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ConfigMap m = base.entries;
    m.set(axis, values[i]);
    m.set("seed", std::to_string(mix64(base.seed + i + 1)));
    m.set("output.dir", (root / (axis + "=" + normalize_value(values[i]))).string());
    auto c = ExperimentConfig::from_map(m);
    c.workers = base.workers;
    configs.push_back(std::move(c));
  }
  for (const auto& c : configs) res.records.push_back(run(c));

  Outputs out(root);
  out.prepare();
  std::vector<std::string> columns;
  for (const auto& r : res.records)
    for (const auto& [n, v] : r.headlines)
      if (std::find(columns.begin(), columns.end(), n) == columns.end()) columns.push_back(n);
  {
    auto f = out.open("sweep.csv");
    f << "axis_value,seed,config_hash";
    for (const auto& n : columns) f << ',' << n;
    f << ",first_headline_gap,stream\n";
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < res.records.size(); ++i) {
      const auto& r = res.records[i];
      f << normalize_value(values[i]) << ',' << r.seed << ',' << r.config_hash;
      for (const auto& n : columns) {
        const auto v = r.headline(n);
        f << ',';
        if (v) f << *v;
      }
      const double first = r.headlines.empty() ? std::numeric_limits<double>::quiet_NaN() : r.headlines[0].second;
      f << ',';
      if (i > 0) f << std::abs(first - prev);
      prev = first;
      f << ',' << r.seed << ":*\n";
    }
  }
  res.table = (root / "sweep.csv").string();

  if (base.kind == ExperimentKind::Theta && axis == "m") {
    std::vector<MomentPoint> pts;
    for (const auto& r : res.records)
      pts.push_back({static_cast<int>(*r.headline("m")), *r.headline("log_theta"), *r.headline("log_theta_se")});
    std::set<int> distinct;
    for (const auto& p : pts) distinct.insert(p.m);
    const bool positive = std::all_of(pts.begin(), pts.end(), [](const MomentPoint& p) { return p.log_theta > 0.0; });
    if (distinct.size() >= 3 && positive) {
      const auto fit = moment_growth_fit(pts, base.spec.alpha);
      res.moment_growth = fit;
      nlohmann::ordered_json j{{"p", fit.p}, {"p_se", fit.p_se}, {"coefficient", fit.coefficient},
                               {"target_p", fit.target_p}, {"r_squared", fit.r_squared}};
      auto f = out.open("moment_growth.json");
      f << j.dump(2) << '\n';
    }
  }
  return res;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigInvalid: return 2;
    case ErrorKind::OutputUnwritable: return 3;
    default: return 4;
  }
}

std::string error_cause(const Error& e) {
  if (const auto* w = dynamic_cast<const WrappedError*>(&e)) return std::string(to_string(w->cause()));
  return std::string(to_string(e.kind()));
}

}  // namespace pamlab
