#include "pamlab/bridges.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pamlab/error.hpp"
#include "pamlab/parallel.hpp"
#include "pamlab/stats.hpp"

namespace pamlab {

namespace {

void require_bounded(const CovarianceSpec& spec) {
  spec.validate();
  require(spec.bounded(), ErrorKind::UnboundedKernel,
          "bridge functionals need a bounded covariance (mollify with epsilon > 0)");
}

FKEstimate from_logs(std::span<const double> logs, std::size_t batches) {
  FKEstimate out;
  out.replicas = logs.size();
  const auto lm = batch_log_mean(logs, std::min(batches, logs.size()));
  out.log_value = lm.log_mean;
  out.log_standard_error = lm.relative_error;
  out.value = std::exp(lm.log_mean);
  out.standard_error = out.value * lm.relative_error;
  return out;
}

// int_0^t sum_{j<k} gamma(...) ds by trapezoid; offsets[j] holds start and
// end offsets of path j (2 * dim entries), or is empty.
double pair_exponent(const KernelEvaluator& gamma, const BridgeEnsemble& b, std::span<const double> offsets) {
  const int K = b.steps();
  const int dim = b.dim;
  const double h = b.horizon / K;
  double total = 0.0;
  std::vector<double> diff(static_cast<std::size_t>(dim));
  for (int j = 0; j < b.count; ++j) {
    for (int k = j + 1; k < b.count; ++k) {
      double acc = 0.0;
      for (int i = 0; i <= K; ++i) {
        const double frac = b.times[i] / b.horizon;
        for (int d = 0; d < dim; ++d) {
          double v = b.at(j, i, d) - b.at(k, i, d);
          if (!offsets.empty()) {
            const double* oj = offsets.data() + static_cast<std::size_t>(j) * 2 * dim;
            const double* ok = offsets.data() + static_cast<std::size_t>(k) * 2 * dim;
            v += (1.0 - frac) * (oj[d] - ok[d]) + frac * (oj[dim + d] - ok[dim + d]);
          }
          diff[d] = v;
        }
        const double g = gamma(diff);
        acc += (i == 0 || i == K) ? 0.5 * g : g;
      }
      total += acc * h;
    }
  }
  return total;
}

void fill_stats(FKEstimate& e, std::span<const double> exponents) {
  if (exponents.empty()) return;
  double sum = 0.0, mx = -std::numeric_limits<double>::infinity();
  for (double x : exponents) {
    sum += x;
    mx = std::max(mx, x);
  }
  e.exponent_mean = sum / static_cast<double>(exponents.size());
  e.exponent_max = mx;
}

void check_fk_options(const FKOptions& opts) {
  require(opts.replicas >= 2, ErrorKind::InvalidArgument, "need at least two replicas");
  require(opts.steps >= 2, ErrorKind::InvalidArgument, "need at least two time steps");
  require(opts.batches >= 2, ErrorKind::InvalidArgument, "need at least two batches");
}

}  // namespace

void sample_bridges_into(BridgeEnsemble& out, int m, double t, int K, int dim, const StreamId& stream) {
  require(m >= 1 && K >= 2 && dim >= 1, ErrorKind::InvalidArgument, "bridges need m >= 1, K >= 2, dim >= 1");
  require(t > 0.0, ErrorKind::NonPositiveTime, "bridge horizon must be positive");
  out.count = m;
  out.horizon = t;
  out.dim = dim;
  out.stream = stream;
  out.times.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) out.times[k] = t * k / K;
  out.times[K] = t;
  out.paths.assign(static_cast<std::size_t>(m) * (K + 1) * dim, 0.0);
  Stream rng(stream);
  const double sd = std::sqrt(t / K);
  for (int j = 0; j < m; ++j) {
    double* p = out.paths.data() + static_cast<std::size_t>(j) * (K + 1) * dim;
    for (int k = 1; k <= K; ++k)
      for (int d = 0; d < dim; ++d) p[k * dim + d] = p[(k - 1) * dim + d] + sd * rng.normal();
    for (int d = 0; d < dim; ++d) {
      const double end = p[K * dim + d];
      for (int k = 1; k < K; ++k) p[k * dim + d] -= (out.times[k] / t) * end;
      p[K * dim + d] = 0.0;
    }
  }
}

BridgeEnsemble sample_bridges(int m, double t, int K, int dim, const StreamId& stream) {
  BridgeEnsemble b;
  sample_bridges_into(b, m, t, K, dim, stream);
  return b;
}

FKEstimate bridge_exponential(const CovarianceSpec& spec, double t, int m, std::span<const Point> start,
                              std::span<const Point> end, const FKOptions& opts) {
  require_bounded(spec);
  check_fk_options(opts);
  require(m >= 1, ErrorKind::InvalidArgument, "need m >= 1");
  require(start.size() == end.size() && (start.empty() || static_cast<int>(start.size()) == m),
          ErrorKind::InvalidArgument, "offsets must be given for every path or not at all");
  const int dim = spec.dim;
  std::vector<double> offsets;
  for (std::size_t j = 0; j < start.size(); ++j) {
    require(static_cast<int>(start[j].size()) == dim && static_cast<int>(end[j].size()) == dim,
            ErrorKind::InvalidArgument, "offset dimension mismatch");
    offsets.insert(offsets.end(), start[j].begin(), start[j].end());
    offsets.insert(offsets.end(), end[j].begin(), end[j].end());
  }
  const KernelEvaluator gamma(spec);
  std::vector<double> logs(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::size_t r, int) {
    BridgeEnsemble b;
    sample_bridges_into(b, m, t, opts.steps, dim, {opts.seed, Purpose::Bridges, static_cast<std::uint32_t>(r), 0});
    logs[r] = m == 1 ? 0.0 : pair_exponent(gamma, b, offsets);
  });
  auto est = from_logs(logs, opts.batches);
  fill_stats(est, logs);
  return est;
}

FKEstimate fk_moment_estimate(const CovarianceSpec& spec, double t, std::span<const Point> targets, const Measure& u0,
                              const FKOptions& opts) {
  require_bounded(spec);
  check_fk_options(opts);
  u0.validate();
  require(u0.atomic(), ErrorKind::InvalidArgument, "Feynman-Kac moments need atomic initial data");
  require(t > 0.0, ErrorKind::NonPositiveTime, "t must be positive");
  const int m = static_cast<int>(targets.size());
  require(m >= 1, ErrorKind::InvalidArgument, "need at least one target");
  const int dim = spec.dim;
  require(u0.dim() == dim, ErrorKind::InvalidArgument, "initial data dimension mismatch");
  for (const auto& x : targets) require(static_cast<int>(x.size()) == dim, ErrorKind::InvalidArgument, "target dimension mismatch");

  const std::size_t atoms = u0.atoms.size();
  double combos = 1.0;
  for (int j = 0; j < m; ++j) combos *= static_cast<double>(atoms);
  const bool exact = combos <= static_cast<double>(opts.assignment_cap);
  require(exact || opts.assignment_mode == AssignmentMode::Auto, ErrorKind::AssignmentExplosion,
          "atoms^m exceeds the assignment cap");

  // log of mass * p_t(atom - x_j) per (j, atom)
  std::vector<double> logw(static_cast<std::size_t>(m) * atoms);
  std::vector<double> log_norm(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    for (std::size_t a = 0; a < atoms; ++a) {
      const double r2 = squared_distance(u0.atoms[a].location, targets[j]);
      logw[j * atoms + a] = std::log(u0.atoms[a].mass) - 0.5 * dim * std::log(2.0 * std::numbers::pi * t) - r2 / (2.0 * t);
    }
    log_norm[j] = log_sum_exp(std::span<const double>(logw.data() + j * atoms, atoms));
  }
  double log_total_norm = 0.0;
  for (double v : log_norm) log_total_norm += v;

  if (m == 1) {
    // no pairs: exact, zero variance
    FKEstimate e;
    e.replicas = opts.replicas;
    e.log_value = log_total_norm;
    e.value = std::exp(log_total_norm);
    return e;
  }

  const KernelEvaluator gamma(spec);
  const std::size_t n_assign = exact ? static_cast<std::size_t>(combos) : 1;
  std::vector<double> logs(opts.replicas);
  std::vector<double> exps(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::size_t r, int) {
    BridgeEnsemble b;
    sample_bridges_into(b, m, t, opts.steps, dim, {opts.seed, Purpose::Bridges, static_cast<std::uint32_t>(r), 0});
    std::vector<double> offsets(static_cast<std::size_t>(m) * 2 * dim);
    std::vector<std::size_t> pick(static_cast<std::size_t>(m));
    std::vector<double> terms;
    terms.reserve(n_assign);
    Stream choose({opts.seed, Purpose::Assignment, static_cast<std::uint32_t>(r), 0});
    double max_exp = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_assign; ++c) {
      double lw = 0.0;
      if (exact) {
        std::size_t rem = c;
        for (int j = 0; j < m; ++j) {
          pick[j] = rem % atoms;
          rem /= atoms;
          lw += logw[j * atoms + pick[j]];
        }
      } else {
        // draw atom j with probability mass * p_t / norm_j; weight becomes the full norm
        for (int j = 0; j < m; ++j) {
          double u = choose.uniform();
          std::size_t a = 0;
          for (; a + 1 < atoms; ++a) {
            u -= std::exp(logw[j * atoms + a] - log_norm[j]);
            if (u <= 0.0) break;
          }
          pick[j] = a;
        }
        lw = log_total_norm;
      }
      for (int j = 0; j < m; ++j) {
        for (int d = 0; d < dim; ++d) {
          offsets[j * 2 * dim + d] = targets[j][d];
          offsets[j * 2 * dim + dim + d] = u0.atoms[pick[j]].location[d];
        }
      }
      const double x = pair_exponent(gamma, b, offsets);
      max_exp = std::max(max_exp, x);
      terms.push_back(lw + x);
    }
    logs[r] = log_sum_exp(terms);
    exps[r] = max_exp;
  });
  auto est = from_logs(logs, opts.batches);
  fill_stats(est, exps);
  est.sampled_assignments = !exact;
  return est;
}

ThetaEstimate theta_estimate(const CovarianceSpec& spec, double t, int m, const FKOptions& opts, int s_grid_size) {
  require(m >= 2, ErrorKind::InvalidArgument, "Theta needs m >= 2");
  require(s_grid_size >= 1, ErrorKind::InvalidArgument, "s grid must be nonempty");
  require(t > 0.0, ErrorKind::NonPositiveTime, "t must be positive");
  ThetaEstimate out;
  out.s_grid.resize(static_cast<std::size_t>(s_grid_size));
  for (int i = 0; i < s_grid_size; ++i) {
    const double e = s_grid_size == 1 ? 0.0 : -10.0 * (s_grid_size - 1 - i) / (s_grid_size - 1);
    out.s_grid[i] = t * std::exp2(e);
  }
  out.s_grid.back() = t;
  for (int i = 0; i < s_grid_size; ++i) {
    FKOptions o = opts;
    // independent randomness per grid point
    o.seed = mix64(opts.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
    out.profile.push_back(bridge_exponential(spec, out.s_grid[i], m, {}, {}, o));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.profile.size(); ++i)
    if (out.profile[i].log_value > out.profile[best].log_value) best = i;
  out.best = out.profile[best];
  out.argmax_s = out.s_grid[best];
  return out;
}

std::string to_string(GirsanovFunctional f) {
  switch (f) {
    case GirsanovFunctional::ConstantOne: return "constant_one";
    case GirsanovFunctional::ExpNegIntegratedSquare: return "exp_neg_integrated_square";
    case GirsanovFunctional::SupBelowOne: return "sup_below_one";
    case GirsanovFunctional::EndpointGaussian: return "endpoint_gaussian";
  }
  return "unknown";
}

GirsanovFunctional girsanov_functional_from_string(const std::string& name) {
  for (auto f : {GirsanovFunctional::ConstantOne, GirsanovFunctional::ExpNegIntegratedSquare,
                 GirsanovFunctional::SupBelowOne, GirsanovFunctional::EndpointGaussian}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorKind::InvalidArgument, "unknown path functional: " + name);
}

namespace {

// path: (K+1) x dim samples on [0, horizon]
double apply_functional(GirsanovFunctional f, std::span<const double> path, int K, int dim, double horizon) {
  switch (f) {
    case GirsanovFunctional::ConstantOne:
      return 1.0;
    case GirsanovFunctional::ExpNegIntegratedSquare: {
      double acc = 0.0;
      for (int k = 0; k <= K; ++k) {
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) r2 += path[k * dim + d] * path[k * dim + d];
        acc += (k == 0 || k == K) ? 0.5 * r2 : r2;
      }
      return std::exp(-acc * horizon / K);
    }
    case GirsanovFunctional::SupBelowOne: {
      for (int k = 0; k <= K; ++k) {
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) r2 += path[k * dim + d] * path[k * dim + d];
        if (r2 >= 1.0) return 0.0;
      }
      return 1.0;
    }
    case GirsanovFunctional::EndpointGaussian: {
      double r2 = 0.0;
      for (int d = 0; d < dim; ++d) r2 += path[K * dim + d] * path[K * dim + d];
      return std::exp(-r2);
    }
  }
  return 0.0;
}

}  // namespace

GirsanovResult girsanov_check(double lambda, double t, int dim, GirsanovFunctional f, const GirsanovOptions& opts) {
  require(lambda > 0.0 && lambda < 1.0, ErrorKind::InvalidArgument, "lambda must lie in (0, 1)");
  require(t > 0.0, ErrorKind::NonPositiveTime, "t must be positive");
  require(dim >= 1, ErrorKind::InvalidArgument, "dimension must be >= 1");
  GirsanovResult out;
  if (f == GirsanovFunctional::ConstantOne) {
    // (1-lambda)^{-d/2} E exp(-|B(lambda t)|^2 / (2 (1-lambda) t)) with B(lambda t) ~ N(0, lambda t)
    out.lhs = 1.0;
    out.rhs = std::pow(1.0 - lambda, -0.5 * dim) * std::pow(1.0 + lambda / (1.0 - lambda), -0.5 * dim);
    out.exact = true;
    return out;
  }
  require(opts.replicas >= 2 && opts.steps >= 1 && opts.batches >= 2, ErrorKind::InvalidArgument,
          "girsanov check needs replicas >= 2, steps >= 1, batches >= 2");
  const int K = opts.steps;
  const double horizon = lambda * t;
  const double sd = std::sqrt(horizon / K);
  const double tail_sd = std::sqrt((1.0 - lambda) * t);
  const double prefactor = std::pow(1.0 - lambda, -0.5 * dim);
  std::vector<double> lhs(opts.replicas), rhs(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::size_t r, int) {
    std::vector<double> path(static_cast<std::size_t>(K + 1) * dim, 0.0);
    // bridge side: B on [0, lambda t], B(t) from the remaining increment
    Stream a({opts.seed, Purpose::Girsanov, static_cast<std::uint32_t>(r), 0});
    for (int k = 1; k <= K; ++k)
      for (int d = 0; d < dim; ++d) path[k * dim + d] = path[(k - 1) * dim + d] + sd * a.normal();
    std::vector<double> bt(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) bt[d] = path[K * dim + d] + tail_sd * a.normal();
    for (int k = 0; k <= K; ++k)
      for (int d = 0; d < dim; ++d) path[k * dim + d] -= (horizon * k / K / t) * bt[d];
    lhs[r] = apply_functional(f, path, K, dim, horizon);
    // Brownian side
    Stream b({opts.seed, Purpose::Girsanov, static_cast<std::uint32_t>(r), 1});
    std::fill(path.begin(), path.end(), 0.0);
    for (int k = 1; k <= K; ++k)
      for (int d = 0; d < dim; ++d) path[k * dim + d] = path[(k - 1) * dim + d] + sd * b.normal();
    double end2 = 0.0;
    for (int d = 0; d < dim; ++d) end2 += path[K * dim + d] * path[K * dim + d];
    rhs[r] = prefactor * std::exp(-end2 / (2.0 * (1.0 - lambda) * t)) * apply_functional(f, path, K, dim, horizon);
  });
  const auto l = batch_mean(lhs, opts.batches);
  const auto rr = batch_mean(rhs, opts.batches);
  out.lhs = l.mean;
  out.rhs = rr.mean;
  out.lhs_se = l.standard_error;
  out.rhs_se = rr.standard_error;
  out.combined_se = std::hypot(l.standard_error, rr.standard_error);
  return out;
}

double exit_hamiltonian(const ExitFunctionalSpec& h, double, std::span<const double> x) {
  switch (h.kind) {
    case ExitHamiltonian::Zero: return 0.0;
    case ExitHamiltonian::Constant: return h.level;
    case ExitHamiltonian::GaussianWell: {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return h.level * std::exp(-r2);
    }
  }
  return 0.0;
}

ExitResult exit_restricted_functional(const ExitFunctionalSpec& h, double t, const FKOptions& opts) {
  require(t > 0.0, ErrorKind::NonPositiveTime, "t must be positive");
  require(h.radius > 0.0 && h.dim >= 1, ErrorKind::InvalidArgument, "domain must be a ball of positive radius");
  check_fk_options(opts);
  const int K = opts.steps;
  const int dim = h.dim;
  const double r2max = h.radius * h.radius;
  std::vector<double> logs(opts.replicas);
  std::vector<char> alive(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::size_t r, int) {
    BridgeEnsemble b;
    sample_bridges_into(b, 1, t, K, dim, {opts.seed, Purpose::ExitTime, static_cast<std::uint32_t>(r), 0});
    double acc = 0.0;
    bool inside = true;
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int k = 0; k <= K && inside; ++k) {
      double rr = 0.0;
      for (int d = 0; d < dim; ++d) {
        x[d] = b.at(0, k, d);
        rr += x[d] * x[d];
      }
      if (rr >= r2max) inside = false;
      const double v = exit_hamiltonian(h, b.times[k] / t, x);
      acc += (k == 0 || k == K) ? 0.5 * v : v;
    }
    alive[r] = inside;
    logs[r] = acc * t / K;
  });
  double top = -std::numeric_limits<double>::infinity();
  std::size_t survivors = 0;
  for (std::size_t r = 0; r < logs.size(); ++r) {
    if (!alive[r]) continue;
    ++survivors;
    top = std::max(top, logs[r]);
  }
  if (survivors == 0) fail(ErrorKind::AllPathsExited, "every path left the domain; increase replicas or radius");
  std::vector<double> scaled(logs.size(), 0.0);
  for (std::size_t r = 0; r < logs.size(); ++r) scaled[r] = alive[r] ? std::exp(logs[r] - top) : 0.0;
  const auto m = batch_mean(scaled, std::min(opts.batches, scaled.size()));
  ExitResult out;
  out.replicas = logs.size();
  out.surviving_fraction = static_cast<double>(survivors) / static_cast<double>(logs.size());
  out.value = (top + std::log(m.mean)) / t;
  out.standard_error = m.standard_error / m.mean / t;
  return out;
}

}  // namespace pamlab
