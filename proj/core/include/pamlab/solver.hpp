#pragma once

#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "pamlab/kernels.hpp"
#include "pamlab/measure.hpp"
#include "pamlab/noise.hpp"
#include "pamlab/rng.hpp"
#include "pamlab/stats.hpp"

namespace pamlab {

struct SolverOptions {
  bool zero_noise = false;
};

struct FieldState {
  double t = 0.0;
  int steps = 0;
  SpaceTimeGrid grid;
  Measure u0;
  std::vector<double> values;
  double negativity_fraction = 0.0;
  double min_value = 0.0;
};

// p_t * u0 on the periodic lattice. Atoms go through the exact periodic heat
// kernel in Fourier space (truncated at the lattice Nyquist frequency); a
// density is integrated directly against the minimum-image heat kernel.
std::vector<double> lattice_heat_profile(double t, const Measure& u0, const SpaceTimeGrid& grid);

// Exponential Euler for the mild equation with Ito (left point) coupling:
//   u_1 = (p_dt * u0) (1 + xi_0),  u_{n+1} = H_dt[u_n (1 + xi_n)],
// H_dt the exact periodic heat semigroup exp(-|k|^2 dt / 2). Slice n of
// replica r is drawn from stream (seed, Noise, r, n).
class MildSolver {
 public:
  MildSolver(const CovarianceSpec& spec, const SpaceTimeGrid& grid);

  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  NoiseSynthesizer& synthesizer() noexcept { return synth_; }

  FieldState evolve(const Measure& u0, const StreamId& stream, double t, const SolverOptions& opts = {});

  // Advance `field` by one step with slice `noise`.
  void step(std::span<double> field, std::span<const double> noise);
  // Apply H_dt in place.
  void heat(std::span<double> field);

 private:
  CovarianceSpec spec_;
  SpaceTimeGrid grid_;
  NoiseSynthesizer synth_;
  RealFft fft_;
  std::vector<double> multiplier_;
  std::vector<double> noise_;
};

int steps_for(double t, double dt);

FieldState evolve_mild(const Measure& u0, const CovarianceSpec& spec, const SpaceTimeGrid& grid,
                       const StreamId& stream, double t, const SolverOptions& opts = {});

// Per-probe ensemble mean and second moment of u(t, probe) over replicas
// 0..replicas-1. Probes must be lattice sites.
struct EnsembleMoments {
  std::vector<Point> probes;
  std::vector<MeanEstimate> mean;
  std::vector<MeanEstimate> second;
  std::size_t replicas = 0;
  double mean_negativity = 0.0;
};

EnsembleMoments ensemble_moments(const Measure& u0, const CovarianceSpec& spec, const SpaceTimeGrid& grid,
                                 std::uint64_t seed, double t, std::size_t replicas, std::span<const Point> probes,
                                 int workers = 1, const SolverOptions& opts = {});

std::size_t lattice_index(const SpaceTimeGrid& grid, std::span<const double> x);

// K(x0; t, .) = Z(x0; t, .) / p_t(. - x0) with the Dirac datum replaced by
// p_delta(. - x0). In one dimension the ratio is computed on moving,
// exponentially tilted windows: a window with tilt theta carries
// w = u exp(theta (y - x0) - theta^2 (s + delta) / 2), which follows the heat
// flow with drift theta, so far-field values never underflow. Each lattice
// cell within `radius` of x0 is read from the window whose centre ends
// nearest to it. In two dimensions a single untilted full-lattice run is used.
struct RatioOptions {
  double bias_tolerance = std::numeric_limits<double>::infinity();
  bool audit_bias = true;
  int window_cells = 256;
  double tile_spacing = 8.0;
  double radius = -1.0;  // < 0: as far as the lattice allows
  bool zero_noise = false;
};

struct RatioField {
  Point x0;
  double t = 0.0;
  double delta = 0.0;
  int dim = 1;
  std::vector<double> coords;  // dim entries per cell
  std::vector<double> values;
  double bias = 0.0;  // sup |log K_delta - log K_{delta/2}|
  double negativity_fraction = 0.0;
  int tiles = 0;

  std::size_t size() const { return values.size(); }
  std::span<const double> position(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

double default_dirac_width(const SpaceTimeGrid& grid);

RatioField ratio_field(const Point& x0, const CovarianceSpec& spec, const SpaceTimeGrid& grid, const StreamId& stream,
                       double t, double delta, const RatioOptions& opts = {});

}  // namespace pamlab
