#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pamlab/fft.hpp"
#include "pamlab/kernels.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

// Periodic lattice in space plus a uniform time grid. Site j along an axis
// sits at (j - points/2) * spacing, so the domain is [-L/2, L/2).
struct SpaceTimeGrid {
  int dim = 1;
  int points = 256;
  double spacing = 0.1;
  double dt = 0.01;
  double t_end = 1.0;

  double period() const { return points * spacing; }
  std::size_t sites() const;
  int steps() const;
  double coordinate(int j) const { return (j - points / 2) * spacing; }
  Point site(std::size_t flat) const;
  bool same_lattice(const SpaceTimeGrid& other) const;

  void validate() const;
};

struct NoiseSlice {
  int dim = 1;
  int points = 0;
  double spacing = 0.0;
  double dt = 0.0;
  CovarianceSpec spec;
  std::uint32_t step = 0;
  StreamId stream;
  std::vector<double> values;
};

// Fraction of the spectral mass of mu_eps lying outside the ball of radius
// pi / spacing, i.e. the part a lattice of that spacing cannot represent.
double aliased_mass_fraction(const CovarianceSpec& spec, double spacing);

// Stationary Gaussian slices with covariance gamma~(x - y) * dt, where gamma~
// is the periodized lattice covariance. White noise is filtered in Fourier
// space by sqrt of the lattice spectral weights
//   lambda_k = dt * mu_eps(k) / spacing^dim
// (the Riesz zero mode uses the average of mu over the ball of the same volume
// as one frequency cell). Unmollified white noise skips the transforms: the
// slice is i.i.d. N(0, dt / spacing^dim), which is the same distribution.
class NoiseSynthesizer {
 public:
  NoiseSynthesizer(const CovarianceSpec& spec, const SpaceTimeGrid& grid, double max_aliased_fraction = 0.01);

  const CovarianceSpec& spec() const noexcept { return spec_; }
  const SpaceTimeGrid& grid() const noexcept { return grid_; }
  double aliased_fraction() const noexcept { return aliased_; }
  // lambda_k on the half spectrum
  std::span<const double> weights() const noexcept { return weights_; }
  // per-site variance of a slice
  double site_variance() const noexcept { return site_variance_; }

  void synthesize_into(const StreamId& id, std::span<double> out);
  NoiseSlice synthesize(const StreamId& id);

 private:
  CovarianceSpec spec_;
  SpaceTimeGrid grid_;
  double aliased_ = 0.0;
  double site_variance_ = 0.0;
  bool iid_ = false;
  bool zero_ = false;
  std::vector<double> weights_;
  std::vector<double> amplitude_;  // sqrt(lambda_k) / sites
  RealFft fft_;
};

NoiseSlice synthesize_slice(const CovarianceSpec& spec, const SpaceTimeGrid& grid, const StreamId& id);

// Circular convolution with p_eps: the slice spectrum is multiplied by
// exp(-eps |k|^2 / 2), so its covariance spectrum gains exp(-eps |k|^2). The
// covariance tag's epsilon grows by eps / 2 under the exp(-2 eps |k|^2) convention.
NoiseSlice mollify_slice(const NoiseSlice& slice, double eps);

struct LagCovariance {
  Point lag;
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Lag covariances averaged over all lattice base points and slices (the field
// has known mean zero, so no centring). Lags are physical displacements that
// must sit on the lattice. Standard errors come from batch means over slices.
std::vector<LagCovariance> empirical_covariance(std::span<const NoiseSlice> slices, std::span<const Point> lags,
                                                std::size_t batches = 50);

// Flat binary dump: see README for the layout.
void write_slice(const std::string& path, const NoiseSlice& slice);
NoiseSlice read_slice(const std::string& path);

}  // namespace pamlab
