#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pamlab {

/// Real-to-complex FFT on a periodic lattice of shape `shape` (row-major,
/// last axis fastest). Owns aligned work buffers and a plan pair; transforms
/// are unnormalized in both directions. Instances are not shared between
/// threads; plan creation itself is serialized internally.
class RealFft {
 public:
  explicit RealFft(std::vector<int> shape);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  const std::vector<int>& shape() const noexcept { return shape_; }
  std::size_t real_size() const noexcept { return real_size_; }
  std::size_t spectral_size() const noexcept { return spectral_size_; }

  std::span<double> real() noexcept;
  std::span<std::complex<double>> spectrum() noexcept;

  /// real() -> spectrum()
  void forward();
  /// spectrum() -> real(); the result is scaled by real_size() relative to
  /// the input of the matching forward().
  void backward();

  /// Signed integer frequency index along `axis` for spectral position `i`.
  int frequency_index(int axis, int i) const;
  /// Shape of the half-spectrum (last axis n/2+1).
  std::vector<int> spectral_shape() const;

 private:
  void release();

  std::vector<int> shape_;
  std::size_t real_size_ = 0;
  std::size_t spectral_size_ = 0;
  double* real_ = nullptr;
  void* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// Calls fn(flat_spectral_index, wavenumber_squared, wavenumbers) for every
/// half-spectrum entry of an isotropic lattice with `points` per axis and
/// spacing `dx`. Wavenumbers are 2*pi*k/(points*dx) with k signed.
template <typename Fn>
void for_each_wavenumber(const RealFft& fft, double dx, Fn&& fn);

}  // namespace pamlab

#include "pamlab/detail/fft_impl.hpp"
