#pragma once

#include <array>
#include <numbers>

namespace pamlab {

template <typename Fn>
void for_each_wavenumber(const RealFft& fft, double dx, Fn&& fn) {
  const auto spectral = fft.spectral_shape();
  const int dim = static_cast<int>(spectral.size());
  std::array<double, 3> kvec{};
  std::array<int, 3> idx{};
  const std::size_t total = fft.spectral_size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % static_cast<std::size_t>(spectral[a]));
      rem /= static_cast<std::size_t>(spectral[a]);
    }
    double k2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double period = fft.shape()[a] * dx;
      kvec[a] = 2.0 * std::numbers::pi * fft.frequency_index(a, idx[a]) / period;
      k2 += kvec[a] * kvec[a];
    }
    fn(flat, k2, std::span<const double>(kvec.data(), static_cast<std::size_t>(dim)));
  }
}

}  // namespace pamlab
