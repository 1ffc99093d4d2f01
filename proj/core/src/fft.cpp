#include "pamlab/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <utility>

#include "pamlab/error.hpp"

namespace pamlab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::vector<int> shape) : shape_(std::move(shape)) {
  require(!shape_.empty() && shape_.size() <= 3, ErrorKind::InvalidArgument,
          "fft rank must be 1..3");
  real_size_ = 1;
  for (int n : shape_) {
    require(n >= 2, ErrorKind::InvalidArgument, "fft axis length must be >= 2");
    real_size_ *= static_cast<std::size_t>(n);
  }
  spectral_size_ = real_size_ / static_cast<std::size_t>(shape_.back()) *
                   static_cast<std::size_t>(shape_.back() / 2 + 1);

  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(2 * spectral_size_);
  spectrum_ = fftw_alloc_complex(spectral_size_);
  auto* spec = static_cast<fftw_complex*>(spectrum_);
  const int rank = static_cast<int>(shape_.size());
  forward_plan_ = fftw_plan_dft_r2c(rank, shape_.data(), real_, spec, FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_dft_c2r(rank, shape_.data(), spec, real_, FFTW_ESTIMATE);
  require(forward_plan_ && backward_plan_, ErrorKind::ModuleError, "fftw planning failed");
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept { *this = std::move(other); }

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    shape_ = std::move(other.shape_);
    real_size_ = std::exchange(other.real_size_, 0);
    spectral_size_ = std::exchange(other.spectral_size_, 0);
    real_ = std::exchange(other.real_, nullptr);
    spectrum_ = std::exchange(other.spectrum_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    backward_plan_ = std::exchange(other.backward_plan_, nullptr);
  }
  return *this;
}

void RealFft::release() {
  if (!real_ && !spectrum_ && !forward_plan_ && !backward_plan_) return;
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
  if (real_) fftw_free(real_);
  if (spectrum_) fftw_free(spectrum_);
  forward_plan_ = backward_plan_ = nullptr;
  real_ = nullptr;
  spectrum_ = nullptr;
}

std::span<double> RealFft::real() noexcept { return {real_, real_size_}; }

std::span<std::complex<double>> RealFft::spectrum() noexcept {
  // fftw_complex is layout-compatible with std::complex<double>.
  return {reinterpret_cast<std::complex<double>*>(spectrum_), spectral_size_};
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

void RealFft::backward() { fftw_execute(static_cast<fftw_plan>(backward_plan_)); }

int RealFft::frequency_index(int axis, int i) const {
  const int n = shape_[static_cast<std::size_t>(axis)];
  if (axis == static_cast<int>(shape_.size()) - 1) return i;  // half axis: 0..n/2
  return i <= n / 2 ? i : i - n;
}

std::vector<int> RealFft::spectral_shape() const {
  auto s = shape_;
  s.back() = s.back() / 2 + 1;
  return s;
}

}  // namespace pamlab
