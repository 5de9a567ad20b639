#include "seqfwm/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace seqfwm {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct FftWorkspace::Impl {
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  explicit Impl(std::size_t n) {
    buffer = fftw_alloc_complex(n);
    if (buffer == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    // FFTW_ESTIMATE keeps the algorithm choice, and therefore the bits, reproducible.
    forward = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    inverse = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
    for (std::size_t i = 0; i < n; ++i) buffer[i][0] = buffer[i][1] = 0.0;
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
    fftw_free(buffer);
  }
};

FftWorkspace::FftWorkspace(std::size_t n) : n_(n), impl_(std::make_unique<Impl>(n)) {}
FftWorkspace::~FftWorkspace() = default;
FftWorkspace::FftWorkspace(FftWorkspace&&) noexcept = default;
FftWorkspace& FftWorkspace::operator=(FftWorkspace&&) noexcept = default;

std::span<std::complex<double>> FftWorkspace::data() noexcept {
  return {reinterpret_cast<std::complex<double>*>(impl_->buffer), n_};
}

std::span<const std::complex<double>> FftWorkspace::data() const noexcept {
  return {reinterpret_cast<const std::complex<double>*>(impl_->buffer), n_};
}

void FftWorkspace::forward() { fftw_execute(impl_->forward); }
void FftWorkspace::inverse() { fftw_execute(impl_->inverse); }

}  // namespace seqfwm
