#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace seqfwm {

/// In-place complex FFT over an owned, SIMD-aligned buffer.
///
/// Forward is sum a_n exp(-2 pi i k n / N); inverse is the unnormalised
/// conjugate transform. One workspace per thread: execution touches only the
/// owned buffer, and plan creation is serialised internally.
class FftWorkspace {
 public:
  explicit FftWorkspace(std::size_t n);
  ~FftWorkspace();
  FftWorkspace(FftWorkspace&&) noexcept;
  FftWorkspace& operator=(FftWorkspace&&) noexcept;
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::span<std::complex<double>> data() noexcept;
  std::span<const std::complex<double>> data() const noexcept;

  void forward();
  /// Unnormalised: forward then inverse multiplies by N.
  void inverse();

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace seqfwm
