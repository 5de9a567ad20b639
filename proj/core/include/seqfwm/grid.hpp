#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "seqfwm/units.hpp"

namespace seqfwm {

using Complex = std::complex<double>;

/// Uniform periodic time grid centred on t = 0 with an optical carrier.
///
/// Sample i sits at t_i = (i - n/2) dt. Spectral bin k (FFT order) sits at the
/// carrier plus 2 pi k / span for k < n/2 and 2 pi (k - n) / span otherwise.
class TemporalGrid {
 public:
  static constexpr unsigned kMinLog2 = 10;
  static constexpr unsigned kMaxLog2 = 22;

  /// Throws DomainError unless n_points is a power of two in [2^10, 2^22] and span > 0.
  TemporalGrid(std::size_t n_points, double span, OpticalFrequency carrier);

  std::size_t n_points() const noexcept { return n_; }
  double span() const noexcept { return span_; }
  double dt() const noexcept { return span_ / static_cast<double>(n_); }
  OpticalFrequency carrier() const noexcept { return carrier_; }

  double time(std::size_t i) const noexcept;
  /// Angular frequency offset from the carrier of FFT bin k.
  double frequency_offset(std::size_t k) const noexcept;
  /// Bin spacing 2 pi / span, rad/s.
  double frequency_step() const noexcept;
  /// Largest representable |offset|: pi / dt.
  double nyquist() const noexcept;
  /// FFT bin closest to the given absolute frequency.
  std::size_t nearest_bin(double omega) const noexcept;

  friend bool operator==(const TemporalGrid&, const TemporalGrid&) = default;

 private:
  std::size_t n_;
  double span_;
  OpticalFrequency carrier_;
};

/// Complex envelope on a grid, |a|^2 in watts. Immutable once built.
class FieldEnvelope {
 public:
  FieldEnvelope(TemporalGrid grid, std::vector<Complex> samples);
  static FieldEnvelope zeros(const TemporalGrid& grid);

  const TemporalGrid& grid() const noexcept { return grid_; }
  std::span<const Complex> samples() const noexcept { return samples_; }
  Complex operator[](std::size_t i) const noexcept { return samples_[i]; }

  /// Pointwise sum; both envelopes must share a grid.
  FieldEnvelope operator+(const FieldEnvelope& other) const;
  FieldEnvelope scaled(double factor) const;

 private:
  TemporalGrid grid_;
  std::vector<Complex> samples_;
};

/// Energy sum |a_i|^2 dt, joules.
double field_energy(const FieldEnvelope& field);
double peak_power(const FieldEnvelope& field);

enum class PulseShape { Gaussian, Sech, Rectangular };

/// Ratio of peak power to energy / FWHM for a pulse shape
/// (Gaussian 2 sqrt(ln2 / pi) = 0.9394, sech^2 0.8814, rectangle 1).
double shape_factor(PulseShape shape);

/// Normalised intensity of a pulse with the given FWHM at time t (1 at t = 0).
double intensity_profile(PulseShape shape, double fwhm, double t);

/// A periodic pump pulse train.
struct PulseTrainSpec {
  double tau_p;            // FWHM duration, s
  double rep_rate;         // Hz
  double avg_power;        // W
  OpticalFrequency center;
  PulseShape shape = PulseShape::Gaussian;
  /// Linear chirp parameter C of exp(-(1 + iC) t^2 / 2T0^2); Gaussian and sech only.
  double chirp = 0.0;

  /// Throws DomainError when the duty cycle is not below one or a field is non-physical.
  void validate() const;
  double pulse_energy() const { return avg_power / rep_rate; }
  /// shape_factor(shape) * avg_power / (tau_p * rep_rate).
  double peak_power() const;
  PulseTrainSpec with_avg_power(double power) const;
};

/// One pulse of the train centred at t = delay, on the grid's carrier frame.
FieldEnvelope pulse_envelope(const PulseTrainSpec& train, const TemporalGrid& grid, double delay = 0.0,
                             double energy_scale = 1.0);

/// Continuous wave of the given power. The frequency is snapped to the nearest
/// bin so the field stays periodic on the grid.
FieldEnvelope cw_envelope(double power, OpticalFrequency frequency, const TemporalGrid& grid);

}  // namespace seqfwm
