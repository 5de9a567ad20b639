#pragma once

#include <compare>
#include <numbers>

namespace seqfwm {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;     // m/s
inline constexpr double kHbar = 1.054571817e-34;         // J s

constexpr double nanometers(double v) { return v * 1e-9; }
constexpr double micrometers(double v) { return v * 1e-6; }
constexpr double picoseconds(double v) { return v * 1e-12; }
constexpr double terahertz(double v) { return v * 1e12; }
constexpr double milliwatts(double v) { return v * 1e-3; }

/// Angular optical frequency in rad/s. Always strictly positive.
class OpticalFrequency {
 public:
  /// Throws DomainError unless omega is finite and > 0.
  static OpticalFrequency from_angular(double omega);
  static OpticalFrequency from_wavelength(double lambda);
  static OpticalFrequency from_hertz(double nu);

  constexpr double angular() const noexcept { return omega_; }
  constexpr double hertz() const noexcept { return omega_ / (2.0 * kPi); }
  double wavelength() const noexcept { return 2.0 * kPi * kSpeedOfLight / omega_; }
  double photon_energy() const noexcept { return kHbar * omega_; }

  friend constexpr auto operator<=>(OpticalFrequency, OpticalFrequency) = default;

 private:
  constexpr explicit OpticalFrequency(double omega) : omega_(omega) {}
  double omega_;
};

/// omega = 2 pi c / lambda; non-positive wavelengths raise DomainError.
OpticalFrequency wavelength_to_omega(double lambda);
double omega_to_wavelength(OpticalFrequency omega);

/// |omega_a - omega_b| in rad/s.
double frequency_separation(OpticalFrequency a, OpticalFrequency b);

}  // namespace seqfwm
