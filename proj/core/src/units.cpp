#include "seqfwm/units.hpp"

#include <cmath>
#include <string>

#include "seqfwm/errors.hpp"

namespace seqfwm {

OpticalFrequency OpticalFrequency::from_angular(double omega) {
  if (!std::isfinite(omega) || omega <= 0.0)
    throw DomainError("optical frequency must be finite and positive, got " + std::to_string(omega));
  return OpticalFrequency(omega);
}

OpticalFrequency OpticalFrequency::from_wavelength(double lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw DomainError("wavelength must be finite and positive, got " + std::to_string(lambda));
  return OpticalFrequency(2.0 * kPi * kSpeedOfLight / lambda);
}

OpticalFrequency OpticalFrequency::from_hertz(double nu) { return from_angular(2.0 * kPi * nu); }

OpticalFrequency wavelength_to_omega(double lambda) { return OpticalFrequency::from_wavelength(lambda); }

double omega_to_wavelength(OpticalFrequency omega) { return omega.wavelength(); }

double frequency_separation(OpticalFrequency a, OpticalFrequency b) {
  return std::abs(a.angular() - b.angular());
}

}  // namespace seqfwm
