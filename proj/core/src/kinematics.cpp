#include "seqfwm/kinematics.hpp"

#include <cmath>

#include "seqfwm/errors.hpp"

namespace seqfwm {

OpticalFrequency degenerate_fwm_partner(OpticalFrequency pump, OpticalFrequency sideband) {
  if (pump == sideband) throw DomainError("sideband coincides with the pump");
  const double partner = 2.0 * pump.angular() - sideband.angular();
  if (!(partner > 0.0)) throw DomainError("degenerate FWM partner frequency is not positive");
  return OpticalFrequency::from_angular(partner);
}

OpticalFrequency bs_fwm_output(OpticalFrequency input, OpticalFrequency pump_from, OpticalFrequency pump_to) {
  const double out = input.angular() + (pump_from.angular() - pump_to.angular());
  if (!(out > 0.0)) throw DomainError("Bragg-scattering output frequency is not positive");
  return OpticalFrequency::from_angular(out);
}

double twm_equivalent_pump(double lambda_in, double lambda_out) {
  if (!(lambda_in > 0.0) || !(lambda_out > 0.0)) throw DomainError("wavelengths must be positive");
  if (lambda_in == lambda_out) throw DomainError("TWM pump undefined for equal wavelengths");
  // Work in angular frequency; the reciprocal-wavelength form loses digits.
  const double omega_p = frequency_separation(wavelength_to_omega(lambda_in), wavelength_to_omega(lambda_out));
  return OpticalFrequency::from_angular(omega_p).wavelength();
}

ConversionSetup::ConversionSetup(OpticalFrequency pump_short, OpticalFrequency pump_long, OpticalFrequency input,
                                 ConversionDirection direction, double pump_short_peak_power,
                                 double pump_long_peak_power, FiberSpec fiber)
    : pump_short_(pump_short),
      pump_long_(pump_long),
      input_(input),
      output_(input),
      direction_(direction),
      p_short_(pump_short_peak_power),
      p_long_(pump_long_peak_power),
      fiber_(std::move(fiber)) {
  if (!(pump_short.angular() > pump_long.angular()))
    throw DomainError("short-wavelength pump must have the higher frequency");
  if (!(p_short_ >= 0.0) || !(p_long_ >= 0.0)) throw DomainError("pump powers must be non-negative");
  output_ = bs_fwm_output(input_, pump_from(), pump_to());
  for (auto f : {pump_short_, pump_long_, output_})
    if (f == input_) throw DomainError("conversion setup frequencies must be distinct");
  if (output_ == pump_short_ || output_ == pump_long_) throw DomainError("conversion setup frequencies must be distinct");
}

ConversionSetup ConversionSetup::with_input(OpticalFrequency input) const {
  return {pump_short_, pump_long_, input, direction_, p_short_, p_long_, fiber_};
}

ConversionSetup ConversionSetup::with_powers(double pump_short_peak_power, double pump_long_peak_power) const {
  return {pump_short_, pump_long_, input_, direction_, pump_short_peak_power, pump_long_peak_power, fiber_};
}

ConversionSetup ConversionSetup::with_fiber(FiberSpec fiber) const {
  return {pump_short_, pump_long_, input_, direction_, p_short_, p_long_, std::move(fiber)};
}

double detuning(const ConversionSetup& setup) { return frequency_separation(setup.pump_short(), setup.pump_long()); }

}  // namespace seqfwm
