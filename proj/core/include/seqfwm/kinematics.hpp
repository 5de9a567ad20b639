#pragma once

#include "seqfwm/fiber.hpp"
#include "seqfwm/units.hpp"

namespace seqfwm {

/// Degenerate FWM partner 2 omega_pump - omega_sideband.
OpticalFrequency degenerate_fwm_partner(OpticalFrequency pump, OpticalFrequency sideband);

/// Bragg-scattering output omega_in + omega_from - omega_to: one photon of
/// pump_from is annihilated and one of pump_to is created.
OpticalFrequency bs_fwm_output(OpticalFrequency input, OpticalFrequency pump_from, OpticalFrequency pump_to);

/// Pump wavelength of a three-wave-mixing process linking the two wavelengths:
/// 1/lambda_p = |1/lambda_in - 1/lambda_out|.
double twm_equivalent_pump(double lambda_in, double lambda_out);

/// Which pump donates its photon. Up moves the input to higher frequency
/// (absorbs a short-wavelength pump photon), Down to lower frequency.
enum class ConversionDirection { Up, Down };

/// The four Bragg-scattering fields and the fibre they meet in. The output
/// frequency is derived from the other three, so conservation holds by construction.
class ConversionSetup {
 public:
  ConversionSetup(OpticalFrequency pump_short, OpticalFrequency pump_long, OpticalFrequency input,
                  ConversionDirection direction, double pump_short_peak_power, double pump_long_peak_power,
                  FiberSpec fiber);

  OpticalFrequency pump_short() const noexcept { return pump_short_; }
  OpticalFrequency pump_long() const noexcept { return pump_long_; }
  OpticalFrequency input() const noexcept { return input_; }
  OpticalFrequency output() const noexcept { return output_; }
  ConversionDirection direction() const noexcept { return direction_; }
  double pump_short_peak_power() const noexcept { return p_short_; }
  double pump_long_peak_power() const noexcept { return p_long_; }
  const FiberSpec& fiber() const noexcept { return fiber_; }

  OpticalFrequency pump_from() const noexcept { return direction_ == ConversionDirection::Up ? pump_short_ : pump_long_; }
  OpticalFrequency pump_to() const noexcept { return direction_ == ConversionDirection::Up ? pump_long_ : pump_short_; }
  double pump_from_power() const noexcept { return direction_ == ConversionDirection::Up ? p_short_ : p_long_; }
  double pump_to_power() const noexcept { return direction_ == ConversionDirection::Up ? p_long_ : p_short_; }

  ConversionSetup with_input(OpticalFrequency input) const;
  ConversionSetup with_powers(double pump_short_peak_power, double pump_long_peak_power) const;
  ConversionSetup with_fiber(FiberSpec fiber) const;

 private:
  OpticalFrequency pump_short_;
  OpticalFrequency pump_long_;
  OpticalFrequency input_;
  OpticalFrequency output_;
  ConversionDirection direction_;
  double p_short_;
  double p_long_;
  FiberSpec fiber_;
};

/// Pump separation |omega_short - omega_long|, rad/s.
double detuning(const ConversionSetup& setup);

}  // namespace seqfwm
