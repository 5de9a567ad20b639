#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "seqfwm/fiber.hpp"
#include "seqfwm/kinematics.hpp"

namespace seqfwm {

/// Whether pump-induced SPM/XPM enters the mismatch.
enum class NonlinearTerms { Included, Excluded };

struct PhaseMatchResult {
  double delta_beta_linear;     // rad/m
  double delta_beta_nonlinear;  // rad/m
  double delta_beta_total;      // rad/m
  double coherence_length;      // pi / |delta_beta_total|, +inf when zero
  bool matched;                 // |delta_beta_total L| < pi

  static PhaseMatchResult make(double linear, double nonlinear, double length);
};

/// Degenerate FWM 2 omega_p -> omega_s + omega_i, idler from energy conservation.
/// Linear part beta_s + beta_i - 2 beta_p; nonlinear part +2 gamma P.
PhaseMatchResult mismatch_degenerate(const FiberSpec& fiber, OpticalFrequency pump, OpticalFrequency signal,
                                     double pump_peak_power, NonlinearTerms terms = NonlinearTerms::Included);

/// Bragg scattering in + from -> out + to. Linear part
/// beta_in + beta_from - beta_out - beta_to; nonlinear part gamma (P_to - P_from),
/// the SPM/XPM phase difference of the pumps in the weak-signal limit.
PhaseMatchResult mismatch_bs(const ConversionSetup& setup, NonlinearTerms terms = NonlinearTerms::Included);

/// Calibration targets that reproduce the mismatch conventions above.
CalibrationTarget degenerate_target(OpticalFrequency pump, OpticalFrequency signal, double pump_peak_power,
                                    const FiberSpec& fiber, NonlinearTerms terms = NonlinearTerms::Included);
/// Expansion reference is the midpoint of the two pumps.
CalibrationTarget bs_target(const ConversionSetup& setup, NonlinearTerms terms = NonlinearTerms::Included);

inline constexpr double kRootTolerance = 1e-6;  // rad/m

/// Input wavelength in [lambda_lo, lambda_hi] where the total BS mismatch of
/// `setup` (input replaced, output re-derived) vanishes. Bisection; throws
/// NotFoundError when the band edges do not bracket a sign change.
double find_matched_input(const ConversionSetup& setup, double lambda_lo, double lambda_hi,
                          NonlinearTerms terms = NonlinearTerms::Included);

struct BandwidthCurve {
  std::vector<double> input_wavelengths;  // m
  std::vector<double> efficiencies;       // sinc^2(delta_beta L / 2)
  double center;                          // m, argmax sample
  double fwhm;                            // m
};

inline constexpr std::size_t kDefaultCurvePoints = 201;

/// Low-conversion acceptance curve over an input-wavelength scan.
BandwidthCurve bandwidth_curve(const ConversionSetup& setup, double lambda_lo, double lambda_hi,
                               std::size_t n_points = kDefaultCurvePoints,
                               NonlinearTerms terms = NonlinearTerms::Included);

/// Width at half maximum of sampled data around its argmax, linear interpolation.
/// Throws NotFoundError if either side never drops below half.
double sampled_fwhm(const std::vector<double>& x, const std::vector<double>& y, std::size_t peak);

/// CSV with header `wavelength_nm,efficiency`.
void write_csv(std::ostream& os, const BandwidthCurve& curve);

}  // namespace seqfwm
