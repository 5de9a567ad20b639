#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seqfwm/grid.hpp"
#include "seqfwm/spectrum.hpp"

namespace seqfwm {

/// Closed angular-frequency interval [lo, hi], rad/s.
struct FrequencyBand {
  double lo;
  double hi;

  static FrequencyBand around(double center, double half_width) { return {center - half_width, center + half_width}; }
  /// Band between two wavelengths given in either order.
  static FrequencyBand from_wavelengths(double lambda_a, double lambda_b);
  double center() const noexcept { return 0.5 * (lo + hi); }
  double width() const noexcept { return hi - lo; }
};

/// Trapezoidal integral of psd over the band, divided by the record's
/// resolution, so a flat psd p gives p times the number of bins spanned.
/// Band edges between samples are linearly interpolated. Throws RangeError
/// when the band leaves the record's support.
double integrate_band_power(const SpectrumRecord& s, const FrequencyBand& band);

/// Band power with and without the input field (the P and N terms).
struct BandPower {
  FrequencyBand band;
  double with_input;
  double background;

  double net() const noexcept { return with_input - background; }
};

BandPower measure_band(const SpectrumRecord& with_input, const SpectrumRecord& blocked, const FrequencyBand& band);

/// tau_p R_P. EquivalentRectangle uses the width of the rectangle with the
/// same peak power and energy, tau_p / shape_factor.
enum class DutyConvention { Fwhm, EquivalentRectangle };
double duty_cycle(const PulseTrainSpec& train, DutyConvention convention = DutyConvention::Fwhm);

struct EfficiencyEstimate {
  double eta;
  bool above_unity;  // physically impossible, usually a wrong D or band
};

/// (P_Sr - N_Sr) omega_T / (P_T D omega_Sr).
EfficiencyEstimate eta_up(const BandPower& p_sr, const BandPower& p_t, double duty, double omega_t, double omega_sr);
/// (P_T - N_T) omega_Sr / (P_Sr D omega_T).
EfficiencyEstimate eta_down(const BandPower& p_t, const BandPower& p_sr, double duty, double omega_sr,
                            double omega_t);

/// Window used by fwhm when searching for the local maximum.
inline constexpr double kDefaultPeakWindow = 2.0 * kPi * 2e12;  // rad/s

/// Full width at half of the local maximum nearest `around` (searched inside
/// +-window), with linear interpolation at the crossings. Throws NotFoundError
/// if the window holds no interior maximum or a side never drops below half.
double fwhm(const SpectrumRecord& s, double around, double window = kDefaultPeakWindow);

/// 10 log10(P_a / P_b) of two band powers.
double db_contrast(const SpectrumRecord& s, const FrequencyBand& band_a, const FrequencyBand& band_b);

/// Moving average over a fixed wavelength width, approximating an OSA
/// resolution bandwidth. The window is converted to frequency at each bin.
SpectrumRecord osa_smooth(const SpectrumRecord& s, double resolution_wavelength);

/// Power per bin in W converted to dBm (floored at -400 dBm).
double to_dbm(double watts);
double from_dbm(double dbm);

/// CSV: `# resolution_nm: <value>` then `wavelength_nm,psd_dBm_per_bin`,
/// rows in ascending wavelength. The resolution line refers to the bin width
/// at the record's centre wavelength.
void write_spectrum_csv(std::ostream& os, const SpectrumRecord& s);
/// Inverse of write_spectrum_csv. Throws DomainError with the line number on malformed input.
SpectrumRecord read_spectrum_csv(std::istream& is);

/// Parameters for synthesising the spectra an experiment would record: a CW
/// source, depleted while the pumps are on, and the converted light emitted
/// in pulses, averaged over one repetition period.
struct SynthesisSpec {
  OpticalFrequency source;
  OpticalFrequency converted;
  double input_power;         // W, CW source power
  double eta_internal;        // within-pulse photon conversion efficiency
  PulseTrainSpec window;      // timing and shape of the conversion window (the pump pulse)
  DutyConvention convention = DutyConvention::Fwhm;
  double background = 0.0;    // W per bin added to both records (pump-induced floor)
  std::size_t points = std::size_t{1} << 15;
  double band_half_width = 2.0 * kPi * 1e12;  // rad/s
};

struct ConversionSpectra {
  SpectrumRecord with_input;  // average W per bin
  SpectrumRecord blocked;
  FrequencyBand source_band;
  FrequencyBand converted_band;
  double duty;
};

/// The converted pulse carries eta(t) proportional to the window's intensity
/// profile, normalised so (1/tau) * integral eta dt = eta_internal under the
/// chosen duty convention. Throws DomainError if eta(t) would exceed 1.
ConversionSpectra synthesize_conversion(const SynthesisSpec& spec);

struct LinearFit {
  double slope;
  double intercept;
  double max_abs_residual;
};
/// Ordinary least squares y = slope x + intercept.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace seqfwm
