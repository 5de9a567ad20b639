#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "seqfwm/grid.hpp"
#include "seqfwm/kinematics.hpp"

namespace seqfwm {

/// Strong-pump two-mode Bragg-scattering efficiency (photon number):
/// eta = (kappa/g)^2 sin^2(g L), kappa = 2 gamma sqrt(P1 P2), g^2 = kappa^2 + (dbeta/2)^2.
double eta_two_mode(double delta_beta, double gamma, double p1, double p2, double length);

struct ModeAmplitudes {
  std::complex<double> pump_short;
  std::complex<double> pump_long;
  std::complex<double> input;
  std::complex<double> output;
  double z = 0.0;
};

/// Photon flux sum |a_j|^2 / omega_j, scaled by omega_input so it reads in watts.
double photon_flux(const ConversionSetup& setup, const ModeAmplitudes& a);
/// |a_in|^2/omega_in + |a_out|^2/omega_out, same scaling.
double signal_photon_flux(const ConversionSetup& setup, const ModeAmplitudes& a);

struct FourModeOptions {
  double tolerance = 1e-8;       // relative photon-flux error budget over the span
  double initial_step = 1e-3;    // m
  double min_step = 1e-12;       // m
  bool fixed_step = false;
  double fixed_dz = 1e-3;        // m
  bool frequency_scaled_gamma = true;
};

/// Accepted integration points plus a dense-output interpolant.
class FourModeTrajectory {
 public:
  const std::vector<ModeAmplitudes>& points() const noexcept { return points_; }
  const ModeAmplitudes& final() const { return points_.back(); }
  std::size_t rejected_steps() const noexcept { return rejected_; }
  /// Dense output at any z in [0, L].
  ModeAmplitudes at(double z) const;

 private:
  friend FourModeTrajectory integrate_four_mode(const ConversionSetup&, const ModeAmplitudes&, const FourModeOptions&);
  using State = std::array<std::complex<double>, 4>;
  struct Segment {
    double z0, h;
    std::array<State, 5> coeff;  // Dormand-Prince continuous extension
  };
  std::vector<ModeAmplitudes> points_;
  std::vector<Segment> segments_;
  std::size_t rejected_ = 0;
};

/// Nonlinear coefficient of mode j in the four-mode model. With frequency
/// scaling, gamma_j = gamma omega_j / sqrt(omega_in omega_out), which makes
/// sum |a_j|^2 / omega_j an exact invariant and keeps the in/out coupling at 2 gamma.
struct ModeGammas {
  double pump_short, pump_long, input, output;
};
ModeGammas mode_gammas(const ConversionSetup& setup, bool frequency_scaled);

/// Adaptive Dormand-Prince 5(4) integration of the four coupled amplitudes
/// (SPM/XPM on every field plus the Bragg-scattering exchange term carrying
/// exp(+-i dbeta_linear z)). Throws StiffnessError on step underflow.
FourModeTrajectory integrate_four_mode(const ConversionSetup& setup, const ModeAmplitudes& initial,
                                       const FourModeOptions& options = {});

/// How the duty-cycle pulse width is defined.
enum class TauConvention { Fwhm, EquivalentRectangle };

struct PulsedEfficiency {
  double eta;
  double reference_duration;  // s, the tau used for normalisation
  bool walk_off_warning;      // fibre longer than the pump-pump walk-off length
  double walk_off_length;     // m
};

struct PulsedPumps {
  PulseTrainSpec pump_short;
  PulseTrainSpec pump_long;
  double delay = 0.0;  // long pump centre minus short pump centre, s
  TauConvention convention = TauConvention::Fwhm;
};

/// Within-pulse efficiency of a CW input: integral of eta_two_mode over the
/// instantaneous pump powers, divided by the short pump's duration. The mismatch
/// uses the linear part of the setup plus gamma (P_to(t) - P_from(t)).
PulsedEfficiency pulsed_efficiency(const ConversionSetup& setup, const PulsedPumps& pumps, double cw_input_power);

/// eta(t) on the given times, same model as pulsed_efficiency.
std::vector<double> conversion_profile(const ConversionSetup& setup, const PulsedPumps& pumps,
                                       std::span<const double> times);

enum class SweepAxis { ShortPumpPower, LongPumpPower, InputWavelength };

struct SweepSpec {
  SweepAxis axis;
  std::vector<double> values;  // average power (W) or input wavelength (m)
  unsigned workers = 1;
};

struct EfficiencySweep {
  std::vector<double> abscissa;
  std::vector<double> eta;
  ConversionDirection kind;
  SweepAxis axis;
};

EfficiencySweep sweep_efficiency(const ConversionSetup& setup, const PulsedPumps& pumps, double cw_input_power,
                                 const SweepSpec& spec);

/// CSV `avg_power_mW,eta` or `wavelength_nm,eta`.
void write_csv(std::ostream& os, const EfficiencySweep& sweep);

}  // namespace seqfwm
