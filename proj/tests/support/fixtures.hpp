#pragma once

#include <array>

#include "seqfwm/fiber.hpp"
#include "seqfwm/grid.hpp"
#include "seqfwm/kinematics.hpp"
#include "seqfwm/phasematch.hpp"

namespace seqfwm::testing {

inline PulseTrainSpec train(double lambda_nm, double avg_mw, double tau_ps = 12.0) {
  return {tau_ps * 1e-12, 80e6, avg_mw * 1e-3, OpticalFrequency::from_wavelength(lambda_nm * 1e-9)};
}

inline FiberSpec pcf1() {
  FiberSpec f;
  f.name = "pcf1";
  f.pitch = 1.51e-6;
  f.hole_diameter = 0.96e-6;
  f.length = 0.45;
  f.gamma = 0.05;
  return f;
}

inline FiberSpec pcf2_geometry() {
  FiberSpec f;
  f.name = "pcf2";
  f.pitch = 3.48e-6;
  f.hole_diameter = 1.57e-6;
  f.length = 1.2;
  f.gamma = 0.015;
  return f;
}

/// Coupled launch fraction into PCF 2 used throughout.
inline constexpr double kPcf2Coupling = 0.4;

/// Up-conversion setup 1531.6 nm -> 1091 nm at the given average pump powers (before coupling).
inline ConversionSetup pcf2_setup(const FiberSpec& f, double short_mw, double long_mw, double input_nm = 1531.6,
                                  ConversionDirection dir = ConversionDirection::Up) {
  const auto ps = train(777.0, short_mw * kPcf2Coupling);
  const auto pl = train(977.2, long_mw * kPcf2Coupling);
  return ConversionSetup(ps.center, pl.center, OpticalFrequency::from_wavelength(input_nm * 1e-9), dir,
                         ps.peak_power(), pl.peak_power(), f);
}

/// PCF 2 calibrated so the Bragg-scattering process is matched at 1531.6 nm
/// for 30 mW / 14 mW average pumps.
inline FiberSpec pcf2_calibrated() {
  const auto base = pcf2_geometry();
  const std::array targets{bs_target(pcf2_setup(base, 30.0, 14.0))};
  return calibrate_taylor_from_targets(base, targets);
}

}  // namespace seqfwm::testing
