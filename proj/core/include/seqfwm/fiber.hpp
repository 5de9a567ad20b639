#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqfwm/units.hpp"

namespace seqfwm {

enum class DispersionBackend { GeometryEmpirical, TaylorCoefficients };

/// beta(omega) = sum_k beta[k] (omega - omega_ref)^k / k!, beta[k] in s^k/m.
struct TaylorExpansion {
  OpticalFrequency omega_ref;
  std::vector<double> beta;
};

/// One fibre span: geometry, dispersion model and Kerr coefficient.
struct FiberSpec {
  std::string name;
  double pitch = 0.0;          // m
  double hole_diameter = 0.0;  // m
  double length = 0.0;         // m
  double gamma = 0.0;          // 1/(W m)
  double loss = 0.0;           // power attenuation, 1/m
  DispersionBackend backend = DispersionBackend::GeometryEmpirical;
  std::optional<TaylorExpansion> taylor;

  /// Throws DomainError when a physical invariant fails.
  void validate() const;
};

/// Wavelength band over which the geometry model may be evaluated.
inline constexpr double kEmpiricalMinWavelength = 500e-9;
inline constexpr double kEmpiricalMaxWavelength = 1800e-9;

/// Finite-difference step used for group delay on the geometry backend.
inline constexpr double kGroupDelayStep = 2.0 * kPi * 10e9;

/// Malitson three-term Sellmeier fit for fused silica.
double silica_index(double lambda);

/// Effective index of the fundamental mode of an endlessly-single-mode
/// hexagonal PCF from the Saitoh-Koshiba empirical V/W relations.
double empirical_effective_index(double pitch, double hole_diameter, double lambda);

/// Propagation constant, rad/m. Throws RangeError outside the backend's validity band.
double beta(const FiberSpec& fiber, OpticalFrequency omega);
/// d beta / d omega: analytic for Taylor, central difference (step kGroupDelayStep) otherwise.
double beta1(const FiberSpec& fiber, OpticalFrequency omega);
/// Central-difference group delay with an explicit step; available on both backends.
double beta1_numeric(const FiberSpec& fiber, OpticalFrequency omega, double step = kGroupDelayStep);
double beta2(const FiberSpec& fiber, OpticalFrequency omega);
double group_velocity(const FiberSpec& fiber, OpticalFrequency omega);

struct WalkOffLength {
  double value;     // m; +inf when the group velocities coincide
  bool no_walk_off;
};

/// L_w = tau_p / |1/vg(a) - 1/vg(b)|.
WalkOffLength walk_off_length(const FiberSpec& fiber, double lambda_a, double lambda_b, double tau_p);

/// First sign change of beta2 in [lambda_lo, lambda_hi], refined by bisection.
std::optional<double> zero_dispersion_wavelength(const FiberSpec& fiber, double lambda_lo, double lambda_hi,
                                                 std::size_t scan_points = 400);

/// Local Taylor expansion of any backend around omega_ref, coefficients beta0..beta_order.
TaylorExpansion taylor_from_fiber(const FiberSpec& fiber, OpticalFrequency omega_ref, int order = 4);

/// A phase-matching condition: sum_j sign_j * beta(omega_j) + nonlinear_offset = 0 over `length`.
struct CalibrationTarget {
  std::string label;
  std::vector<std::pair<int, OpticalFrequency>> terms;
  double nonlinear_offset = 0.0;  // rad/m
  double length = 0.0;            // m
  OpticalFrequency reference;     // natural expansion point of the process
};

inline constexpr double kCalibrationPhaseTolerance = 1e-3;  // rad

/// Adjust beta2..beta4 by the smallest relative change that zeroes every
/// target's mismatch in the least-squares sense. Returns a Taylor-backend copy
/// of `base`; throws CalibrationError if any |delta_beta L| stays above 1e-3 rad.
FiberSpec calibrate_taylor_from_targets(const FiberSpec& base, std::span<const CalibrationTarget> targets,
                                        std::optional<OpticalFrequency> omega_ref = std::nullopt);

/// Linear mismatch of a target on a fibre, rad/m (no nonlinear offset).
double target_linear_mismatch(const FiberSpec& fiber, const CalibrationTarget& target);

/// YAML block describing the Taylor coefficients, loadable by the scenario config.
std::string format_taylor_block(const FiberSpec& fiber);

}  // namespace seqfwm
