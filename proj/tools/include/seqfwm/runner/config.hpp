#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqfwm/fiber.hpp"
#include "seqfwm/grid.hpp"
#include "seqfwm/kinematics.hpp"
#include "seqfwm/coupled.hpp"
#include "seqfwm/metrics.hpp"
#include "seqfwm/phasematch.hpp"
#include "seqfwm/propagation.hpp"

namespace seqfwm::runner {

/// Parse or validation failure. line/column are 1-based; 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line, int column)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what
                                    : what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

struct SourceDef {
  enum class Kind { Pulsed, Cw };
  std::string name;
  Kind kind = Kind::Cw;
  double wavelength = 0.0;  // m
  double power = 0.0;       // W; average power for pulsed sources
  PulseShape shape = PulseShape::Gaussian;
  double tau_p = 0.0;     // s
  double rep_rate = 0.0;  // Hz
  double chirp = 0.0;

  PulseTrainSpec train() const;
  /// Same source with a different average power.
  PulseTrainSpec train(double avg_power) const;
};

struct GridDef {
  std::string name;
  std::size_t points = 0;
  double span = 0.0;    // s
  std::string carrier;  // source name
};

enum class ConversionProcess { Bragg, Degenerate };

struct CalibrationDef {
  ConversionProcess process = ConversionProcess::Bragg;
  std::string pump_short, pump_long;  // sources
  double input_wavelength = 0.0;      // m (Bragg) or signal wavelength (degenerate)
  ConversionDirection direction = ConversionDirection::Up;
  std::optional<double> pump_short_power, pump_long_power;  // W average overrides
  std::optional<double> peak_power;                         // W, degenerate pump peak power override
  bool nonlinear = true;
};

struct FiberDef {
  FiberSpec spec;
  double coupling = 1.0;  // launch efficiency applied to every source entering the fibre
  std::vector<CalibrationDef> calibrate;
  std::optional<double> calibration_reference;  // m
};

enum class ScenarioKind { PhaseMatchScan, PowerSweep, WavelengthSweep, NoiseEnsemble, TwoStageChain, EstimateEfficiency };

const char* to_string(ScenarioKind kind);

/// The BS-FWM process a scenario evaluates.
struct ConversionDef {
  std::string fiber;
  std::string pump_short, pump_long, input;
  ConversionDirection direction = ConversionDirection::Up;
  std::optional<double> pump_short_power, pump_long_power;  // W average overrides
  double delay = 0.0;                                       // s
  TauConvention convention = TauConvention::Fwhm;
};

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::PhaseMatchScan;
  int line = 0;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;

  ConversionDef conversion;

  // PhaseMatchScan, WavelengthSweep
  double scan_lo = 0.0, scan_hi = 0.0;  // m
  std::size_t points = kDefaultCurvePoints;
  bool nonlinear = true;

  // PowerSweep
  SweepAxis axis = SweepAxis::ShortPumpPower;
  std::vector<double> powers;  // W average

  // NoiseEnsemble and stage 1 of TwoStageChain
  std::string stage1_fiber, grid, pump, seed_source;
  std::vector<double> seed_powers;  // W
  std::size_t runs = 2000;
  double jitter = 0.014;
  double dz = 2e-3;  // m
  StepPolicy step_policy = StepPolicy::Fixed;
  double error_target = 1e-6;
  VacuumNoiseModel noise_model = VacuumNoiseModel::OnePhotonRandomPhase;
  bool vacuum_noise = true;
  std::optional<double> idler_half_width;  // rad/s

  // TwoStageChain
  double stage_coupling = 0.4;  // PCF 1 idler power delivered into PCF 2
  double osa_resolution = 2e-9; // m
  double peak_tolerance = 2e-9; // m

  // EstimateEfficiency
  std::optional<double> eta_internal;  // synthesise spectra with this efficiency
  std::string spectrum_with_input, spectrum_blocked;  // CSV paths (imported mode)
  double band_half_width = 2.0 * kPi * 1e12;           // rad/s
  DutyConvention duty_convention = DutyConvention::Fwhm;
  double background = 0.0;                             // W per bin pedestal in synthesised spectra
};

struct Config {
  std::uint64_t seed = 0;
  std::map<std::string, FiberDef> fibers;  // calibrated where requested
  std::map<std::string, SourceDef> sources;
  std::map<std::string, GridDef> grids;
  std::vector<Scenario> scenarios;
  std::filesystem::path base_dir;

  const FiberDef& fiber(const std::string& name) const;
  const SourceDef& source(const std::string& name) const;
  TemporalGrid grid(const std::string& name) const;
  /// Setup with peak powers derived from the sources (after fibre coupling and overrides).
  ConversionSetup setup(const ConversionDef& c) const;
  PulsedPumps pumps(const ConversionDef& c) const;
};

/// Parse YAML text. Syntax errors carry line/column; semantic errors name the
/// failing identifier or invariant. Fibre calibrations run here.
Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

}  // namespace seqfwm::runner
