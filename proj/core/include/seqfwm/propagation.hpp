#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "seqfwm/fft.hpp"
#include "seqfwm/fiber.hpp"
#include "seqfwm/grid.hpp"
#include "seqfwm/metrics.hpp"
#include "seqfwm/spectrum.hpp"

namespace seqfwm {

enum class StepPolicy { Adaptive, Fixed };

enum class VacuumNoiseModel {
  OnePhotonRandomPhase,  // |X_k|^2 dt / N = hbar omega_k, uniform phase
  HalfPhotonGaussian,    // complex Gaussian with mean energy hbar omega_k / 2 per bin
};

struct PropagationConfig {
  FiberSpec fiber;
  TemporalGrid grid;
  double dz_initial = 1e-3;    // m; the fixed step when step_policy is Fixed
  double error_target = 1e-6;  // relative local error per step
  bool include_vacuum_noise = false;
  std::uint64_t rng_seed = 0;
  StepPolicy step_policy = StepPolicy::Adaptive;
  VacuumNoiseModel noise_model = VacuumNoiseModel::OnePhotonRandomPhase;
  double min_step = 1e-9;      // m
  double edge_threshold = 1e-6;

  void validate() const;
};

/// Fraction of spectral energy in the outer kEdgeBandFraction of bins on each
/// side of the grid.
inline constexpr double kEdgeBandFraction = 0.05;
double spectral_edge_fraction(const FieldEnvelope& field);

struct PropagationReport {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  double output_edge_fraction = 0.0;
};

/// Symmetric split-step solver with the dispersion table of one fibre and
/// grid precomputed. Immutable after construction, so one instance can serve
/// many threads, each with its own FftWorkspace.
class SplitStepSolver {
 public:
  /// Throws RangeError when the grid reaches outside the fibre model's validity band.
  explicit SplitStepSolver(PropagationConfig cfg);

  const PropagationConfig& config() const noexcept { return cfg_; }
  /// beta(omega_k) - beta0 - beta1 Omega_k in FFT order, rad/m.
  const std::vector<double>& dispersion() const noexcept { return disp_; }

  /// Throws AliasingError when the input or output spectrum leaks into the
  /// grid edges beyond the threshold, StiffnessError when the adaptive step underflows.
  FieldEnvelope run(const FieldEnvelope& input, FftWorkspace& fft, PropagationReport* report = nullptr) const;

 private:
  PropagationConfig cfg_;
  std::vector<double> disp_;
};

/// Propagate through cfg.fiber. See SplitStepSolver::run.
FieldEnvelope propagate(const FieldEnvelope& field, const PropagationConfig& cfg);

/// Add vacuum fluctuations drawn from the given generator.
FieldEnvelope add_vacuum_noise(const FieldEnvelope& field, VacuumNoiseModel model, std::mt19937_64& rng);

/// Pump pulse plus CW seed (and vacuum noise when enabled, drawn from
/// cfg.rng_seed), propagated; returns the output spectrum (J per bin).
SpectrumRecord seeded_fwm_run(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                              const PropagationConfig& cfg);
/// Same run, returning the output field.
FieldEnvelope seeded_fwm_field(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                               const PropagationConfig& cfg);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

/// Freedman-Diaconis bin width 2 IQR n^(-1/3); a single bin when the IQR vanishes.
Histogram freedman_diaconis(const std::vector<double>& values);

/// Population standard deviation over the mean. Throws DomainError on empty or zero-mean input.
double fractional_std(const std::vector<double>& values);

struct EnsembleStats {
  std::vector<double> energies;  // J, in run order
  double mean = 0.0;
  double fractional_std = 0.0;
  Histogram histogram;
};

struct EnsembleSpec {
  std::size_t n_runs = 2000;
  double pump_jitter = 0.014;  // fractional std of the pump energy multiplier
  /// Idler selection; defaults to the degenerate partner of the seed +- 10 % of the pump-seed detuning.
  std::optional<FrequencyBand> idler_band;
  unsigned workers = 1;
};

/// Minimum ensemble size.
inline constexpr std::size_t kMinEnsembleRuns = 100;

/// Independent runs with fresh vacuum noise (if enabled) and pump energy
/// jitter. Run i draws from a stream keyed on (cfg.rng_seed, i), so the
/// result does not depend on the worker count.
EnsembleStats ensemble(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                       const PropagationConfig& cfg, const EnsembleSpec& spec);

/// Default idler band for a seed wavelength under a pump.
FrequencyBand default_idler_band(const PulseTrainSpec& pump, double seed_wavelength);

/// Deterministic 64-bit seed for run `index` of an ensemble seeded with `seed`.
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index);

/// CSV `run,energy_J`.
void write_energies_csv(std::ostream& os, const EnsembleStats& stats);
/// CSV `bin_lo_J,bin_hi_J,count`.
void write_histogram_csv(std::ostream& os, const Histogram& h);

}  // namespace seqfwm
