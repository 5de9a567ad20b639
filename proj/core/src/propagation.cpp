#include "seqfwm/propagation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "seqfwm/errors.hpp"
#include "seqfwm/kinematics.hpp"

namespace seqfwm {

void PropagationConfig::validate() const {
  fiber.validate();
  if (!(dz_initial > 0.0) || dz_initial > fiber.length)
    throw DomainError("dz_initial must lie in (0, fiber length]");
  if (!(error_target > 1e-12) || !(error_target < 1e-2)) throw DomainError("error_target must lie in (1e-12, 1e-2)");
  if (!(min_step > 0.0)) throw DomainError("min_step must be positive");
  if (!(edge_threshold > 0.0)) throw DomainError("edge_threshold must be positive");
}

namespace {

std::size_t edge_bins(std::size_t n) { return std::max<std::size_t>(1, static_cast<std::size_t>(kEdgeBandFraction * n)); }

// Spectral buffer in FFT order.
double edge_fraction(std::span<const Complex> spectrum) {
  const std::size_t n = spectrum.size();
  const std::size_t m = edge_bins(n);
  double total = 0.0, edge = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = std::norm(spectrum[k]);
    total += p;
    const std::size_t from_nyquist = k < n / 2 ? n / 2 - k : k - n / 2;
    if (from_nyquist < m) edge += p;
  }
  return total > 0.0 ? edge / total : 0.0;
}

void check_edges(double fraction, double threshold, const char* where) {
  if (fraction > threshold) {
    std::ostringstream msg;
    msg << where << " spectrum holds " << fraction << " of its energy in the grid edges (threshold " << threshold
        << "); widen the grid";
    throw AliasingError(msg.str(), fraction);
  }
}

}  // namespace

double spectral_edge_fraction(const FieldEnvelope& field) {
  FftWorkspace fft(field.grid().n_points());
  std::copy(field.samples().begin(), field.samples().end(), fft.data().begin());
  fft.forward();
  return edge_fraction(fft.data());
}

SplitStepSolver::SplitStepSolver(PropagationConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto& grid = cfg_.grid;
  const std::size_t n = grid.n_points();
  const double w0 = grid.carrier().angular();
  const double lo = w0 - grid.nyquist();
  const double hi = w0 + grid.nyquist();
  if (cfg_.fiber.backend == DispersionBackend::GeometryEmpirical) {
    const double w_min = wavelength_to_omega(kEmpiricalMaxWavelength).angular();
    const double w_max = wavelength_to_omega(kEmpiricalMinWavelength).angular();
    if (lo < w_min || hi > w_max) {
      std::ostringstream msg;
      msg << "grid spans " << omega_to_wavelength(OpticalFrequency::from_angular(hi)) * 1e9 << "-"
          << (lo > 0.0 ? omega_to_wavelength(OpticalFrequency::from_angular(lo)) * 1e9 : INFINITY)
          << " nm, outside the geometry model's " << kEmpiricalMinWavelength * 1e9 << "-"
          << kEmpiricalMaxWavelength * 1e9 << " nm band";
      throw RangeError(msg.str(), lo < w_min ? kEmpiricalMaxWavelength : kEmpiricalMinWavelength);
    }
  } else if (!(lo > 0.0)) {
    throw RangeError("grid reaches non-positive absolute frequency", 0.0);
  }
  const double b0 = beta(cfg_.fiber, grid.carrier());
  const double b1 = beta1(cfg_.fiber, grid.carrier());
  disp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = grid.frequency_offset(k);
    disp_[k] = beta(cfg_.fiber, OpticalFrequency::from_angular(w0 + dw)) - b0 - b1 * dw;
  }
}

namespace {

// exp(-i phi) for the Kerr kick. Per-step phases are small, where a Taylor
// series is exact to rounding and several times cheaper than sin/cos.
inline Complex kerr_rotation(double phi) {
  if (std::abs(phi) > 0.25) return std::polar(1.0, -phi);
  constexpr double c2 = -1.0 / 2, c4 = 1.0 / 24, c6 = -1.0 / 720, c8 = 1.0 / 40320, c10 = -1.0 / 3628800,
                   c12 = 1.0 / 479001600;
  constexpr double s3 = -1.0 / 6, s5 = 1.0 / 120, s7 = -1.0 / 5040, s9 = 1.0 / 362880, s11 = -1.0 / 39916800;
  const double x2 = phi * phi;
  const double c = 1.0 + x2 * (c2 + x2 * (c4 + x2 * (c6 + x2 * (c8 + x2 * (c10 + x2 * c12)))));
  const double s = phi * (1.0 + x2 * (s3 + x2 * (s5 + x2 * (s7 + x2 * (s9 + x2 * s11)))));
  return {c, -s};
}

// Complex product without the C99 NaN recovery path.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

class StepKernel {
 public:
  StepKernel(const SplitStepSolver& s, FftWorkspace& fft)
      : disp_(s.dispersion()),
        gamma_(s.config().fiber.gamma),
        alpha_(s.config().fiber.loss),
        n_(disp_.size()),
        fft_(fft) {}

  // Linear operator for a step h, by default with the 1/N of one
  // forward/inverse pair folded in.
  const std::vector<Complex>& op(double h, bool normalised = true) {
    const auto key = std::make_pair(h, normalised);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<Complex> v(n_);
    const double amp = std::exp(-0.5 * alpha_ * h) / (normalised ? static_cast<double>(n_) : 1.0);
    for (std::size_t k = 0; k < n_; ++k) v[k] = std::polar(amp, -disp_[k] * h);
    if (cache_.size() > 64) cache_.clear();
    return cache_.emplace(key, std::move(v)).first->second;
  }

  void multiply(std::span<Complex> buf, double h, bool normalised = true) {
    const auto& o = op(h, normalised);
    for (std::size_t k = 0; k < n_; ++k) buf[k] = mul(buf[k], o[k]);
  }

  // Advance the unnormalised spectrum `from` by `kicks` symmetric steps
  // spanning h, merging the linear half-steps between kicks.
  void advance(std::vector<Complex>& out, const std::vector<Complex>& from, double h, int kicks) {
    auto buf = fft_.data();
    const double s = h / kicks;
    std::copy(from.begin(), from.end(), buf.begin());
    multiply(buf, 0.5 * s);
    for (int j = 0; j < kicks; ++j) {
      fft_.inverse();
      kerr(buf, s);
      fft_.forward();
      if (j + 1 < kicks) multiply(buf, s);
      else multiply(buf, 0.5 * s, false);
    }
    out.assign(buf.begin(), buf.end());
  }

  void kerr(std::span<Complex> buf, double h) const {
    if (gamma_ == 0.0) return;
    const double g = gamma_ * h;
    for (auto& a : buf) a = mul(a, kerr_rotation(g * std::norm(a)));
  }

  FftWorkspace& fft() { return fft_; }

 private:
  const std::vector<double>& disp_;
  double gamma_;
  double alpha_;
  std::size_t n_;
  FftWorkspace& fft_;
  std::map<std::pair<double, bool>, std::vector<Complex>> cache_;
};

double relative_difference(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double d = 0.0, r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += std::norm(a[i] - b[i]);
    r += std::norm(a[i]);
  }
  return r > 0.0 ? std::sqrt(d / r) : 0.0;
}

}  // namespace

FieldEnvelope SplitStepSolver::run(const FieldEnvelope& input, FftWorkspace& fft, PropagationReport* report) const {
  if (!(input.grid() == cfg_.grid)) throw DomainError("field grid differs from the solver grid");
  if (fft.size() != cfg_.grid.n_points()) throw DomainError("FFT workspace size differs from the grid");
  const double length = cfg_.fiber.length;
  StepKernel kernel(*this, fft);
  PropagationReport rep;
  auto buf = fft.data();

  std::copy(input.samples().begin(), input.samples().end(), buf.begin());
  fft.forward();
  check_edges(edge_fraction(buf), cfg_.edge_threshold, "input");

  std::vector<Complex> a(input.samples().begin(), input.samples().end());
  if (cfg_.step_policy == StepPolicy::Fixed) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(length / cfg_.dz_initial - 1e-9)));
    const double h = length / static_cast<double>(steps);
    // buf already holds the input spectrum; half-steps between Kerr kicks are merged.
    kernel.multiply(buf, 0.5 * h);
    for (std::size_t i = 0; i < steps; ++i) {
      fft.inverse();
      kernel.kerr(buf, h);
      fft.forward();
      kernel.multiply(buf, i + 1 == steps ? 0.5 * h : h);
    }
    rep.accepted_steps = steps;
    rep.output_edge_fraction = edge_fraction(buf);
    fft.inverse();
    std::copy(buf.begin(), buf.end(), a.begin());
  } else {
    // The state stays in the spectral domain; norms and the extrapolation are
    // the same there by Parseval. Steps live on the lattice dz 2^(level/3),
    // so repeated lengths reuse the cached operators.
    std::vector<Complex> x(buf.begin(), buf.end()), coarse, fine;
    double z = 0.0;
    int level = 0;
    while (z < length) {
      const double h = cfg_.dz_initial * std::exp2(level / 3.0);
      const double hs = std::min(h, length - z);
      kernel.advance(coarse, x, hs, 1);
      kernel.advance(fine, x, hs, 2);
      const double err = relative_difference(fine, coarse);
      if (!(err <= cfg_.error_target)) {
        ++rep.rejected_steps;
        level -= 3;
        if (0.5 * hs < cfg_.min_step) {
          std::ostringstream msg;
          msg << "split-step underflow at z = " << z << " m (step " << 0.5 * hs << " m, local error " << err << ")";
          throw StiffnessError(msg.str(), z, 0.5 * hs);
        }
        continue;
      }
      // Local extrapolation: the combination cancels the leading error term of
      // the symmetric step, so the accepted field is one order higher. It is not
      // unitary, so it is rescaled to the energy of the fine result, which is exact.
      double e_fine = 0.0, e_x = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
        e_fine += std::norm(fine[i]);
        e_x += std::norm(x[i]);
      }
      if (e_x > 0.0) {
        const double r = std::sqrt(e_fine / e_x);
        for (auto& v : x) v *= r;
      }
      ++rep.accepted_steps;
      z = hs == length - z ? length : z + hs;
      if (err > 0.5 * cfg_.error_target) --level;
      else if (err < 0.25 * cfg_.error_target && hs == h) ++level;
    }
    std::copy(x.begin(), x.end(), buf.begin());
    rep.output_edge_fraction = edge_fraction(buf);
    const double inv = 1.0 / static_cast<double>(x.size());
    for (auto& v : buf) v *= inv;
    fft.inverse();
    std::copy(buf.begin(), buf.end(), a.begin());
  }
  check_edges(rep.output_edge_fraction, cfg_.edge_threshold, "output");
  if (report) *report = rep;
  return FieldEnvelope(cfg_.grid, std::move(a));
}

FieldEnvelope propagate(const FieldEnvelope& field, const PropagationConfig& cfg) {
  const SplitStepSolver solver(cfg);
  FftWorkspace fft(cfg.grid.n_points());
  return solver.run(field, fft);
}

FieldEnvelope add_vacuum_noise(const FieldEnvelope& field, VacuumNoiseModel model, std::mt19937_64& rng) {
  const auto& grid = field.grid();
  const std::size_t n = grid.n_points();
  FftWorkspace fft(n);
  auto buf = fft.data();
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = static_cast<double>(n) / grid.dt();
  for (std::size_t k = 0; k < n; ++k) {
    const double photon = kHbar * (grid.carrier().angular() + grid.frequency_offset(k));
    if (model == VacuumNoiseModel::OnePhotonRandomPhase) {
      buf[k] = std::polar(std::sqrt(photon * scale), phase(rng));
    } else {
      const double sigma = std::sqrt(0.25 * photon * scale);
      const double re = normal(rng);
      const double im = normal(rng);
      buf[k] = Complex(sigma * re, sigma * im);
    }
  }
  fft.inverse();
  std::vector<Complex> out(field.samples().begin(), field.samples().end());
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] += buf[i] * inv;
  return FieldEnvelope(grid, std::move(out));
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  };
  return mix(mix(seed) ^ (index * 0xD1B54A32D192ED03ull));
}

namespace {

FieldEnvelope initial_field(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                            const PropagationConfig& cfg, double energy_scale, std::mt19937_64* rng) {
  pump.validate();
  const auto& grid = cfg.grid;
  FieldEnvelope field = pulse_envelope(pump, grid, 0.0, energy_scale);
  if (seed_power < 0.0) throw DomainError("seed power must be non-negative");
  const auto seed = wavelength_to_omega(seed_wavelength);
  const double offset = seed.angular() - grid.carrier().angular();
  if (std::abs(offset) > grid.nyquist() * (1.0 - 2.0 * kEdgeBandFraction))
    throw DomainError("seed wavelength lies outside the grid bandwidth");
  if (seed_power > 0.0) field = field + cw_envelope(seed_power, seed, grid);
  if (cfg.include_vacuum_noise && rng) field = add_vacuum_noise(field, cfg.noise_model, *rng);
  return field;
}

}  // namespace

FieldEnvelope seeded_fwm_field(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                               const PropagationConfig& cfg) {
  std::mt19937_64 rng(run_seed(cfg.rng_seed, 0));
  const auto field = initial_field(pump, seed_power, seed_wavelength, cfg, 1.0, &rng);
  return propagate(field, cfg);
}

SpectrumRecord seeded_fwm_run(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                              const PropagationConfig& cfg) {
  return to_spectrum(seeded_fwm_field(pump, seed_power, seed_wavelength, cfg));
}

double fractional_std(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("fractional_std of an empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (!(mean > 0.0)) throw DomainError("fractional_std needs a positive mean");
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n) / mean;
}

Histogram freedman_diaconis(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("histogram of an empty sample");
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < s.size() ? s[i] + f * (s[i + 1] - s[i]) : s[i];
  };
  const double lo = s.front(), hi = s.back();
  const double width = 2.0 * (quantile(0.75) - quantile(0.25)) / std::cbrt(static_cast<double>(s.size()));
  Histogram h;
  if (!(width > 0.0) || hi == lo) {
    h.edges = {lo, hi};
    h.counts = {s.size()};
    return h;
  }
  constexpr std::size_t kMaxBins = 10000;
  const auto bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil((hi - lo) / width)), 1, kMaxBins);
  const double w = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + w * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : s) ++h.counts[std::min(bins - 1, static_cast<std::size_t>((v - lo) / w))];
  return h;
}

FrequencyBand default_idler_band(const PulseTrainSpec& pump, double seed_wavelength) {
  const auto seed = wavelength_to_omega(seed_wavelength);
  const auto idler = degenerate_fwm_partner(pump.center, seed);
  return FrequencyBand::around(idler.angular(), 0.1 * std::abs(seed.angular() - pump.center.angular()));
}

EnsembleStats ensemble(const PulseTrainSpec& pump, double seed_power, double seed_wavelength,
                       const PropagationConfig& cfg, const EnsembleSpec& spec) {
  if (spec.n_runs < kMinEnsembleRuns)
    throw DomainError("an ensemble needs at least " + std::to_string(kMinEnsembleRuns) + " runs");
  if (!(spec.pump_jitter >= 0.0)) throw DomainError("pump jitter must be non-negative");
  const SplitStepSolver solver(cfg);
  const FrequencyBand band = spec.idler_band.value_or(default_idler_band(pump, seed_wavelength));

  EnsembleStats stats;
  stats.energies.assign(spec.n_runs, 0.0);
  auto one = [&](std::size_t i, FftWorkspace& fft) {
    std::mt19937_64 rng(run_seed(cfg.rng_seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::max(0.0, 1.0 + spec.pump_jitter * normal(rng));
    const auto field = initial_field(pump, seed_power, seed_wavelength, cfg, scale, &rng);
    stats.energies[i] = integrate_band_power(to_spectrum(solver.run(field, fft)), band);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(spec.n_runs)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          FftWorkspace fft(cfg.grid.n_points());
          for (std::size_t i; (i = next.fetch_add(1)) < spec.n_runs;) one(i, fft);
        } catch (...) {
          errors[w] = std::current_exception();
          next = spec.n_runs;
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  stats.mean = std::accumulate(stats.energies.begin(), stats.energies.end(), 0.0) / static_cast<double>(spec.n_runs);
  stats.fractional_std = fractional_std(stats.energies);
  stats.histogram = freedman_diaconis(stats.energies);
  return stats;
}

void write_energies_csv(std::ostream& os, const EnsembleStats& stats) {
  os << "run,energy_J\n";
  char buf[64];
  for (std::size_t i = 0; i < stats.energies.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.12e\n", i, stats.energies[i]);
    os << buf;
  }
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_lo_J,bin_hi_J,count\n";
  char buf[96];
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12e,%.12e,%zu\n", h.edges[i], h.edges[i + 1], h.counts[i]);
    os << buf;
  }
}

}  // namespace seqfwm
