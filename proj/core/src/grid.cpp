#include "seqfwm/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "seqfwm/errors.hpp"

namespace seqfwm {

TemporalGrid::TemporalGrid(std::size_t n_points, double span, OpticalFrequency carrier)
    : n_(n_points), span_(span), carrier_(carrier) {
  if (!std::has_single_bit(n_points) || n_points < (std::size_t{1} << kMinLog2) ||
      n_points > (std::size_t{1} << kMaxLog2))
    throw DomainError("grid size must be a power of two between 2^10 and 2^22, got " +
                      std::to_string(n_points));
  if (!std::isfinite(span) || span <= 0.0) throw DomainError("grid span must be positive");
}

double TemporalGrid::time(std::size_t i) const noexcept {
  return (static_cast<double>(i) - static_cast<double>(n_ / 2)) * dt();
}

double TemporalGrid::frequency_offset(std::size_t k) const noexcept {
  const auto signed_k = k < n_ / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n_);
  return signed_k * frequency_step();
}

double TemporalGrid::frequency_step() const noexcept { return 2.0 * kPi / span_; }

double TemporalGrid::nyquist() const noexcept { return kPi / dt(); }

std::size_t TemporalGrid::nearest_bin(double omega) const noexcept {
  const auto half = static_cast<long long>(n_ / 2);
  auto k = std::llround((omega - carrier_.angular()) / frequency_step());
  k = std::clamp(k, -half, half - 1);
  return static_cast<std::size_t>(k < 0 ? k + static_cast<long long>(n_) : k);
}

FieldEnvelope::FieldEnvelope(TemporalGrid grid, std::vector<Complex> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.n_points())
    throw DomainError("envelope has " + std::to_string(samples_.size()) + " samples for a grid of " +
                      std::to_string(grid_.n_points()));
}

FieldEnvelope FieldEnvelope::zeros(const TemporalGrid& grid) {
  return FieldEnvelope(grid, std::vector<Complex>(grid.n_points()));
}

FieldEnvelope FieldEnvelope::operator+(const FieldEnvelope& other) const {
  if (!(grid_ == other.grid_)) throw DomainError("cannot add envelopes on different grids");
  std::vector<Complex> sum(samples_.size());
  std::transform(samples_.begin(), samples_.end(), other.samples_.begin(), sum.begin(), std::plus<>{});
  return FieldEnvelope(grid_, std::move(sum));
}

FieldEnvelope FieldEnvelope::scaled(double factor) const {
  std::vector<Complex> out(samples_);
  for (auto& a : out) a *= factor;
  return FieldEnvelope(grid_, std::move(out));
}

double field_energy(const FieldEnvelope& field) {
  const auto s = field.samples();
  const double sum = std::accumulate(s.begin(), s.end(), 0.0, [](double acc, Complex a) { return acc + std::norm(a); });
  return sum * field.grid().dt();
}

double peak_power(const FieldEnvelope& field) {
  double peak = 0.0;
  for (auto a : field.samples()) peak = std::max(peak, std::norm(a));
  return peak;
}

namespace {
// sech^2(t / T0) has FWHM 2 acosh(sqrt 2) T0.
const double kSechFwhmRatio = 2.0 * std::acosh(std::sqrt(2.0));
}  // namespace

double shape_factor(PulseShape shape) {
  switch (shape) {
    case PulseShape::Gaussian: return 2.0 * std::sqrt(std::log(2.0) / kPi);
    case PulseShape::Sech: return kSechFwhmRatio / 2.0;
    case PulseShape::Rectangular: return 1.0;
  }
  return 1.0;
}

double intensity_profile(PulseShape shape, double fwhm, double t) {
  switch (shape) {
    case PulseShape::Gaussian: return std::exp(-4.0 * std::log(2.0) * t * t / (fwhm * fwhm));
    case PulseShape::Sech: {
      const double c = 1.0 / std::cosh(kSechFwhmRatio * t / fwhm);
      return c * c;
    }
    case PulseShape::Rectangular: return std::abs(t) <= 0.5 * fwhm ? 1.0 : 0.0;
  }
  return 0.0;
}

void PulseTrainSpec::validate() const {
  if (!(tau_p >= 0.0) || !(rep_rate > 0.0) || !(avg_power >= 0.0))
    throw DomainError("pulse train needs tau_p >= 0, rep_rate > 0 and avg_power >= 0");
  if (tau_p * rep_rate >= 1.0) throw DomainError("pulse train duty cycle must be below unity");
}

double PulseTrainSpec::peak_power() const {
  validate();
  if (tau_p <= 0.0) throw DomainError("peak power undefined for zero pulse duration");
  return shape_factor(shape) * avg_power / (tau_p * rep_rate);
}

PulseTrainSpec PulseTrainSpec::with_avg_power(double power) const {
  auto copy = *this;
  copy.avg_power = power;
  return copy;
}

FieldEnvelope pulse_envelope(const PulseTrainSpec& train, const TemporalGrid& grid, double delay,
                             double energy_scale) {
  const double p0 = train.peak_power() * energy_scale;
  const double offset = train.center.angular() - grid.carrier().angular();
  const double t0 = train.shape == PulseShape::Gaussian ? train.tau_p / (2.0 * std::sqrt(std::log(2.0)))
                                                        : train.tau_p / kSechFwhmRatio;
  std::vector<Complex> samples(grid.n_points());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = grid.time(i) - delay;
    const double amplitude = std::sqrt(p0 * intensity_profile(train.shape, train.tau_p, t));
    const double chirp_phase = train.shape == PulseShape::Rectangular ? 0.0 : -0.5 * train.chirp * t * t / (t0 * t0);
    samples[i] = std::polar(amplitude, offset * grid.time(i) + chirp_phase);
  }
  return FieldEnvelope(grid, std::move(samples));
}

FieldEnvelope cw_envelope(double power, OpticalFrequency frequency, const TemporalGrid& grid) {
  if (power < 0.0) throw DomainError("CW power must be non-negative");
  const double offset = grid.frequency_offset(grid.nearest_bin(frequency.angular()));
  std::vector<Complex> samples(grid.n_points());
  const double amplitude = std::sqrt(power);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = std::polar(amplitude, offset * grid.time(i));
  return FieldEnvelope(grid, std::move(samples));
}

}  // namespace seqfwm
