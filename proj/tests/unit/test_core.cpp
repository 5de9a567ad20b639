#include <gtest/gtest.h>

#include <cmath>

#include "property.hpp"
#include "seqfwm/errors.hpp"
#include "seqfwm/fft.hpp"
#include "seqfwm/grid.hpp"
#include "seqfwm/metrics.hpp"
#include "seqfwm/spectrum.hpp"
#include "seqfwm/units.hpp"

using namespace seqfwm;
using seqfwm::testing::for_all;
using seqfwm::testing::Gen;

namespace {

TemporalGrid grid(std::size_t n = 4096, double span = 40e-12, double lambda = 777e-9) {
  return TemporalGrid(n, span, wavelength_to_omega(lambda));
}

FieldEnvelope random_envelope(Gen& g, const TemporalGrid& gr) {
  std::vector<Complex> s(gr.n_points());
  const double width = g.uniform(0.5e-12, 5e-12);
  const double t0 = g.uniform(-5e-12, 5e-12);
  const double amp = g.log_uniform(1e-3, 1e3);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = gr.time(i);
    const double env = std::exp(-0.5 * std::pow((t - t0) / width, 2));
    s[i] = amp * env * Complex(g.normal(), g.normal());
  }
  return FieldEnvelope(gr, std::move(s));
}

}  // namespace

TEST(Units, WavelengthToAngularFrequency) {
  // 2 pi c / lambda, evaluated independently.
  EXPECT_NEAR(wavelength_to_omega(1092e-9).angular(), 1.7249556477e15, 1e5);
  EXPECT_NEAR(wavelength_to_omega(1531.6e-9).angular(), 1.2298586885e15, 1e5);
}

TEST(Units, ConversionRoundTripIsInvolution) {
  for_all(500, 1, [](Gen& g) {
    const double lambda = g.log_uniform(200e-9, 20e-6);
    const double back = wavelength_to_omega(lambda).wavelength();
    EXPECT_LE(seqfwm::testing::rel_err(back, lambda), 1e-12);
    const double omega = g.log_uniform(1e14, 1e16);
    EXPECT_LE(seqfwm::testing::rel_err(OpticalFrequency::from_angular(omega).angular(), omega), 1e-12);
  });
}

TEST(Units, RejectsNonPhysicalFrequency) {
  EXPECT_THROW(wavelength_to_omega(0.0), DomainError);
  EXPECT_THROW(wavelength_to_omega(-1e-6), DomainError);
  EXPECT_THROW(OpticalFrequency::from_angular(std::nan("")), DomainError);
}

TEST(Grid, RejectsNonPowerOfTwo) {
  EXPECT_THROW(grid(3000), DomainError);
  EXPECT_THROW(grid(512), DomainError);
  EXPECT_THROW(grid(4096, 0.0), DomainError);
}

TEST(Grid, ZeroFieldHasZeroEnergy) { EXPECT_EQ(field_energy(FieldEnvelope::zeros(grid())), 0.0); }

TEST(Grid, ConstantFieldEnergyIsRectangleIntegral) {
  const auto g = grid(1024, 10e-12);
  const FieldEnvelope f(g, std::vector<Complex>(1024, Complex(1.0, 0.0)));
  EXPECT_NEAR(field_energy(f), 10e-12, 1e-24);
}

TEST(Grid, SechPulseEnergyMatchesClosedForm) {
  // integral P0 sech^2(t/T0) dt = 2 P0 T0
  const auto g = grid(1 << 14, 100e-12);
  std::vector<Complex> s(g.n_points());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(1e3) / std::cosh(g.time(i) / 1e-12);
  EXPECT_NEAR(field_energy(FieldEnvelope(g, s)), 2e-9, 2e-9 * 1e-9);
}

TEST(Grid, RefinementLeavesAnalyticPulseEnergyUnchanged) {
  const auto train = PulseTrainSpec{12e-12, 80e6, 0.7, wavelength_to_omega(777e-9)};
  const double e0 = field_energy(pulse_envelope(train, grid(4096, 200e-12)));
  for (std::size_t n : {8192u, 16384u}) {
    const double e = field_energy(pulse_envelope(train, grid(n, 200e-12)));
    EXPECT_LE(seqfwm::testing::rel_err(e, e0), 1e-9) << n;
  }
}

TEST(Grid, PulseTrainPeakPowerUsesShapeFactor) {
  const PulseTrainSpec t{12e-12, 80e6, 0.7, wavelength_to_omega(777e-9)};
  EXPECT_NEAR(t.peak_power(), 0.9394 * 0.7 / (12e-12 * 80e6), 0.7 / (12e-12 * 80e6) * 1e-3);
  const double sampled = peak_power(pulse_envelope(t, grid(1 << 14, 200e-12)));
  EXPECT_NEAR(sampled, t.peak_power(), t.peak_power() * 1e-3);
}

TEST(Spectrum, ParsevalHoldsForRandomEnvelopes) {
  for_all(40, 2, [](Gen& g) {
    const auto gr = grid(std::size_t{1} << g.integer(10, 14), g.uniform(10e-12, 200e-12));
    const auto f = random_envelope(g, gr);
    const double e = field_energy(f);
    EXPECT_LE(std::abs(to_spectrum(f).total() - e) / e, 1e-10);
  });
}

TEST(Spectrum, MonochromaticEnvelopeGivesSinglePeak) {
  const auto g = grid();
  const double shift = 37 * g.frequency_step();
  std::vector<Complex> s(g.n_points());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::polar(1.0, shift * g.time(i));
  const auto spec = to_spectrum(FieldEnvelope(g, s));
  std::size_t peak = 0;
  for (std::size_t i = 1; i < spec.size(); ++i)
    if (spec.psd[i] > spec.psd[peak]) peak = i;
  EXPECT_NEAR(spec.frequencies[peak], g.carrier().angular() + shift, 1e-3 * g.frequency_step());
  EXPECT_NEAR(spec.psd[peak], spec.total(), spec.total() * 1e-10);
}

TEST(Spectrum, GaussianTimeBandwidthProduct) {
  // intensity FWHM 12 ps -> spectral FWHM 2 ln2 / (pi tau) = 36.77 GHz
  const auto g = grid(1 << 14, 1600e-12);
  const PulseTrainSpec t{12e-12, 80e6, 0.1, g.carrier()};
  const auto spec = to_spectrum(pulse_envelope(t, g));
  const double width_hz = fwhm(spec, g.carrier().angular(), 2.0 * kPi * 1e12) / (2.0 * kPi);
  EXPECT_NEAR(width_hz, 36.7726e9, g.frequency_step() / (2.0 * kPi));
}

TEST(Spectrum, FrequencyAxisIsSortedAndUniform) {
  const auto spec = to_spectrum(FieldEnvelope::zeros(grid(1024)));
  spec.validate();
  for (std::size_t i = 1; i < spec.size(); ++i)
    EXPECT_NEAR(spec.frequencies[i] - spec.frequencies[i - 1], spec.resolution, spec.resolution * 1e-6);
}

TEST(Fft, ForwardInverseRoundTrip) {
  for_all(10, 3, [](Gen& g) {
    FftWorkspace ws(std::size_t{1} << g.integer(10, 13));
    std::vector<Complex> ref(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) ws.data()[i] = ref[i] = Complex(g.normal(), g.normal());
    ws.forward();
    ws.inverse();
    const double n = static_cast<double>(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) ASSERT_LT(std::abs(ws.data()[i] / n - ref[i]), 1e-12);
  });
}

TEST(Spectrum, ConcatenateRejectsOverlap) {
  SpectrumRecord a{{1.0, 2.0}, {0.0, 0.0}, 1.0};
  SpectrumRecord b{{1.5, 2.5}, {0.0, 0.0}, 1.0};
  const std::array parts{a, b};
  EXPECT_THROW(concatenate(parts), DomainError);
}
