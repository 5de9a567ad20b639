#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "property.hpp"
#include "seqfwm/errors.hpp"
#include "seqfwm/metrics.hpp"

using namespace seqfwm;
using seqfwm::testing::for_all;
using seqfwm::testing::Gen;
using seqfwm::testing::rel_err;

namespace {

SpectrumRecord flat(double value, std::size_t n = 1001, double f0 = 1.2e15, double df = 1e10) {
  SpectrumRecord s;
  s.resolution = df;
  for (std::size_t i = 0; i < n; ++i) {
    s.frequencies.push_back(f0 + static_cast<double>(i) * df);
    s.psd.push_back(value);
  }
  return s;
}

SpectrumRecord gaussian(double sigma, double df, double f0 = 1.2e15, std::size_t n = 4001) {
  auto s = flat(0.0, n, f0 - 0.5 * static_cast<double>(n - 1) * df, df);
  for (std::size_t i = 0; i < n; ++i) s.psd[i] = std::exp(-0.5 * std::pow((s.frequencies[i] - f0) / sigma, 2));
  return s;
}

BandPower band(double with_input, double background) { return {{0.0, 1.0}, with_input, background}; }

OpticalFrequency nm(double v) { return OpticalFrequency::from_wavelength(v * 1e-9); }

}  // namespace

TEST(BandPower, ZeroSpectrumIntegratesToZero) {
  const auto s = flat(0.0);
  EXPECT_EQ(integrate_band_power(s, {s.frequencies[10], s.frequencies[500]}), 0.0);
}

TEST(BandPower, FlatSpectrumCountsBins) {
  const auto s = flat(2.5);
  // 100 bin widths between the edges
  EXPECT_NEAR(integrate_band_power(s, {s.frequencies[100], s.frequencies[200]}), 2.5 * 100, 1e-9);
}

TEST(BandPower, FullSupportEqualsTotal) {
  for_all(50, 51, [](Gen& g) {
    auto s = flat(0.0, static_cast<std::size_t>(g.integer(50, 3000)));
    for (auto& v : s.psd) v = g.log_uniform(1e-15, 1e-3);
    const FrequencyBand all{s.frequencies.front() - 0.5 * s.resolution, s.frequencies.back() + 0.5 * s.resolution};
    EXPECT_LT(rel_err(integrate_band_power(s, all), s.total()), 1e-10);
  });
}

TEST(BandPower, AdditiveOverDisjointBands) {
  for_all(100, 52, [](Gen& g) {
    auto s = flat(0.0, 800);
    for (auto& v : s.psd) v = g.uniform(0.0, 1.0);
    const double lo = s.frequencies[3] + g.uniform(0, 100) * s.resolution;
    const double hi = lo + g.uniform(50, 600) * s.resolution;
    const double cut = lo + g.uniform(0.0, 1.0) * (hi - lo);
    const double whole = integrate_band_power(s, {lo, hi});
    EXPECT_NEAR(integrate_band_power(s, {lo, cut}) + integrate_band_power(s, {cut, hi}), whole, 1e-9 * whole);
  });
}

TEST(BandPower, OutsideSupportIsRangeError) {
  const auto s = flat(1.0);
  EXPECT_THROW(integrate_band_power(s, {s.frequencies.front() - 10 * s.resolution, s.frequencies[10]}), RangeError);
}

TEST(DutyCycle, NominalPulseTrain) {
  EXPECT_NEAR(duty_cycle(seqfwm::testing::train(777.0, 100.0)), 9.6e-4, 1e-12);
  const PulseTrainSpec zero{0.0, 80e6, 0.0, nm(777.0)};
  EXPECT_EQ(duty_cycle(zero), 0.0);
  const PulseTrainSpec ns{1e-9, 1e6, 1e-3, nm(777.0)};
  EXPECT_NEAR(duty_cycle(ns), 1e-3, 1e-15);
}

TEST(DutyCycle, EquivalentRectangleUsesShapeFactor) {
  const auto t = seqfwm::testing::train(777.0, 100.0);
  EXPECT_NEAR(duty_cycle(t, DutyConvention::EquivalentRectangle), 9.6e-4 / shape_factor(t.shape), 1e-12);
}

TEST(Estimator, NoConvertedLightGivesZero) {
  const double ws = nm(1531.6).angular(), wc = nm(1091.0).angular();
  EXPECT_EQ(eta_up(band(3e-9, 3e-9), band(1e-3, 0.0), 9.6e-4, ws, wc).eta, 0.0);
  EXPECT_EQ(eta_down(band(3e-9, 3e-9), band(1e-3, 0.0), 9.6e-4, wc, ws).eta, 0.0);
}

TEST(Estimator, LinearInNumeratorAndInverseDuty) {
  for_all(200, 53, [](Gen& g) {
    const double ws = nm(1531.6).angular(), wc = nm(1091.0).angular();
    const double net = g.log_uniform(1e-12, 1e-6), bg = g.log_uniform(1e-12, 1e-6), pt = g.log_uniform(1e-4, 1e-2);
    const double d = g.log_uniform(1e-4, 1e-1);
    const double e = eta_up(band(net + bg, bg), band(pt, 0.0), d, ws, wc).eta;
    EXPECT_NEAR(eta_up(band(net + bg, bg), band(pt, 0.0), 0.5 * d, ws, wc).eta, 2.0 * e, 1e-12 * e);
    EXPECT_NEAR(eta_up(band(3.0 * net + bg, bg), band(pt, 0.0), d, ws, wc).eta, 3.0 * e, 1e-9 * e);
    // exchanging every Sr/T argument maps one estimator onto the other
    EXPECT_EQ(eta_down(band(net + bg, bg), band(pt, 0.0), d, wc, ws).eta,
              eta_up(band(net + bg, bg), band(pt, 0.0), d, wc, ws).eta);
  });
}

TEST(Estimator, FlagsUnphysicalResult) {
  const double ws = nm(1531.6).angular(), wc = nm(1091.0).angular();
  EXPECT_TRUE(eta_up(band(1e-3, 0.0), band(1e-3, 0.0), 1e-3, ws, wc).above_unity);
}

namespace {

ConversionSpectra synth(double eta, ConversionDirection dir, double background = 0.0) {
  const auto window = seqfwm::testing::train(777.0, 72.0);
  const bool up = dir == ConversionDirection::Up;
  SynthesisSpec s{up ? nm(1531.6) : nm(1091.0), up ? nm(1091.0) : nm(1531.6), 1e-3, eta, window};
  s.background = background;
  return synthesize_conversion(s);
}

double recover(const ConversionSpectra& c, ConversionDirection dir) {
  const auto conv = measure_band(c.with_input, c.blocked, c.converted_band);
  const auto src = measure_band(c.with_input, c.blocked, c.source_band);
  const double ws = c.source_band.center(), wc = c.converted_band.center();
  return dir == ConversionDirection::Up ? eta_up(conv, src, c.duty, ws, wc).eta : eta_down(conv, src, c.duty, ws, wc).eta;
}

}  // namespace

TEST(Estimator, ClosedLoopUpConversion) {
  const auto c = synth(0.37, ConversionDirection::Up, 1e-12);
  EXPECT_NEAR(c.duty, 9.6e-4, 1e-12);
  EXPECT_NEAR(recover(c, ConversionDirection::Up), 0.37, 0.02);
}

TEST(Estimator, ClosedLoopDownConversion) {
  EXPECT_NEAR(recover(synth(0.042, ConversionDirection::Down, 1e-12), ConversionDirection::Down), 0.042, 0.003);
}

TEST(Estimator, ClosedLoopRecoversAnyEfficiency) {
  for_all(30, 54, [](Gen& g) {
    const double eta = g.uniform(0.001, 0.9);
    const auto dir = g.coin() ? ConversionDirection::Up : ConversionDirection::Down;
    const double got = recover(synth(eta, dir, g.coin() ? g.log_uniform(1e-14, 1e-10) : 0.0), dir);
    EXPECT_LT(rel_err(got, eta), 0.05) << eta;
  });
}

TEST(Estimator, SynthesisRejectsPeakAboveUnity) {
  // Under the FWHM convention the Gaussian peak is eta / shape_factor, above 1 here.
  EXPECT_NO_THROW(synth(1.0, ConversionDirection::Up));
  EXPECT_THROW(synth(1.07, ConversionDirection::Up), DomainError);
}

TEST(Fwhm, GaussianWidth) {
  const double sigma = 2.0 * kPi * 20e9, df = 2.0 * kPi * 1e9;
  const auto s = gaussian(sigma, df);
  EXPECT_NEAR(fwhm(s, 1.2e15), 2.35482 * sigma, df);
}

TEST(Fwhm, GridRefinementIsStable) {
  const double sigma = 2.0 * kPi * 20e9;
  for_all(20, 55, [&](Gen& g) {
    const double df = 2.0 * kPi * g.uniform(2e9, 8e9);
    const double a = fwhm(gaussian(sigma, df, 1.2e15, 2001), 1.2e15);
    const double b = fwhm(gaussian(sigma, 0.5 * df, 1.2e15, 4001), 1.2e15);
    EXPECT_LT(rel_err(b, a), 0.02);
  });
}

TEST(Fwhm, FlatSpectrumHasNoPeak) { EXPECT_THROW(fwhm(flat(1.0), flat(1.0).frequencies[500]), NotFoundError); }

TEST(Contrast, Decibels) {
  auto s = flat(1.0, 2000);
  for (std::size_t i = 1000; i < 2000; ++i) s.psd[i] = 1e-3;
  const FrequencyBand a{s.frequencies[100], s.frequencies[900]}, b{s.frequencies[1100], s.frequencies[1900]};
  EXPECT_NEAR(db_contrast(s, a, a), 0.0, 1e-12);
  EXPECT_NEAR(db_contrast(s, b, a), -30.0, 1e-9);
  for (std::size_t i = 1000; i < 2000; ++i) s.psd[i] = 2.0;
  EXPECT_NEAR(db_contrast(s, b, a), 3.0103, 1e-4);
}

TEST(Osa, BoxResponseWidthAndEnergy) {
  // narrow line near 1091 nm on a 0.05 nm grid
  const double w0 = nm(1091.0).angular(), df = 2.0 * kPi * 12.6e9;
  auto s = flat(0.0, 4001, w0 - 2000 * df, df);
  s.psd[2000] = 1.0;
  const auto sm = osa_smooth(s, 2e-9);
  EXPECT_NEAR(sm.total(), 1.0, 1e-3);
  std::size_t lit = 0;
  for (double v : sm.psd) lit += v > 0.0;
  // 2 nm at 1091 nm spans 2 pi c 2e-9 / lambda^2 = 2 pi * 504 GHz, i.e. 40 bins
  EXPECT_NEAR(static_cast<double>(lit), 40.0, 2.0);
}

TEST(Dbm, KnownValuesAndRoundTrip) {
  EXPECT_NEAR(to_dbm(1e-3), 0.0, 1e-12);
  EXPECT_NEAR(to_dbm(1.0), 30.0, 1e-12);
  EXPECT_EQ(to_dbm(0.0), -400.0);
  for_all(100, 56, [](Gen& g) {
    const double w = g.log_uniform(1e-30, 10);
    EXPECT_LT(rel_err(from_dbm(to_dbm(w)), w), 1e-12);
  });
}

TEST(SpectrumCsv, RoundTrip) {
  const auto c = synth(0.37, ConversionDirection::Up, 1e-12);
  std::stringstream ss;
  write_spectrum_csv(ss, c.with_input);
  const auto text = ss.str();
  EXPECT_EQ(text.rfind("# resolution_nm: ", 0), 0u);
  EXPECT_NE(text.find("wavelength_nm,psd_dBm_per_bin\n"), std::string::npos);
  const auto back = read_spectrum_csv(ss);
  ASSERT_EQ(back.size(), c.with_input.size());
  EXPECT_LT(rel_err(back.total(), c.with_input.total()), 1e-5);
  EXPECT_LT(rel_err(integrate_band_power(back, c.converted_band), integrate_band_power(c.with_input, c.converted_band)),
            1e-4);
}

TEST(SpectrumCsv, MalformedLineIsReported) {
  std::stringstream ss("# resolution_nm: 0.01\nwavelength_nm,psd_dBm_per_bin\n1000.0,-10\n1000.1,abc\n");
  try {
    read_spectrum_csv(ss);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(LinearFit, ExactLineHasNoResidual) {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto f = linear_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_LT(f.max_abs_residual, 1e-12);
}
