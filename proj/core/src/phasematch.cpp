#include "seqfwm/phasematch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "seqfwm/errors.hpp"

namespace seqfwm {

namespace {

double sinc_squared(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 3.0;
  const double s = std::sin(x) / x;
  return s * s;
}

double bs_nonlinear(const ConversionSetup& s, NonlinearTerms terms) {
  if (terms == NonlinearTerms::Excluded) return 0.0;
  return s.fiber().gamma * (s.pump_to_power() - s.pump_from_power());
}

double total_at(const ConversionSetup& setup, double lambda, NonlinearTerms terms) {
  return mismatch_bs(setup.with_input(wavelength_to_omega(lambda)), terms).delta_beta_total;
}

}  // namespace

PhaseMatchResult PhaseMatchResult::make(double linear, double nonlinear, double length) {
  const double total = linear + nonlinear;
  const double lc = total == 0.0 ? std::numeric_limits<double>::infinity() : kPi / std::abs(total);
  return {linear, nonlinear, total, lc, std::abs(total * length) < kPi};
}

PhaseMatchResult mismatch_degenerate(const FiberSpec& fiber, OpticalFrequency pump, OpticalFrequency signal,
                                     double pump_peak_power, NonlinearTerms terms) {
  double linear = 0.0;
  if (!(signal == pump)) {
    const auto idler = degenerate_fwm_partner(pump, signal);
    linear = beta(fiber, signal) + beta(fiber, idler) - 2.0 * beta(fiber, pump);
  } else {
    (void)beta(fiber, pump);  // range check
  }
  const double nonlinear = terms == NonlinearTerms::Included ? 2.0 * fiber.gamma * pump_peak_power : 0.0;
  return PhaseMatchResult::make(linear, nonlinear, fiber.length);
}

PhaseMatchResult mismatch_bs(const ConversionSetup& setup, NonlinearTerms terms) {
  const auto& f = setup.fiber();
  const double linear =
      beta(f, setup.input()) + beta(f, setup.pump_from()) - beta(f, setup.output()) - beta(f, setup.pump_to());
  return PhaseMatchResult::make(linear, bs_nonlinear(setup, terms), f.length);
}

CalibrationTarget degenerate_target(OpticalFrequency pump, OpticalFrequency signal, double pump_peak_power,
                                    const FiberSpec& fiber, NonlinearTerms terms) {
  const auto idler = degenerate_fwm_partner(pump, signal);
  CalibrationTarget t{.label = "degenerate@" + std::to_string(signal.wavelength() * 1e9) + "nm",
                      .terms = {{1, signal}, {1, idler}, {-2, pump}},
                      .nonlinear_offset = terms == NonlinearTerms::Included ? 2.0 * fiber.gamma * pump_peak_power : 0.0,
                      .length = fiber.length,
                      .reference = pump};
  return t;
}

CalibrationTarget bs_target(const ConversionSetup& setup, NonlinearTerms terms) {
  const double mid = 0.5 * (setup.pump_short().angular() + setup.pump_long().angular());
  CalibrationTarget t{.label = "bragg@" + std::to_string(setup.input().wavelength() * 1e9) + "nm",
                      .terms = {{1, setup.input()}, {1, setup.pump_from()}, {-1, setup.output()}, {-1, setup.pump_to()}},
                      .nonlinear_offset = bs_nonlinear(setup, terms),
                      .length = setup.fiber().length,
                      .reference = OpticalFrequency::from_angular(mid)};
  return t;
}

double find_matched_input(const ConversionSetup& setup, double lambda_lo, double lambda_hi, NonlinearTerms terms) {
  if (!(lambda_lo < lambda_hi)) throw DomainError("search band must have lambda_lo < lambda_hi");
  double lo = lambda_lo, hi = lambda_hi;
  double f_lo = total_at(setup, lo, terms);
  const double f_hi = total_at(setup, hi, terms);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    std::ostringstream msg;
    msg << "no phase-matched input in [" << lambda_lo * 1e9 << ", " << lambda_hi * 1e9
        << "] nm: delta_beta = " << f_lo << " rad/m at the low edge and " << f_hi << " rad/m at the high edge";
    throw NotFoundError(msg.str());
  }
  double best = lo, f_best = f_lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = total_at(setup, mid, terms);
    if (std::abs(fm) < std::abs(f_best)) {
      best = mid;
      f_best = fm;
    }
    if (std::abs(fm) < kRootTolerance) return mid;
    if ((fm < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
    }
  }
  return best;
}

double sampled_fwhm(const std::vector<double>& x, const std::vector<double>& y, std::size_t peak) {
  const double half = 0.5 * y[peak];
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double t = (y[inside] - half) / (y[inside] - y[outside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };
  std::optional<double> left, right;
  for (std::size_t i = peak; i-- > 0;)
    if (y[i] < half) {
      left = crossing(i + 1, i);
      break;
    }
  for (std::size_t i = peak + 1; i < y.size(); ++i)
    if (y[i] < half) {
      right = crossing(i - 1, i);
      break;
    }
  if (!left || !right) throw NotFoundError("curve does not fall to half maximum on both sides of its peak");
  return std::abs(*right - *left);
}

BandwidthCurve bandwidth_curve(const ConversionSetup& setup, double lambda_lo, double lambda_hi, std::size_t n_points,
                               NonlinearTerms terms) {
  if (n_points < 16) throw DomainError("bandwidth curve needs at least 16 points");
  if (!(lambda_lo < lambda_hi)) throw DomainError("scan band must have lambda_lo < lambda_hi");
  BandwidthCurve curve;
  curve.input_wavelengths.resize(n_points);
  curve.efficiencies.resize(n_points);
  const double length = setup.fiber().length;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double l = lambda_lo + (lambda_hi - lambda_lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    curve.input_wavelengths[i] = l;
    curve.efficiencies[i] = sinc_squared(0.5 * total_at(setup, l, terms) * length);
  }
  const auto peak = static_cast<std::size_t>(
      std::distance(curve.efficiencies.begin(), std::max_element(curve.efficiencies.begin(), curve.efficiencies.end())));
  curve.center = curve.input_wavelengths[peak];
  curve.fwhm = sampled_fwhm(curve.input_wavelengths, curve.efficiencies, peak);
  return curve;
}

void write_csv(std::ostream& os, const BandwidthCurve& curve) {
  os << "wavelength_nm,efficiency\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.input_wavelengths.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.10e\n", curve.input_wavelengths[i] * 1e9, curve.efficiencies[i]);
    os << buf;
  }
}

}  // namespace seqfwm
