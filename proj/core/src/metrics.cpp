#include "seqfwm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "seqfwm/errors.hpp"

namespace seqfwm {

FrequencyBand FrequencyBand::from_wavelengths(double lambda_a, double lambda_b) {
  const double a = wavelength_to_omega(lambda_a).angular();
  const double b = wavelength_to_omega(lambda_b).angular();
  return {std::min(a, b), std::max(a, b)};
}

namespace {

// psd as a function of frequency: linear between samples, constant over the
// half bin beyond each end.
double psd_at(const SpectrumRecord& s, double w) {
  const auto& f = s.frequencies;
  if (w <= f.front()) return s.psd.front();
  if (w >= f.back()) return s.psd.back();
  const auto it = std::upper_bound(f.begin(), f.end(), w);
  const std::size_t j = static_cast<std::size_t>(it - f.begin());
  const double u = (w - f[j - 1]) / (f[j] - f[j - 1]);
  return s.psd[j - 1] + u * (s.psd[j] - s.psd[j - 1]);
}

}  // namespace

double integrate_band_power(const SpectrumRecord& s, const FrequencyBand& band) {
  if (s.frequencies.empty() || s.frequencies.size() != s.psd.size()) throw DomainError("malformed spectrum record");
  if (!(s.resolution > 0.0)) throw DomainError("spectrum resolution must be positive");
  if (!(band.hi > band.lo)) throw DomainError("band must have hi > lo");
  const auto& f = s.frequencies;
  const double lo_support = f.front() - 0.5 * s.resolution;
  const double hi_support = f.back() + 0.5 * s.resolution;
  const double slack = 1e-9 * s.resolution;
  if (band.lo < lo_support - slack || band.hi > hi_support + slack) {
    std::ostringstream msg;
    msg << "band [" << band.lo << ", " << band.hi << "] rad/s outside spectrum support [" << lo_support << ", "
        << hi_support << "]";
    throw RangeError(msg.str(), band.lo < lo_support ? lo_support : hi_support);
  }
  const double lo = std::max(band.lo, lo_support);
  const double hi = std::min(band.hi, hi_support);

  // Breakpoints: band edges plus every sample strictly inside.
  double area = 0.0;
  double x0 = lo;
  double y0 = psd_at(s, lo);
  auto it = std::upper_bound(f.begin(), f.end(), lo);
  for (; it != f.end() && *it < hi; ++it) {
    const double y1 = s.psd[static_cast<std::size_t>(it - f.begin())];
    area += 0.5 * (y0 + y1) * (*it - x0);
    x0 = *it;
    y0 = y1;
  }
  area += 0.5 * (y0 + psd_at(s, hi)) * (hi - x0);
  return area / s.resolution;
}

BandPower measure_band(const SpectrumRecord& with_input, const SpectrumRecord& blocked, const FrequencyBand& band) {
  return {band, integrate_band_power(with_input, band), integrate_band_power(blocked, band)};
}

double duty_cycle(const PulseTrainSpec& train, DutyConvention convention) {
  if (train.tau_p < 0.0 || train.rep_rate <= 0.0) throw DomainError("duty cycle needs tau_p >= 0 and R_P > 0");
  const double tau = convention == DutyConvention::Fwhm ? train.tau_p : train.tau_p / shape_factor(train.shape);
  return tau * train.rep_rate;
}

namespace {

EfficiencyEstimate estimate(const BandPower& converted, const BandPower& source, double duty, double omega_source,
                            double omega_converted) {
  if (!(source.with_input > 0.0)) throw DomainError("source band power must be positive");
  if (!(duty > 0.0)) throw DomainError("duty cycle must be positive");
  if (!(omega_source > 0.0) || !(omega_converted > 0.0)) throw DomainError("frequencies must be positive");
  const double eta = converted.net() * omega_source / (source.with_input * duty * omega_converted);
  return {eta, eta > 1.0};
}

}  // namespace

EfficiencyEstimate eta_up(const BandPower& p_sr, const BandPower& p_t, double duty, double omega_t, double omega_sr) {
  return estimate(p_sr, p_t, duty, omega_t, omega_sr);
}

EfficiencyEstimate eta_down(const BandPower& p_t, const BandPower& p_sr, double duty, double omega_sr,
                            double omega_t) {
  return estimate(p_t, p_sr, duty, omega_sr, omega_t);
}

double fwhm(const SpectrumRecord& s, double around, double window) {
  const auto& f = s.frequencies;
  const auto& p = s.psd;
  const auto first = std::lower_bound(f.begin(), f.end(), around - window);
  const auto last = std::upper_bound(f.begin(), f.end(), around + window);
  if (last - first < 3) throw NotFoundError("fwhm window holds fewer than three samples");
  const std::size_t i0 = static_cast<std::size_t>(first - f.begin());
  const std::size_t i1 = static_cast<std::size_t>(last - f.begin());

  std::size_t peak = i0;
  for (std::size_t i = i0; i < i1; ++i)
    if (p[i] > p[peak]) peak = i;
  const bool interior = peak > 0 && peak + 1 < p.size() && p[peak] > p[peak - 1] && p[peak] > p[peak + 1] &&
                        peak > i0 && peak + 1 < i1;
  if (!interior || !(p[peak] > 0.0)) throw NotFoundError("no local maximum inside the fwhm window");
  const double half = 0.5 * p[peak];

  std::size_t l = peak;
  while (l > 0 && p[l] > half) --l;
  std::size_t r = peak;
  while (r + 1 < p.size() && p[r] > half) ++r;
  if (p[l] > half || p[r] > half) throw NotFoundError("spectrum never falls to half maximum around the peak");
  const double wl = f[l] + (half - p[l]) / (p[l + 1] - p[l]) * (f[l + 1] - f[l]);
  const double wr = f[r - 1] + (p[r - 1] - half) / (p[r - 1] - p[r]) * (f[r] - f[r - 1]);
  return wr - wl;
}

double db_contrast(const SpectrumRecord& s, const FrequencyBand& band_a, const FrequencyBand& band_b) {
  const double a = integrate_band_power(s, band_a);
  const double b = integrate_band_power(s, band_b);
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("dB contrast needs positive power in both bands");
  return 10.0 * std::log10(a / b);
}

SpectrumRecord osa_smooth(const SpectrumRecord& s, double resolution_wavelength) {
  s.validate();
  if (!(resolution_wavelength > 0.0)) throw DomainError("OSA resolution must be positive");
  // Each bin is a cell of width `resolution`; the output is the box average of
  // that piecewise-constant density, so partially covered cells count fractionally.
  const std::size_t n = s.size();
  const double cell = s.resolution;
  SpectrumRecord out = s;
  std::size_t first = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = s.frequencies[i];
    // d omega = 2 pi c d lambda / lambda^2
    const double lambda = 2.0 * kPi * kSpeedOfLight / w;
    const double half = kPi * kSpeedOfLight * resolution_wavelength / (lambda * lambda);
    const double a = w - half, b = w + half;
    while (first < n && s.frequencies[first] + 0.5 * cell <= a) ++first;
    double acc = 0.0;
    for (std::size_t j = first; j < n && s.frequencies[j] - 0.5 * cell < b; ++j) {
      const double overlap = std::min(b, s.frequencies[j] + 0.5 * cell) - std::max(a, s.frequencies[j] - 0.5 * cell);
      if (overlap > 0.0) acc += s.psd[j] * overlap;
    }
    out.psd[i] = acc / (b - a);
  }
  return out;
}

double to_dbm(double watts) { return watts > 1e-43 ? 10.0 * std::log10(watts / 1e-3) : -400.0; }
double from_dbm(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

void write_spectrum_csv(std::ostream& os, const SpectrumRecord& s) {
  s.validate();
  const double mid = s.frequencies[s.size() / 2];
  const double lambda = 2.0 * kPi * kSpeedOfLight / mid;
  char buf[128];
  std::snprintf(buf, sizeof buf, "# resolution_nm: %.9g\n", lambda * lambda * s.resolution / (2.0 * kPi * kSpeedOfLight) * 1e9);
  os << buf << "wavelength_nm,psd_dBm_per_bin\n";
  for (std::size_t j = s.size(); j-- > 0;) {
    std::snprintf(buf, sizeof buf, "%.9f,%.6f\n", 2.0 * kPi * kSpeedOfLight / s.frequencies[j] * 1e9, to_dbm(s.psd[j]));
    os << buf;
  }
}

SpectrumRecord read_spectrum_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  double resolution_nm = 0.0;
  bool header = false;
  std::vector<std::pair<double, double>> rows;
  auto fail = [&](const std::string& what) {
    throw DomainError("spectrum CSV line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("resolution_nm:");
      if (pos != std::string::npos) {
        try {
          resolution_nm = std::stod(line.substr(pos + 14));
        } catch (const std::exception&) {
          fail("unreadable resolution");
        }
      }
      continue;
    }
    if (!header) {
      if (line.rfind("wavelength_nm", 0) != 0) fail("expected header wavelength_nm,psd_dBm_per_bin");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail("expected two columns");
    try {
      std::size_t used = 0;
      const double wl = std::stod(line.substr(0, comma), &used);
      const double dbm = std::stod(line.substr(comma + 1));
      if (!(wl > 0.0)) fail("wavelength must be positive");
      rows.emplace_back(wl, dbm);
    } catch (const DomainError&) {
      throw;
    } catch (const std::exception&) {
      fail("unparseable number");
    }
  }
  if (!header || rows.empty()) throw DomainError("spectrum CSV holds no data rows");
  if (!(resolution_nm > 0.0)) throw DomainError("spectrum CSV lacks a positive '# resolution_nm:' line");

  SpectrumRecord s;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    s.frequencies.push_back(2.0 * kPi * kSpeedOfLight / (it->first * 1e-9));
    s.psd.push_back(from_dbm(it->second));
  }
  if (s.frequencies.size() > 1 && s.frequencies.front() > s.frequencies.back()) {
    std::reverse(s.frequencies.begin(), s.frequencies.end());
    std::reverse(s.psd.begin(), s.psd.end());
  }
  const double mid = s.frequencies[s.size() / 2];
  const double lambda = 2.0 * kPi * kSpeedOfLight / mid;
  s.resolution = 2.0 * kPi * kSpeedOfLight * resolution_nm * 1e-9 / (lambda * lambda);
  s.validate();
  return s;
}

ConversionSpectra synthesize_conversion(const SynthesisSpec& spec) {
  spec.window.validate();
  if (!(spec.input_power > 0.0)) throw DomainError("synthesis needs a positive input power");
  if (!(spec.eta_internal >= 0.0) || spec.eta_internal > 1.0) throw DomainError("eta_internal must lie in [0, 1]");
  if (!(spec.background >= 0.0)) throw DomainError("background must be non-negative");
  const auto& w = spec.window;
  const double duty = duty_cycle(w, spec.convention);
  const double tau_ref = duty / w.rep_rate;
  // integral of the intensity profile is tau_p / shape_factor
  const double peak_eta = spec.eta_internal * tau_ref * shape_factor(w.shape) / w.tau_p;
  if (peak_eta > 1.0) throw DomainError("synthesised conversion would exceed unity at the pulse peak");

  const double period = 1.0 / w.rep_rate;
  const TemporalGrid gs(spec.points, period, spec.source);
  const TemporalGrid gc(spec.points, period, spec.converted);
  if (spec.band_half_width > 0.95 * gs.nyquist()) throw DomainError("band half-width exceeds the synthesis bandwidth");
  const double photon_ratio = spec.converted.angular() / spec.source.angular();
  std::vector<Complex> a_s(spec.points), a_c(spec.points), zero(spec.points);
  for (std::size_t i = 0; i < spec.points; ++i) {
    const double eta = peak_eta * intensity_profile(w.shape, w.tau_p, gs.time(i));
    a_s[i] = std::sqrt(spec.input_power * (1.0 - eta));
    a_c[i] = std::sqrt(spec.input_power * eta * photon_ratio);
  }
  auto record = [&](const TemporalGrid& g, std::vector<Complex> a) {
    auto r = to_spectrum(FieldEnvelope(g, std::move(a))).scaled(w.rep_rate);
    for (auto& p : r.psd) p += spec.background;
    return r;
  };
  const SpectrumRecord on[] = {record(gs, a_s), record(gc, a_c)};
  const SpectrumRecord off[] = {record(gs, zero), record(gc, zero)};
  return {concatenate(on), concatenate(off), FrequencyBand::around(spec.source.angular(), spec.band_half_width),
          FrequencyBand::around(spec.converted.angular(), spec.band_half_width), duty};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("linear fit needs two or more paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear fit needs distinct abscissae");
  LinearFit fit{sxy / sxx, 0.0, 0.0};
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(y[i] - fit.slope * x[i] - fit.intercept));
  return fit;
}

}  // namespace seqfwm
