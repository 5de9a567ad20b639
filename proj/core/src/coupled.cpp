#include "seqfwm/coupled.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

#include "seqfwm/errors.hpp"
#include "seqfwm/fiber.hpp"
#include "seqfwm/phasematch.hpp"

namespace seqfwm {

double eta_two_mode(double delta_beta, double gamma, double p1, double p2, double length) {
  if (!(p1 >= 0.0) || !(p2 >= 0.0) || !(length >= 0.0)) throw DomainError("eta_two_mode needs P1, P2, L >= 0");
  const double kappa = 2.0 * gamma * std::sqrt(p1 * p2);
  if (kappa == 0.0 || length == 0.0) return 0.0;
  const double g = std::hypot(kappa, 0.5 * delta_beta);
  const double s = std::sin(g * length);
  return std::clamp((kappa * kappa) / (g * g) * s * s, 0.0, 1.0);
}

namespace {

using State = std::array<std::complex<double>, 4>;
constexpr std::size_t kShort = 0, kLong = 1, kIn = 2, kOut = 3;
constexpr std::complex<double> kI{0.0, 1.0};

State to_state(const ModeAmplitudes& a) { return {a.pump_short, a.pump_long, a.input, a.output}; }
ModeAmplitudes to_modes(const State& s, double z) { return {s[0], s[1], s[2], s[3], z}; }

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [c, k] : terms)
    for (std::size_t j = 0; j < 4; ++j) out[j] += h * c * (*k)[j];
  return out;
}

struct FourModeRhs {
  std::array<double, 4> gamma;
  std::size_t from, to;
  double delta_beta;
  double alpha_half;

  State operator()(double z, const State& a) const {
    std::array<double, 4> p{};
    double total = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      p[j] = std::norm(a[j]);
      total += p[j];
    }
    const auto phase = std::polar(1.0, -delta_beta * z);
    State d{};
    for (std::size_t j = 0; j < 4; ++j)
      d[j] = kI * gamma[j] * (2.0 * total - p[j]) * a[j] - alpha_half * a[j];
    d[kIn] += 2.0 * kI * gamma[kIn] * a[kOut] * a[to] * std::conj(a[from]) * phase;
    d[kOut] += 2.0 * kI * gamma[kOut] * a[kIn] * a[from] * std::conj(a[to]) * std::conj(phase);
    d[from] += 2.0 * kI * gamma[from] * a[kOut] * a[to] * std::conj(a[kIn]) * phase;
    d[to] += 2.0 * kI * gamma[to] * a[kIn] * a[from] * std::conj(a[kOut]) * std::conj(phase);
    return d;
  }
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct StepResult {
  State y1;
  State k7;
  State err;
  std::array<State, 5> dense;
};

StepResult dp_step(const FourModeRhs& f, double z, const State& y, const State& k1, double h) {
  const State k2 = f(z + c2 * h, axpy(y, h, {{a21, &k1}}));
  const State k3 = f(z + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
  const State k4 = f(z + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  const State k5 = f(z + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  const State k6 = f(z + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  const State y1 = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
  const State k7 = f(z + h, y1);
  StepResult r{y1, k7, {}, {}};
  State zero{};
  r.err = axpy(zero, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});
  auto& rc = r.dense;
  rc[0] = y;
  for (std::size_t j = 0; j < 4; ++j) {
    rc[1][j] = y1[j] - y[j];
    rc[2][j] = h * k1[j] - rc[1][j];
    rc[3][j] = rc[1][j] - h * k7[j] - rc[2][j];
    rc[4][j] = h * (d1 * k1[j] + d3 * k3[j] + d4 * k4[j] + d5 * k5[j] + d6 * k6[j] + d7 * k7[j]);
  }
  return r;
}

}  // namespace

double photon_flux(const ConversionSetup& s, const ModeAmplitudes& a) {
  const double ref = s.input().angular();
  return ref * (std::norm(a.pump_short) / s.pump_short().angular() + std::norm(a.pump_long) / s.pump_long().angular() +
                std::norm(a.input) / s.input().angular() + std::norm(a.output) / s.output().angular());
}

double signal_photon_flux(const ConversionSetup& s, const ModeAmplitudes& a) {
  const double ref = s.input().angular();
  return ref * (std::norm(a.input) / s.input().angular() + std::norm(a.output) / s.output().angular());
}

ModeGammas mode_gammas(const ConversionSetup& s, bool frequency_scaled) {
  const double g = s.fiber().gamma;
  if (!frequency_scaled) return {g, g, g, g};
  const double ref = std::sqrt(s.input().angular() * s.output().angular());
  return {g * s.pump_short().angular() / ref, g * s.pump_long().angular() / ref, g * s.input().angular() / ref,
          g * s.output().angular() / ref};
}

ModeAmplitudes FourModeTrajectory::at(double z) const {
  if (segments_.empty()) return points_.front();
  auto it = std::upper_bound(segments_.begin(), segments_.end(), z,
                             [](double v, const Segment& s) { return v < s.z0; });
  const Segment& seg = it == segments_.begin() ? segments_.front() : *std::prev(it);
  const double theta = std::clamp((z - seg.z0) / seg.h, 0.0, 1.0);
  const double t1 = 1.0 - theta;
  State y{};
  const auto& rc = seg.coeff;
  for (std::size_t j = 0; j < 4; ++j)
    y[j] = rc[0][j] + theta * (rc[1][j] + t1 * (rc[2][j] + theta * (rc[3][j] + t1 * rc[4][j])));
  return to_modes(y, z);
}

FourModeTrajectory integrate_four_mode(const ConversionSetup& setup, const ModeAmplitudes& initial,
                                       const FourModeOptions& options) {
  const auto& fiber = setup.fiber();
  const double length = fiber.length;
  if (!(options.tolerance > 0.0)) throw DomainError("four-mode tolerance must be positive");
  if (initial.z < 0.0 || initial.z > length) throw DomainError("initial position outside the fibre");

  const auto g = mode_gammas(setup, options.frequency_scaled_gamma);
  const bool up = setup.direction() == ConversionDirection::Up;
  const FourModeRhs rhs{{g.pump_short, g.pump_long, g.input, g.output},
                        up ? kShort : kLong,
                        up ? kLong : kShort,
                        mismatch_bs(setup, NonlinearTerms::Excluded).delta_beta_linear,
                        0.5 * fiber.loss};

  FourModeTrajectory traj;
  State y = to_state(initial);
  double z = initial.z;
  traj.points_.push_back(to_modes(y, z));
  State k1 = rhs(z, y);

  // Local tolerance tighter than the global budget so accumulated error stays inside it.
  const double rtol = options.tolerance * 1e-2;
  double ymax = 0.0;
  for (auto v : y) ymax = std::max(ymax, std::abs(v));
  const double atol = rtol * 1e-9 * std::max(ymax, 1e-30);

  double h = options.fixed_step ? options.fixed_dz : std::min(options.initial_step, length - z);
  const double z_start = z;
  std::size_t fixed_count = 0;
  while (z < length) {
    h = std::min(h, length - z);
    // Fixed steps sit on z_start + i dz; a remainder below 1e-9 dz is folded into the last step.
    if (options.fixed_step && length - z - h < 1e-9 * options.fixed_dz) h = length - z;
    const auto step = dp_step(rhs, z, y, k1, h);
    if (!options.fixed_step) {
      double err = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        const double sc = atol + rtol * std::max(std::abs(y[j]), std::abs(step.y1[j]));
        err = std::max(err, std::abs(step.err[j]) / sc);
      }
      if (!std::isfinite(err)) err = 1e10;
      if (err > 1.0) {
        ++traj.rejected_;
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        if (h < options.min_step) {
          std::ostringstream msg;
          msg << "four-mode step underflow at z = " << z << " m (h = " << h << " m, error ratio " << err << ")";
          throw StiffnessError(msg.str(), z, h);
        }
        continue;
      }
      traj.segments_.push_back({z, h, step.dense});
      z += h;
      y = step.y1;
      k1 = step.k7;
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      traj.segments_.push_back({z, h, step.dense});
      ++fixed_count;
      z = h == length - z ? length : z_start + static_cast<double>(fixed_count) * options.fixed_dz;
      h = options.fixed_dz;
      y = step.y1;
      k1 = step.k7;
    }
    if (length - z < 1e-15 * length) z = length;
    traj.points_.push_back(to_modes(y, z));
  }
  return traj;
}

namespace {

struct PulseSampling {
  std::vector<double> times;
  double dt;
};

PulseSampling sample_times(const PulsedPumps& p) {
  const double tau = std::max(p.pump_short.tau_p, p.pump_long.tau_p);
  const double half = 4.0 * tau + std::abs(p.delay);
  constexpr std::size_t n = 8001;
  PulseSampling s{std::vector<double>(n), 2.0 * half / static_cast<double>(n - 1)};
  for (std::size_t i = 0; i < n; ++i) s.times[i] = -half + static_cast<double>(i) * s.dt + 0.5 * p.delay;
  return s;
}

double eta_at(const ConversionSetup& setup, double linear, double p_short, double p_long) {
  const bool up = setup.direction() == ConversionDirection::Up;
  const double p_from = up ? p_short : p_long;
  const double p_to = up ? p_long : p_short;
  const auto& f = setup.fiber();
  return eta_two_mode(linear + f.gamma * (p_to - p_from), f.gamma, p_short, p_long, f.length);
}

void check_trains(const PulsedPumps& p) {
  p.pump_short.validate();
  p.pump_long.validate();
  if (std::abs(p.pump_short.rep_rate - p.pump_long.rep_rate) > 1e-9 * p.pump_short.rep_rate)
    throw DomainError("pump trains must share a repetition rate");
}

}  // namespace

std::vector<double> conversion_profile(const ConversionSetup& setup, const PulsedPumps& pumps,
                                       std::span<const double> times) {
  check_trains(pumps);
  const double linear = mismatch_bs(setup, NonlinearTerms::Excluded).delta_beta_linear;
  const double ps = pumps.pump_short.peak_power();
  const double pl = pumps.pump_long.peak_power();
  std::vector<double> eta(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    eta[i] = eta_at(setup, linear, ps * intensity_profile(pumps.pump_short.shape, pumps.pump_short.tau_p, t),
                    pl * intensity_profile(pumps.pump_long.shape, pumps.pump_long.tau_p, t - pumps.delay));
  }
  return eta;
}

PulsedEfficiency pulsed_efficiency(const ConversionSetup& setup, const PulsedPumps& pumps, double cw_input_power) {
  check_trains(pumps);
  if (!(cw_input_power >= 0.0)) throw DomainError("CW input power must be non-negative");
  const auto& ps = pumps.pump_short;
  const double tau_ref =
      pumps.convention == TauConvention::Fwhm ? ps.tau_p : ps.tau_p / shape_factor(ps.shape);
  const auto wo = walk_off_length(setup.fiber(), setup.pump_short().wavelength(), setup.pump_long().wavelength(), ps.tau_p);
  PulsedEfficiency out{0.0, tau_ref, !wo.no_walk_off && setup.fiber().length > wo.value, wo.value};
  if (ps.avg_power == 0.0 || pumps.pump_long.avg_power == 0.0) return out;

  double integral = 0.0;
  if (ps.shape == PulseShape::Rectangular && pumps.pump_long.shape == PulseShape::Rectangular) {
    const double lo = std::max(-0.5 * ps.tau_p, pumps.delay - 0.5 * pumps.pump_long.tau_p);
    const double hi = std::min(0.5 * ps.tau_p, pumps.delay + 0.5 * pumps.pump_long.tau_p);
    if (hi > lo) {
      const double linear = mismatch_bs(setup, NonlinearTerms::Excluded).delta_beta_linear;
      integral = (hi - lo) * eta_at(setup, linear, ps.peak_power(), pumps.pump_long.peak_power());
    }
  } else {
    const auto s = sample_times(pumps);
    const auto eta = conversion_profile(setup, pumps, s.times);
    for (std::size_t i = 0; i + 1 < eta.size(); ++i) integral += 0.5 * (eta[i] + eta[i + 1]) * s.dt;
  }
  out.eta = std::clamp(integral / tau_ref, 0.0, 1.0);
  return out;
}

EfficiencySweep sweep_efficiency(const ConversionSetup& setup, const PulsedPumps& pumps, double cw_input_power,
                                 const SweepSpec& spec) {
  if (spec.values.size() < 2) throw DomainError("an efficiency sweep needs at least two axis points");
  EfficiencySweep out{spec.values, std::vector<double>(spec.values.size()), setup.direction(), spec.axis};

  auto evaluate = [&](std::size_t i) {
    const double v = spec.values[i];
    switch (spec.axis) {
      case SweepAxis::ShortPumpPower: {
        auto p = pumps;
        p.pump_short = p.pump_short.with_avg_power(v);
        return pulsed_efficiency(setup, p, cw_input_power).eta;
      }
      case SweepAxis::LongPumpPower: {
        auto p = pumps;
        p.pump_long = p.pump_long.with_avg_power(v);
        return pulsed_efficiency(setup, p, cw_input_power).eta;
      }
      case SweepAxis::InputWavelength:
        return pulsed_efficiency(setup.with_input(wavelength_to_omega(v)), pumps, cw_input_power).eta;
    }
    return 0.0;
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(spec.values.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < spec.values.size(); ++i) out.eta[i] = evaluate(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < spec.values.size();) out.eta[i] = evaluate(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_csv(std::ostream& os, const EfficiencySweep& sweep) {
  const bool wavelength = sweep.axis == SweepAxis::InputWavelength;
  os << (wavelength ? "wavelength_nm,eta\n" : "avg_power_mW,eta\n");
  char buf[96];
  for (std::size_t i = 0; i < sweep.abscissa.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.10e\n", sweep.abscissa[i] * (wavelength ? 1e9 : 1e3), sweep.eta[i]);
    os << buf;
  }
}

}  // namespace seqfwm
