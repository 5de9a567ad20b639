#include "seqfwm/fiber.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "seqfwm/errors.hpp"

namespace seqfwm {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Saitoh & Koshiba, Opt. Express 13, 267 (2005), table 1.
constexpr std::array<std::array<double, 4>, 4> kA{{
    {0.54808, 0.71041, 0.16904, -1.52736},
    {5.00401, 9.73491, 1.85765, 1.06745},
    {-10.43248, 47.41496, 18.96849, 1.93229},
    {8.22992, -437.50962, -42.4318, 3.89},
}};
constexpr std::array<std::array<double, 4>, 3> kB{{
    {5, 1.8, 1.7, -0.84},
    {7, 7.32, 10, 1.02},
    {9, 22.8, 14, 13.4},
}};
constexpr std::array<std::array<double, 4>, 4> kC{{
    {-0.0973, 0.53193, 0.24876, 5.29801},
    {-16.70566, 6.70858, 2.72423, 0.05142},
    {67.13845, 52.04855, 13.28649, -5.18302},
    {-50.25518, -540.66947, -36.80372, 2.7641},
}};
constexpr std::array<std::array<double, 4>, 3> kD{{
    {7, 1.49, 3.85, -2},
    {9, 6.58, 10, 0.41},
    {10, 24.8, 15, 6},
}};

template <typename Coef, typename Expo>
double sigmoid_fit(const Coef& c, const Expo& e, double fill, double x) {
  std::array<double, 4> p{};
  for (std::size_t i = 0; i < 4; ++i)
    p[i] = c[0][i] + c[1][i] * std::pow(fill, e[0][i]) + c[2][i] * std::pow(fill, e[1][i]) +
           c[3][i] * std::pow(fill, e[2][i]);
  return p[0] + p[1] / (1.0 + p[2] * std::exp(p[3] * x));
}

void check_empirical_range(double lambda) {
  if (lambda < kEmpiricalMinWavelength)
    throw RangeError("wavelength " + std::to_string(lambda * 1e9) +
                         " nm is below the geometry model limit of 500 nm",
                     kEmpiricalMinWavelength);
  if (lambda > kEmpiricalMaxWavelength)
    throw RangeError("wavelength " + std::to_string(lambda * 1e9) +
                         " nm is above the geometry model limit of 1800 nm",
                     kEmpiricalMaxWavelength);
}

double taylor_eval(const TaylorExpansion& t, double omega) {
  const double d = omega - t.omega_ref.angular();
  double sum = 0.0;
  for (std::size_t k = t.beta.size(); k-- > 0;) sum = sum * d / static_cast<double>(k + 1) + t.beta[k];
  // Horner with 1/k! folded in: b0 + d(b1 + d/2 (b2 + d/3 (b3 + ...))).
  return sum;
}

double taylor_derivative(const TaylorExpansion& t, double omega) {
  const double d = omega - t.omega_ref.angular();
  double sum = 0.0;
  for (std::size_t k = t.beta.size(); k-- > 1;) sum = sum * d / static_cast<double>(k) + t.beta[k];
  return sum;
}

}  // namespace

void FiberSpec::validate() const {
  if (!(gamma > 0.0)) throw DomainError("fiber '" + name + "': gamma must be positive");
  if (!(length > 0.0)) throw DomainError("fiber '" + name + "': length must be positive");
  if (!(loss >= 0.0)) throw DomainError("fiber '" + name + "': loss must be non-negative");
  if (backend == DispersionBackend::GeometryEmpirical || pitch > 0.0 || hole_diameter > 0.0) {
    if (!(pitch > 0.0) || !(hole_diameter > 0.0))
      throw DomainError("fiber '" + name + "': pitch and hole diameter must be positive");
    if (!(hole_diameter < pitch)) throw DomainError("fiber '" + name + "': hole diameter must be less than pitch");
  }
  if (backend == DispersionBackend::TaylorCoefficients) {
    if (!taylor) throw DomainError("fiber '" + name + "': Taylor backend needs coefficients");
    if (taylor->beta.size() < 3)
      throw DomainError("fiber '" + name + "': Taylor backend needs coefficients through beta2");
  }
}

double silica_index(double lambda) {
  const double l2 = (lambda * 1e6) * (lambda * 1e6);
  const double n2 = 1.0 + 0.6961663 * l2 / (l2 - 0.0684043 * 0.0684043) +
                    0.4079426 * l2 / (l2 - 0.1162414 * 0.1162414) + 0.8974794 * l2 / (l2 - 9.896161 * 9.896161);
  return std::sqrt(n2);
}

double empirical_effective_index(double pitch, double hole_diameter, double lambda) {
  const double fill = hole_diameter / pitch;
  const double x = lambda / pitch;
  const double v = sigmoid_fit(kA, kB, fill, x);
  const double w = sigmoid_fit(kC, kD, fill, x);
  const double a_eff = pitch / std::sqrt(3.0);
  const double n_core = silica_index(lambda);
  const double u_term = lambda / (2.0 * kPi * a_eff);
  return std::sqrt(n_core * n_core - u_term * u_term * (v * v - w * w));
}

double beta(const FiberSpec& fiber, OpticalFrequency omega) {
  if (fiber.backend == DispersionBackend::TaylorCoefficients) {
    if (!fiber.taylor) throw DomainError("fiber '" + fiber.name + "' has no Taylor coefficients");
    return taylor_eval(*fiber.taylor, omega.angular());
  }
  const double lambda = omega.wavelength();
  check_empirical_range(lambda);
  return empirical_effective_index(fiber.pitch, fiber.hole_diameter, lambda) * omega.angular() / kSpeedOfLight;
}

double beta1_numeric(const FiberSpec& fiber, OpticalFrequency omega, double step) {
  const double w = omega.angular();
  return (beta(fiber, OpticalFrequency::from_angular(w + step)) - beta(fiber, OpticalFrequency::from_angular(w - step))) /
         (2.0 * step);
}

double beta1(const FiberSpec& fiber, OpticalFrequency omega) {
  if (fiber.backend == DispersionBackend::TaylorCoefficients) {
    if (!fiber.taylor) throw DomainError("fiber '" + fiber.name + "' has no Taylor coefficients");
    return taylor_derivative(*fiber.taylor, omega.angular());
  }
  return beta1_numeric(fiber, omega);
}

double beta2(const FiberSpec& fiber, OpticalFrequency omega) {
  if (fiber.backend == DispersionBackend::TaylorCoefficients) {
    const auto& t = *fiber.taylor;
    TaylorExpansion shifted{t.omega_ref, std::vector<double>(t.beta.begin() + 2, t.beta.end())};
    return taylor_eval(shifted, omega.angular());
  }
  const double h = kGroupDelayStep;
  const double w = omega.angular();
  return (beta1_numeric(fiber, OpticalFrequency::from_angular(w + h)) -
          beta1_numeric(fiber, OpticalFrequency::from_angular(w - h))) /
         (2.0 * h);
}

double group_velocity(const FiberSpec& fiber, OpticalFrequency omega) { return 1.0 / beta1(fiber, omega); }

WalkOffLength walk_off_length(const FiberSpec& fiber, double lambda_a, double lambda_b, double tau_p) {
  if (!(tau_p > 0.0)) throw DomainError("walk-off needs a positive pulse duration");
  const double d1 = std::abs(beta1(fiber, wavelength_to_omega(lambda_a)) - beta1(fiber, wavelength_to_omega(lambda_b)));
  if (lambda_a == lambda_b || d1 == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {tau_p / d1, false};
}

std::optional<double> zero_dispersion_wavelength(const FiberSpec& fiber, double lambda_lo, double lambda_hi,
                                                 std::size_t scan_points) {
  auto b2 = [&](double l) { return beta2(fiber, wavelength_to_omega(l)); };
  double prev_l = lambda_lo;
  double prev = b2(prev_l);
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double l = lambda_lo + (lambda_hi - lambda_lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    const double cur = b2(l);
    if ((prev <= 0.0) != (cur <= 0.0)) {
      double lo = prev_l, hi = l, flo = prev;
      for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = b2(mid);
        if ((fm <= 0.0) == (flo <= 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_l = l;
    prev = cur;
  }
  return std::nullopt;
}

TaylorExpansion taylor_from_fiber(const FiberSpec& fiber, OpticalFrequency omega_ref, int order) {
  if (order < 2 || order > 8) throw DomainError("Taylor order must lie in [2, 8]");
  const double w0 = omega_ref.angular();
  TaylorExpansion out{omega_ref, std::vector<double>(static_cast<std::size_t>(order) + 1)};
  if (fiber.backend == DispersionBackend::TaylorCoefficients) {
    // Analytic re-expansion of the polynomial about the new reference.
    const auto& src = *fiber.taylor;
    const double d = w0 - src.omega_ref.angular();
    for (std::size_t k = 0; k < out.beta.size(); ++k) {
      double sum = 0.0;
      for (std::size_t j = k; j < src.beta.size(); ++j)
        sum += src.beta[j] * std::pow(d, static_cast<double>(j - k)) / factorial(static_cast<int>(j - k));
      out.beta[k] = sum;
    }
    return out;
  }
  // Interpolating polynomial through 2q+1 symmetric samples, in scaled units.
  const int q = order / 2 + 2;
  const int m = 2 * q + 1;
  const double h = 2.0 * kPi * 4e12;
  Eigen::MatrixXd vander(m, m);
  Eigen::VectorXd values(m);
  const double b0 = beta(fiber, omega_ref);
  for (int i = 0; i < m; ++i) {
    const double x = static_cast<double>(i - q);
    for (int j = 0; j < m; ++j) vander(i, j) = std::pow(x, j);
    values(i) = beta(fiber, OpticalFrequency::from_angular(w0 + x * h)) - b0;
  }
  const Eigen::VectorXd poly = vander.fullPivLu().solve(values);
  out.beta[0] = b0;
  for (int k = 1; k <= order; ++k) out.beta[static_cast<std::size_t>(k)] = poly(k) * factorial(k) / std::pow(h, k);
  return out;
}

double target_linear_mismatch(const FiberSpec& fiber, const CalibrationTarget& target) {
  double sum = 0.0;
  for (const auto& [sign, omega] : target.terms) sum += sign * beta(fiber, omega);
  return sum;
}

FiberSpec calibrate_taylor_from_targets(const FiberSpec& base, std::span<const CalibrationTarget> targets,
                                        std::optional<OpticalFrequency> omega_ref) {
  if (targets.empty()) throw DomainError("calibration needs at least one target");
  base.validate();
  const OpticalFrequency ref = omega_ref.value_or(targets.front().reference);
  std::size_t order = 4;
  if (base.backend == DispersionBackend::TaylorCoefficients) order = std::max(order, base.taylor->beta.size() - 1);

  FiberSpec out = base;
  out.backend = DispersionBackend::TaylorCoefficients;
  out.taylor = taylor_from_fiber(base, ref, static_cast<int>(order));

  auto residuals = [&](const FiberSpec& f) {
    std::vector<double> r;
    for (const auto& t : targets) r.push_back((target_linear_mismatch(f, t) + t.nonlinear_offset) * t.length);
    return r;
  };
  auto worst = [](const std::vector<double>& r) {
    double w = 0.0;
    for (double x : r) w = std::max(w, std::abs(x));
    return w;
  };

  const auto r0 = residuals(out);
  if (worst(r0) < kCalibrationPhaseTolerance) return out;

  // Unknowns y_k = delta_beta_k / s_k for k = 2..4; the minimum-norm least-squares
  // solution is the smallest relative change of the coefficients.
  constexpr int kFirst = 2, kCount = 3;
  std::array<double, kCount> scale{};
  for (int i = 0; i < kCount; ++i) {
    const double b = out.taylor->beta[static_cast<std::size_t>(kFirst + i)];
    scale[i] = b != 0.0 ? std::abs(b) : 1e-26 * std::pow(1e-14, i);
  }
  const auto n_t = static_cast<Eigen::Index>(targets.size());
  Eigen::MatrixXd a(n_t, kCount);
  Eigen::VectorXd rhs(n_t);
  for (Eigen::Index t = 0; t < n_t; ++t) {
    const auto& target = targets[static_cast<std::size_t>(t)];
    for (int i = 0; i < kCount; ++i) {
      const int k = kFirst + i;
      double sum = 0.0;
      for (const auto& [sign, omega] : target.terms)
        sum += sign * std::pow(omega.angular() - ref.angular(), k) / factorial(k);
      a(t, i) = target.length * sum * scale[i];
    }
    rhs(t) = -r0[static_cast<std::size_t>(t)];
  }
  const Eigen::VectorXd y = a.completeOrthogonalDecomposition().solve(rhs);
  for (int i = 0; i < kCount; ++i) out.taylor->beta[static_cast<std::size_t>(kFirst + i)] += y(i) * scale[i];

  const auto r1 = residuals(out);
  if (worst(r1) >= kCalibrationPhaseTolerance) {
    std::ostringstream msg;
    msg << "calibration of fiber '" << base.name << "' is infeasible; residual |dbeta L| per target:";
    for (std::size_t i = 0; i < r1.size(); ++i) msg << ' ' << targets[i].label << '=' << std::abs(r1[i]) << " rad";
    std::vector<double> abs_r;
    for (double x : r1) abs_r.push_back(std::abs(x));
    throw CalibrationError(msg.str(), std::move(abs_r));
  }
  return out;
}

std::string format_taylor_block(const FiberSpec& fiber) {
  if (!fiber.taylor) throw DomainError("fiber '" + fiber.name + "' has no Taylor coefficients");
  std::ostringstream os;
  char buf[64];
  os << "# calibrated dispersion for fiber '" << fiber.name << "'\n";
  os << "dispersion: taylor\n";
  os << "taylor:\n";
  std::snprintf(buf, sizeof buf, "%.17g", fiber.taylor->omega_ref.wavelength() * 1e9);
  os << "  reference_wavelength_nm: " << buf << '\n';
  os << "  beta:  # beta_k in s^k/m, k = 0, 1, ...\n";
  for (double b : fiber.taylor->beta) {
    std::snprintf(buf, sizeof buf, "%.17g", b);
    os << "    - " << buf << '\n';
  }
  return os.str();
}

}  // namespace seqfwm
