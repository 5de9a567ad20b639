#include "seqfwm/runner/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "seqfwm/errors.hpp"
#include "seqfwm/phasematch.hpp"

namespace seqfwm::runner {

PulseTrainSpec SourceDef::train() const { return train(power); }

PulseTrainSpec SourceDef::train(double avg_power) const {
  if (kind != Kind::Pulsed) throw DomainError("source '" + name + "' is not pulsed");
  PulseTrainSpec t{tau_p, rep_rate, avg_power, wavelength_to_omega(wavelength), shape, chirp};
  return t;
}

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::PhaseMatchScan: return "PhaseMatchScan";
    case ScenarioKind::PowerSweep: return "PowerSweep";
    case ScenarioKind::WavelengthSweep: return "WavelengthSweep";
    case ScenarioKind::NoiseEnsemble: return "NoiseEnsemble";
    case ScenarioKind::TwoStageChain: return "TwoStageChain";
    case ScenarioKind::EstimateEfficiency: return "EstimateEfficiency";
  }
  return "?";
}

const FiberDef& Config::fiber(const std::string& name) const {
  auto it = fibers.find(name);
  if (it == fibers.end()) throw ConfigError("undefined fiber '" + name + "'", 0, 0);
  return it->second;
}

const SourceDef& Config::source(const std::string& name) const {
  auto it = sources.find(name);
  if (it == sources.end()) throw ConfigError("undefined source '" + name + "'", 0, 0);
  return it->second;
}

TemporalGrid Config::grid(const std::string& name) const {
  auto it = grids.find(name);
  if (it == grids.end()) throw ConfigError("undefined grid '" + name + "'", 0, 0);
  return TemporalGrid(it->second.points, it->second.span, wavelength_to_omega(source(it->second.carrier).wavelength));
}

PulsedPumps Config::pumps(const ConversionDef& c) const {
  const auto& f = fiber(c.fiber);
  const auto& s = source(c.pump_short);
  const auto& l = source(c.pump_long);
  PulsedPumps p{s.train(c.pump_short_power.value_or(s.power) * f.coupling),
                l.train(c.pump_long_power.value_or(l.power) * f.coupling), c.delay, c.convention};
  return p;
}

ConversionSetup Config::setup(const ConversionDef& c) const {
  const auto p = pumps(c);
  return ConversionSetup(p.pump_short.center, p.pump_long.center, wavelength_to_omega(source(c.input).wavelength),
                         c.direction, p.pump_short.peak_power(), p.pump_long.peak_power(), fiber(c.fiber).spec);
}

namespace {

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) {
  const auto m = n.Mark();
  if (m.is_null()) throw ConfigError(what, 0, 0);
  throw ConfigError(what, m.line + 1, m.column + 1);
}

void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!map.IsMap()) fail(map, where + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(kv.first, "unknown key '" + key + "' in " + where);
  }
}

const YAML::Node require(const YAML::Node& map, const char* key, const std::string& where) {
  const auto n = map[key];
  if (!n) fail(map, where + " is missing required key '" + key + "'");
  return n;
}

template <class T>
T scalar(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + " must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, what + " has the wrong type");
  }
}

double number(const YAML::Node& map, const char* key, const std::string& where) {
  return scalar<double>(require(map, key, where), where + "." + key);
}

double number_or(const YAML::Node& map, const char* key, double fallback, const std::string& where) {
  const auto n = map[key];
  return n ? scalar<double>(n, where + "." + key) : fallback;
}

std::optional<double> number_opt(const YAML::Node& map, const char* key, const std::string& where, double scale) {
  const auto n = map[key];
  if (!n) return std::nullopt;
  return scalar<double>(n, where + "." + key) * scale;
}

std::string text(const YAML::Node& map, const char* key, const std::string& where) {
  return scalar<std::string>(require(map, key, where), where + "." + key);
}

std::string text_or(const YAML::Node& map, const char* key, const std::string& fallback, const std::string& where) {
  const auto n = map[key];
  return n ? scalar<std::string>(n, where + "." + key) : fallback;
}

bool flag_or(const YAML::Node& map, const char* key, bool fallback, const std::string& where) {
  const auto n = map[key];
  return n ? scalar<bool>(n, where + "." + key) : fallback;
}

std::vector<double> numbers(const YAML::Node& map, const char* key, const std::string& where, double scale) {
  const auto n = require(map, key, where);
  if (!n.IsSequence()) fail(n, where + "." + key + " must be a list");
  std::vector<double> out;
  for (const auto& v : n) out.push_back(scalar<double>(v, where + "." + key) * scale);
  return out;
}

void positive(const YAML::Node& n, double v, const std::string& what) {
  if (!(v > 0.0)) fail(n, what + " must be positive");
}

const std::regex kIdentifier("[A-Za-z_][A-Za-z0-9_\\-]*");

void identifier(const YAML::Node& n, const std::string& name, const std::string& what) {
  if (!std::regex_match(name, kIdentifier)) fail(n, what + " '" + name + "' is not a valid identifier");
}

ConversionDirection direction(const YAML::Node& map, const std::string& where) {
  const auto n = map["direction"];
  if (!n) return ConversionDirection::Up;
  const auto d = scalar<std::string>(n, where + ".direction");
  if (d == "up") return ConversionDirection::Up;
  if (d == "down") return ConversionDirection::Down;
  fail(n, where + ".direction must be 'up' or 'down'");
}

SourceDef parse_source(const std::string& name, const YAML::Node& n) {
  const std::string where = "source '" + name + "'";
  check_keys(n, {"kind", "wavelength_nm", "power_mW", "avg_power_mW", "tau_ps", "rep_rate_MHz", "shape", "chirp"},
             where);
  SourceDef s;
  s.name = name;
  const auto kind = text(n, "kind", where);
  s.wavelength = number(n, "wavelength_nm", where) * 1e-9;
  positive(n["wavelength_nm"], s.wavelength, where + ".wavelength_nm");
  if (kind == "cw") {
    s.kind = SourceDef::Kind::Cw;
    s.power = number(n, "power_mW", where) * 1e-3;
    if (!(s.power >= 0.0)) fail(n["power_mW"], where + ".power_mW must be non-negative");
  } else if (kind == "pulsed") {
    s.kind = SourceDef::Kind::Pulsed;
    s.power = number(n, "avg_power_mW", where) * 1e-3;
    s.tau_p = number(n, "tau_ps", where) * 1e-12;
    s.rep_rate = number(n, "rep_rate_MHz", where) * 1e6;
    s.chirp = number_or(n, "chirp", 0.0, where);
    const auto shape = text_or(n, "shape", "gaussian", where);
    if (shape == "gaussian") s.shape = PulseShape::Gaussian;
    else if (shape == "sech") s.shape = PulseShape::Sech;
    else if (shape == "rectangular") s.shape = PulseShape::Rectangular;
    else fail(n["shape"], where + ".shape must be gaussian, sech or rectangular");
    try {
      s.train().validate();
    } catch (const DomainError& e) {
      fail(n, where + ": " + e.what());
    }
  } else {
    fail(n["kind"], where + ".kind must be 'cw' or 'pulsed'");
  }
  return s;
}

GridDef parse_grid(const std::string& name, const YAML::Node& n) {
  const std::string where = "grid '" + name + "'";
  check_keys(n, {"points", "span_ps", "carrier"}, where);
  GridDef g{name, scalar<std::size_t>(require(n, "points", where), where + ".points"),
            number(n, "span_ps", where) * 1e-12, text(n, "carrier", where)};
  return g;
}

CalibrationDef parse_calibration(const YAML::Node& n, const std::string& where) {
  check_keys(n,
             {"process", "pump_short", "pump_long", "pump", "input_nm", "signal_nm", "direction", "pump_short_avg_mW",
              "pump_long_avg_mW", "peak_power_W", "nonlinear"},
             where);
  CalibrationDef c;
  const auto process = text_or(n, "process", "bragg", where);
  if (process == "bragg") {
    c.process = ConversionProcess::Bragg;
    c.pump_short = text(n, "pump_short", where);
    c.pump_long = text(n, "pump_long", where);
    c.input_wavelength = number(n, "input_nm", where) * 1e-9;
    c.direction = direction(n, where);
    c.pump_short_power = number_opt(n, "pump_short_avg_mW", where, 1e-3);
    c.pump_long_power = number_opt(n, "pump_long_avg_mW", where, 1e-3);
  } else if (process == "degenerate") {
    c.process = ConversionProcess::Degenerate;
    c.pump_short = text(n, "pump", where);
    c.input_wavelength = number(n, "signal_nm", where) * 1e-9;
    c.peak_power = number_opt(n, "peak_power_W", where, 1.0);
  } else {
    fail(n["process"], where + ".process must be 'bragg' or 'degenerate'");
  }
  c.nonlinear = flag_or(n, "nonlinear", true, where);
  return c;
}

FiberDef parse_fiber(const std::string& name, const YAML::Node& n) {
  const std::string where = "fiber '" + name + "'";
  check_keys(n,
             {"pitch_um", "hole_diameter_um", "length_m", "gamma_per_W_m", "loss_per_m", "coupling", "dispersion",
              "taylor", "calibrate", "calibration_reference_nm"},
             where);
  FiberDef f;
  auto& s = f.spec;
  s.name = name;
  s.pitch = number_or(n, "pitch_um", 0.0, where) * 1e-6;
  s.hole_diameter = number_or(n, "hole_diameter_um", 0.0, where) * 1e-6;
  s.length = number(n, "length_m", where);
  s.gamma = number(n, "gamma_per_W_m", where);
  s.loss = number_or(n, "loss_per_m", 0.0, where);
  f.coupling = number_or(n, "coupling", 1.0, where);
  if (!(f.coupling > 0.0) || f.coupling > 1.0) fail(n["coupling"], where + ".coupling must lie in (0, 1]");
  const auto backend = text_or(n, "dispersion", "geometry", where);
  if (backend == "geometry") {
    s.backend = DispersionBackend::GeometryEmpirical;
  } else if (backend == "taylor") {
    s.backend = DispersionBackend::TaylorCoefficients;
    const auto t = require(n, "taylor", where);
    check_keys(t, {"reference_wavelength_nm", "beta"}, where + ".taylor");
    TaylorExpansion te{wavelength_to_omega(number(t, "reference_wavelength_nm", where + ".taylor") * 1e-9),
                       numbers(t, "beta", where + ".taylor", 1.0)};
    s.taylor = te;
  } else {
    fail(n["dispersion"], where + ".dispersion must be 'geometry' or 'taylor'");
  }
  if (const auto c = n["calibrate"]) {
    if (!c.IsSequence()) fail(c, where + ".calibrate must be a list");
    for (std::size_t i = 0; i < c.size(); ++i)
      f.calibrate.push_back(parse_calibration(c[i], where + ".calibrate[" + std::to_string(i) + "]"));
  }
  f.calibration_reference = number_opt(n, "calibration_reference_nm", where, 1e-9);
  try {
    s.validate();
  } catch (const DomainError& e) {
    fail(n, where + ": " + e.what());
  }
  return f;
}

ScenarioKind scenario_kind(const YAML::Node& n) {
  const auto k = scalar<std::string>(n, "scenario kind");
  for (auto kind : {ScenarioKind::PhaseMatchScan, ScenarioKind::PowerSweep, ScenarioKind::WavelengthSweep,
                    ScenarioKind::NoiseEnsemble, ScenarioKind::TwoStageChain, ScenarioKind::EstimateEfficiency})
    if (k == to_string(kind)) return kind;
  fail(n, "unknown scenario kind '" + k + "'");
}

void parse_conversion(const YAML::Node& n, ConversionDef& c, const std::string& where) {
  c.fiber = text(n, "fiber", where);
  c.pump_short = text(n, "pump_short", where);
  c.pump_long = text(n, "pump_long", where);
  c.input = text(n, "input", where);
  c.direction = direction(n, where);
  c.pump_short_power = number_opt(n, "pump_short_avg_mW", where, 1e-3);
  c.pump_long_power = number_opt(n, "pump_long_avg_mW", where, 1e-3);
  c.delay = number_or(n, "delay_ps", 0.0, where) * 1e-12;
  const auto conv = text_or(n, "tau_convention", "fwhm", where);
  if (conv == "fwhm") c.convention = TauConvention::Fwhm;
  else if (conv == "equivalent_rectangle") c.convention = TauConvention::EquivalentRectangle;
  else fail(n["tau_convention"], where + ".tau_convention must be fwhm or equivalent_rectangle");
}

void parse_stage1(const YAML::Node& n, Scenario& s, const std::string& where) {
  s.stage1_fiber = text(n, s.kind == ScenarioKind::TwoStageChain ? "stage1_fiber" : "fiber", where);
  s.grid = text(n, "grid", where);
  s.pump = text(n, "pump", where);
  s.seed_source = text(n, "seed_source", where);
  s.dz = number_or(n, "dz_mm", s.dz * 1e3, where) * 1e-3;
  const auto policy = text_or(n, "step_policy", "fixed", where);
  if (policy == "fixed") s.step_policy = StepPolicy::Fixed;
  else if (policy == "adaptive") s.step_policy = StepPolicy::Adaptive;
  else fail(n["step_policy"], where + ".step_policy must be fixed or adaptive");
  s.error_target = number_or(n, "error_target", s.error_target, where);
  const auto model = text_or(n, "noise_model", "one_photon", where);
  if (model == "one_photon") s.noise_model = VacuumNoiseModel::OnePhotonRandomPhase;
  else if (model == "half_photon_gaussian") s.noise_model = VacuumNoiseModel::HalfPhotonGaussian;
  else fail(n["noise_model"], where + ".noise_model must be one_photon or half_photon_gaussian");
  s.vacuum_noise = flag_or(n, "vacuum_noise", true, where);
  s.idler_half_width = number_opt(n, "idler_half_width_THz", where, 2.0 * kPi * 1e12);
}

Scenario parse_scenario(const YAML::Node& n, std::size_t index) {
  std::string where = "scenarios[" + std::to_string(index) + "]";
  if (!n.IsMap()) fail(n, where + " must be a mapping");
  Scenario s;
  s.name = text(n, "name", where);
  identifier(n["name"], s.name, "scenario name");
  where = "scenario '" + s.name + "'";
  s.kind = scenario_kind(require(n, "kind", where));
  s.line = n.Mark().line + 1;
  if (const auto seed = n["seed"]) s.seed = scalar<std::uint64_t>(seed, where + ".seed");
  s.workers = static_cast<unsigned>(number_or(n, "workers", 1, where));
  if (s.workers < 1) fail(n["workers"], where + ".workers must be at least 1");

  const std::initializer_list<const char*> conversion_keys = {
      "fiber", "pump_short", "pump_long", "input", "direction", "pump_short_avg_mW", "pump_long_avg_mW", "delay_ps",
      "tau_convention"};
  auto keys = [&](std::initializer_list<const char*> extra) {
    std::vector<const char*> all = {"name", "kind", "seed", "workers"};
    all.insert(all.end(), extra.begin(), extra.end());
    return all;
  };
  auto check = [&](const std::vector<const char*>& allowed) {
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  };
  auto with_conversion = [&](std::initializer_list<const char*> extra) {
    auto all = keys(extra);
    all.insert(all.end(), conversion_keys.begin(), conversion_keys.end());
    return all;
  };
  auto scan = [&] {
    const auto band = numbers(n, "scan_nm", where, 1e-9);
    if (band.size() != 2 || !(band[1] > band[0])) fail(n["scan_nm"], where + ".scan_nm must be [lo, hi] with lo < hi");
    s.scan_lo = band[0];
    s.scan_hi = band[1];
    s.points = static_cast<std::size_t>(number_or(n, "points", static_cast<double>(kDefaultCurvePoints), where));
  };
  const std::initializer_list<const char*> stage1_keys = {"grid", "pump", "seed_source", "dz_mm", "step_policy",
                                                          "error_target", "noise_model", "vacuum_noise",
                                                          "idler_half_width_THz"};

  switch (s.kind) {
    case ScenarioKind::PhaseMatchScan:
      check(with_conversion({"scan_nm", "points", "nonlinear"}));
      parse_conversion(n, s.conversion, where);
      scan();
      if (s.points < 16) fail(n["points"], where + ".points must be at least 16");
      s.nonlinear = flag_or(n, "nonlinear", true, where);
      break;
    case ScenarioKind::WavelengthSweep:
      check(with_conversion({"scan_nm", "points"}));
      parse_conversion(n, s.conversion, where);
      scan();
      if (s.points < 2) fail(n["points"], where + ".points must be at least 2");
      break;
    case ScenarioKind::PowerSweep: {
      check(with_conversion({"axis", "powers_mW"}));
      parse_conversion(n, s.conversion, where);
      const auto axis = text_or(n, "axis", "pump_short", where);
      if (axis == "pump_short") s.axis = SweepAxis::ShortPumpPower;
      else if (axis == "pump_long") s.axis = SweepAxis::LongPumpPower;
      else fail(n["axis"], where + ".axis must be pump_short or pump_long");
      s.powers = numbers(n, "powers_mW", where, 1e-3);
      if (s.powers.size() < 2) fail(n["powers_mW"], where + ".powers_mW needs at least two points");
      for (double p : s.powers)
        if (p < 0.0) fail(n["powers_mW"], where + ".powers_mW must be non-negative");
      break;
    }
    case ScenarioKind::NoiseEnsemble: {
      auto all = keys({"seed_powers_mW", "runs", "jitter"});
      all.insert(all.end(), stage1_keys.begin(), stage1_keys.end());
      all.push_back("fiber");
      check(all);
      parse_stage1(n, s, where);
      s.seed_powers = numbers(n, "seed_powers_mW", where, 1e-3);
      if (s.seed_powers.empty()) fail(n["seed_powers_mW"], where + ".seed_powers_mW must not be empty");
      s.runs = static_cast<std::size_t>(number_or(n, "runs", static_cast<double>(s.runs), where));
      if (s.runs < kMinEnsembleRuns)
        fail(n["runs"], where + ".runs must be at least " + std::to_string(kMinEnsembleRuns));
      s.jitter = number_or(n, "jitter", s.jitter, where);
      if (!(s.jitter >= 0.0)) fail(n["jitter"], where + ".jitter must be non-negative");
      break;
    }
    case ScenarioKind::TwoStageChain: {
      auto all = with_conversion({"stage1_fiber", "seed_power_mW", "stage_coupling", "osa_resolution_nm",
                                  "peak_tolerance_nm", "powers_mW", "axis", "search_nm"});
      all.insert(all.end(), stage1_keys.begin(), stage1_keys.end());
      check(all);
      parse_stage1(n, s, where);
      parse_conversion(n, s.conversion, where);
      s.seed_powers = {number(n, "seed_power_mW", where) * 1e-3};
      s.stage_coupling = number_or(n, "stage_coupling", s.stage_coupling, where);
      if (!(s.stage_coupling > 0.0) || s.stage_coupling > 1.0)
        fail(n["stage_coupling"], where + ".stage_coupling must lie in (0, 1]");
      s.osa_resolution = number_or(n, "osa_resolution_nm", 2.0, where) * 1e-9;
      s.peak_tolerance = number_or(n, "peak_tolerance_nm", 2.0, where) * 1e-9;
      s.powers = numbers(n, "powers_mW", where, 1e-3);
      if (s.powers.size() < 2) fail(n["powers_mW"], where + ".powers_mW needs at least two points");
      const auto axis = text_or(n, "axis", "pump_short", where);
      if (axis == "pump_short") s.axis = SweepAxis::ShortPumpPower;
      else if (axis == "pump_long") s.axis = SweepAxis::LongPumpPower;
      else fail(n["axis"], where + ".axis must be pump_short or pump_long");
      const auto band = numbers(n, "search_nm", where, 1e-9);
      if (band.size() != 2 || !(band[1] > band[0])) fail(n["search_nm"], where + ".search_nm must be [lo, hi]");
      s.scan_lo = band[0];
      s.scan_hi = band[1];
      break;
    }
    case ScenarioKind::EstimateEfficiency: {
      check(with_conversion({"eta_internal", "spectrum_with_input", "spectrum_blocked", "band_half_width_THz",
                             "duty_convention", "background_W_per_bin"}));
      parse_conversion(n, s.conversion, where);
      s.eta_internal = number_opt(n, "eta_internal", where, 1.0);
      s.spectrum_with_input = text_or(n, "spectrum_with_input", "", where);
      s.spectrum_blocked = text_or(n, "spectrum_blocked", "", where);
      if (s.eta_internal.has_value() == !s.spectrum_with_input.empty())
        fail(n, where + " needs exactly one of eta_internal or spectrum_with_input");
      if (!s.spectrum_with_input.empty() && s.spectrum_blocked.empty())
        fail(n, where + ".spectrum_blocked is required with spectrum_with_input");
      if (s.eta_internal && (*s.eta_internal < 0.0 || *s.eta_internal > 1.0))
        fail(n["eta_internal"], where + ".eta_internal must lie in [0, 1]");
      s.band_half_width = number_or(n, "band_half_width_THz", 1.0, where) * 2.0 * kPi * 1e12;
      const auto dc = text_or(n, "duty_convention", "fwhm", where);
      if (dc == "fwhm") s.duty_convention = DutyConvention::Fwhm;
      else if (dc == "equivalent_rectangle") s.duty_convention = DutyConvention::EquivalentRectangle;
      else fail(n["duty_convention"], where + ".duty_convention must be fwhm or equivalent_rectangle");
      s.background = number_or(n, "background_W_per_bin", 0.0, where);
      break;
    }
  }
  return s;
}

void check_source(const Config& c, const YAML::Node& where, const std::string& name, const std::string& what,
                  std::optional<SourceDef::Kind> kind = std::nullopt) {
  auto it = c.sources.find(name);
  if (it == c.sources.end()) fail(where, what + " references undefined source '" + name + "'");
  if (kind && it->second.kind != *kind)
    fail(where, what + " needs a " + std::string(*kind == SourceDef::Kind::Pulsed ? "pulsed" : "cw") + " source, '" +
                    name + "' is not");
}

void check_fiber(const Config& c, const YAML::Node& where, const std::string& name, const std::string& what) {
  if (!c.fibers.count(name)) fail(where, what + " references undefined fiber '" + name + "'");
}

void calibrate(Config& cfg, FiberDef& f, const YAML::Node& node) {
  if (f.calibrate.empty()) return;
  std::vector<CalibrationTarget> targets;
  for (const auto& t : f.calibrate) {
    const auto terms = t.nonlinear ? NonlinearTerms::Included : NonlinearTerms::Excluded;
    check_source(cfg, node, t.pump_short, "calibration target", SourceDef::Kind::Pulsed);
    const auto& ps = cfg.sources.at(t.pump_short);
    if (t.process == ConversionProcess::Bragg) {
      check_source(cfg, node, t.pump_long, "calibration target", SourceDef::Kind::Pulsed);
      const auto& pl = cfg.sources.at(t.pump_long);
      const auto ts = ps.train(t.pump_short_power.value_or(ps.power) * f.coupling);
      const auto tl = pl.train(t.pump_long_power.value_or(pl.power) * f.coupling);
      const ConversionSetup setup(ts.center, tl.center, wavelength_to_omega(t.input_wavelength), t.direction,
                                  ts.peak_power(), tl.peak_power(), f.spec);
      targets.push_back(bs_target(setup, terms));
    } else {
      const double peak = t.peak_power.value_or(ps.train(ps.power * f.coupling).peak_power());
      targets.push_back(degenerate_target(wavelength_to_omega(ps.wavelength), wavelength_to_omega(t.input_wavelength),
                                          peak, f.spec, terms));
    }
  }
  std::optional<OpticalFrequency> ref;
  if (f.calibration_reference) ref = wavelength_to_omega(*f.calibration_reference);
  try {
    f.spec = calibrate_taylor_from_targets(f.spec, targets, ref);
  } catch (const CalibrationError& e) {
    std::ostringstream msg;
    msg << "fiber '" << f.spec.name << "' calibration failed: " << e.what() << " (residuals rad:";
    for (double r : e.residuals()) msg << ' ' << r;
    msg << ')';
    fail(node, msg.str());
  } catch (const Error& e) {
    fail(node, "fiber '" + f.spec.name + "' calibration failed: " + e.what());
  }
}

void validate_references(const Config& cfg, const YAML::Node& scen_nodes) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
    const auto& s = cfg.scenarios[i];
    const auto node = scen_nodes[i];
    const std::string what = "scenario '" + s.name + "'";
    if (!names.insert(s.name).second) fail(node["name"], "duplicate scenario name '" + s.name + "'");
    auto conversion = [&] {
      const auto& c = s.conversion;
      check_fiber(cfg, node["fiber"], c.fiber, what);
      check_source(cfg, node["pump_short"], c.pump_short, what, SourceDef::Kind::Pulsed);
      check_source(cfg, node["pump_long"], c.pump_long, what, SourceDef::Kind::Pulsed);
      check_source(cfg, node["input"], c.input, what, SourceDef::Kind::Cw);
      try {
        const auto p = cfg.pumps(c);
        if (std::abs(p.pump_short.rep_rate - p.pump_long.rep_rate) > 1e-9 * p.pump_short.rep_rate)
          fail(node, what + ": pump trains must share a repetition rate");
        (void)cfg.setup(c);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        fail(node, what + ": " + e.what());
      }
    };
    auto stage1 = [&](const char* fiber_key) {
      check_fiber(cfg, node[fiber_key], s.stage1_fiber, what);
      if (!cfg.grids.count(s.grid)) fail(node["grid"], what + " references undefined grid '" + s.grid + "'");
      check_source(cfg, node["pump"], s.pump, what, SourceDef::Kind::Pulsed);
      check_source(cfg, node["seed_source"], s.seed_source, what, SourceDef::Kind::Cw);
      try {
        PropagationConfig pc{cfg.fiber(s.stage1_fiber).spec, cfg.grid(s.grid), s.dz, s.error_target};
        pc.validate();
      } catch (const Error& e) {
        fail(node, what + ": " + e.what());
      }
    };
    switch (s.kind) {
      case ScenarioKind::PhaseMatchScan:
      case ScenarioKind::WavelengthSweep:
      case ScenarioKind::PowerSweep:
      case ScenarioKind::EstimateEfficiency:
        conversion();
        break;
      case ScenarioKind::NoiseEnsemble:
        stage1("fiber");
        break;
      case ScenarioKind::TwoStageChain:
        stage1("stage1_fiber");
        conversion();
        break;
    }
  }
}

}  // namespace

Config parse_config(const std::string& text_in, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text_in);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("syntax error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping at top level", 1, 1);
  check_keys(root, {"version", "seed", "fibers", "sources", "grids", "scenarios"}, "config");
  Config cfg;
  cfg.base_dir = base_dir;
  if (const auto v = root["version"]) {
    if (scalar<int>(v, "version") != 1) fail(v, "unsupported config version (expected 1)");
  }
  if (const auto seed = root["seed"]) cfg.seed = scalar<std::uint64_t>(seed, "seed");

  if (const auto sources = root["sources"]) {
    if (!sources.IsMap()) fail(sources, "sources must be a mapping");
    for (const auto& kv : sources) {
      const auto name = kv.first.as<std::string>();
      identifier(kv.first, name, "source name");
      cfg.sources.emplace(name, parse_source(name, kv.second));
    }
  }
  if (const auto grids = root["grids"]) {
    if (!grids.IsMap()) fail(grids, "grids must be a mapping");
    for (const auto& kv : grids) {
      const auto name = kv.first.as<std::string>();
      identifier(kv.first, name, "grid name");
      auto g = parse_grid(name, kv.second);
      check_source(cfg, kv.second["carrier"], g.carrier, "grid '" + name + "'");
      try {
        (void)TemporalGrid(g.points, g.span, wavelength_to_omega(cfg.sources.at(g.carrier).wavelength));
      } catch (const Error& e) {
        fail(kv.second, "grid '" + name + "': " + e.what());
      }
      cfg.grids.emplace(name, g);
    }
  }
  const auto fibers = require(root, "fibers", "config");
  if (!fibers.IsMap() || fibers.size() == 0) fail(fibers, "fibers must be a non-empty mapping");
  for (const auto& kv : fibers) {
    const auto name = kv.first.as<std::string>();
    identifier(kv.first, name, "fiber name");
    auto f = parse_fiber(name, kv.second);
    calibrate(cfg, f, kv.second);
    cfg.fibers.emplace(name, std::move(f));
  }
  const auto scenarios = require(root, "scenarios", "config");
  if (!scenarios.IsSequence() || scenarios.size() == 0) fail(scenarios, "scenarios must be a non-empty list");
  for (std::size_t i = 0; i < scenarios.size(); ++i) cfg.scenarios.push_back(parse_scenario(scenarios[i], i));
  validate_references(cfg, scenarios);
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace seqfwm::runner
