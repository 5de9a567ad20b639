#include "seqfwm/runner/runner.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "seqfwm/coupled.hpp"
#include "seqfwm/errors.hpp"
#include "seqfwm/metrics.hpp"
#include "seqfwm/phasematch.hpp"
#include "seqfwm/propagation.hpp"

namespace seqfwm::runner {

const char* toolkit_version() { return "0.3.0"; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string failure_cause(const std::exception& e) {
  if (dynamic_cast<const CalibrationError*>(&e)) return "calibration_error";
  if (dynamic_cast<const StiffnessError*>(&e)) return "stiffness";
  if (dynamic_cast<const AliasingError*>(&e)) return "aliasing";
  if (dynamic_cast<const RangeError*>(&e)) return "range_error";
  if (dynamic_cast<const NotFoundError*>(&e)) return "not_found";
  if (dynamic_cast<const DomainError*>(&e)) return "domain_error";
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  return "internal_error";
}

bool RunManifest::all_ok() const {
  return std::all_of(scenarios.begin(), scenarios.end(), [](const auto& s) { return s.ok; });
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["toolkit"] = {{"name", "seqfwm"}, {"version", toolkit_version()}};
  j["config"] = {{"path", config_path}, {"sha256", config_sha256}};
  j["seed"] = seed;
  j["started_utc"] = started_utc;
  j["wall_clock_s"] = wall_seconds;
  j["constants"] = {{"sellmeier", "fused silica, Malitson three-term"},
                    {"effective_index_model", "hexagonal PCF empirical V/W relations"},
                    {"shape_factor_gaussian", shape_factor(PulseShape::Gaussian)},
                    {"shape_factor_sech", shape_factor(PulseShape::Sech)},
                    {"speed_of_light_m_per_s", kSpeedOfLight},
                    {"hbar_J_s", kHbar}};
  auto& arr = j["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& s : scenarios) {
    nlohmann::ordered_json e;
    e["name"] = s.name;
    e["kind"] = to_string(s.kind);
    e["status"] = s.ok ? "ok" : "failed";
    e["cause"] = s.cause.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(s.cause);
    if (!s.message.empty()) e["message"] = s.message;
    e["seed"] = s.seed;
    e["wall_clock_s"] = s.wall_seconds;
    auto& outs = e["outputs"] = nlohmann::ordered_json::array();
    for (const auto& o : s.outputs)
      outs.push_back({{"role", o.role}, {"file", o.path.filename().string()}, {"sha256", o.sha256}});
    e["summary"] = s.summary;
    arr.push_back(std::move(e));
  }
  return j;
}

namespace {

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt_num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double nm(double m) { return m * 1e9; }

struct Context {
  const Config& cfg;
  const Scenario& sc;
  std::filesystem::path out_dir;
  ScenarioResult& result;

  void emit(const std::string& role, const std::string& ext, const std::string& content) {
    const auto path = out_dir / (sc.name + "_" + role + "." + ext);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    f.close();
    result.outputs.push_back({role, path, sha256_hex(content)});
  }
  void emit_summary() { emit("summary", "json", result.summary.dump(2) + "\n"); }
};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

void run_phase_match_scan(Context& ctx) {
  const auto& sc = ctx.sc;
  const auto setup = ctx.cfg.setup(sc.conversion);
  const auto terms = sc.nonlinear ? NonlinearTerms::Included : NonlinearTerms::Excluded;
  const auto curve = bandwidth_curve(setup, sc.scan_lo, sc.scan_hi, sc.points, terms);
  std::ostringstream csv;
  write_csv(csv, curve);
  ctx.emit("curve", "csv", csv.str());

  auto& j = ctx.result.summary;
  j["center_nm"] = nm(curve.center);
  j["fwhm_nm"] = nm(curve.fwhm);
  try {
    const double root = find_matched_input(setup, sc.scan_lo, sc.scan_hi, terms);
    j["matched_input_nm"] = nm(root);
    j["matched_output_nm"] = nm(setup.with_input(wavelength_to_omega(root)).output().wavelength());
  } catch (const NotFoundError& e) {
    j["matched_input_nm"] = nullptr;
    j["matched_search"] = e.what();
  }
  const auto pm = mismatch_bs(setup, terms);
  j["configured_input_nm"] = nm(setup.input().wavelength());
  j["configured_output_nm"] = nm(setup.output().wavelength());
  j["delta_beta_total_rad_per_m"] = pm.delta_beta_total;
  j["matched"] = pm.matched;
  ctx.emit_summary();
}

void sweep_summary(Context& ctx, const EfficiencySweep& sweep) {
  auto& j = ctx.result.summary;
  const auto it = std::max_element(sweep.eta.begin(), sweep.eta.end());
  j["eta_max"] = *it;
  const double at = sweep.abscissa[static_cast<std::size_t>(it - sweep.eta.begin())];
  if (sweep.axis == SweepAxis::InputWavelength) {
    j["argmax_wavelength_nm"] = nm(at);
  } else {
    j["argmax_avg_power_mW"] = at * 1e3;
    const auto fit = linear_fit(sweep.abscissa, sweep.eta);
    j["slope_per_W"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["fit_residual_fraction_of_max"] = *it > 0.0 ? fit.max_abs_residual / *it : 0.0;
  }
}

void run_power_sweep(Context& ctx) {
  const auto& sc = ctx.sc;
  const auto& fiber = ctx.cfg.fiber(sc.conversion.fiber);
  SweepSpec spec{sc.axis, {}, sc.workers};
  for (double p : sc.powers) spec.values.push_back(p * fiber.coupling);
  auto sweep = sweep_efficiency(ctx.cfg.setup(sc.conversion), ctx.cfg.pumps(sc.conversion),
                                ctx.cfg.source(sc.conversion.input).power, spec);
  sweep.abscissa = sc.powers;  // report the configured (pre-coupling) powers
  std::ostringstream csv;
  write_csv(csv, sweep);
  ctx.emit("sweep", "csv", csv.str());
  auto& j = ctx.result.summary;
  j["axis"] = sc.axis == SweepAxis::ShortPumpPower ? "pump_short" : "pump_long";
  j["direction"] = sc.conversion.direction == ConversionDirection::Up ? "up" : "down";
  sweep_summary(ctx, sweep);
  ctx.emit_summary();
}

void run_wavelength_sweep(Context& ctx) {
  const auto& sc = ctx.sc;
  SweepSpec spec{SweepAxis::InputWavelength, linspace(sc.scan_lo, sc.scan_hi, sc.points), sc.workers};
  const auto sweep = sweep_efficiency(ctx.cfg.setup(sc.conversion), ctx.cfg.pumps(sc.conversion),
                                      ctx.cfg.source(sc.conversion.input).power, spec);
  std::ostringstream csv;
  write_csv(csv, sweep);
  ctx.emit("sweep", "csv", csv.str());
  sweep_summary(ctx, sweep);
  ctx.emit_summary();
}

PropagationConfig stage1_config(const Context& ctx) {
  const auto& sc = ctx.sc;
  PropagationConfig pc{ctx.cfg.fiber(sc.stage1_fiber).spec, ctx.cfg.grid(sc.grid), sc.dz, sc.error_target};
  pc.include_vacuum_noise = sc.vacuum_noise;
  pc.rng_seed = ctx.result.seed;
  pc.step_policy = sc.step_policy;
  pc.noise_model = sc.noise_model;
  return pc;
}

PulseTrainSpec stage1_pump(const Context& ctx) {
  const auto& src = ctx.cfg.source(ctx.sc.pump);
  return src.train(src.power * ctx.cfg.fiber(ctx.sc.stage1_fiber).coupling);
}

FrequencyBand stage1_band(const Context& ctx, const PulseTrainSpec& pump, double seed_wavelength) {
  if (!ctx.sc.idler_half_width) return default_idler_band(pump, seed_wavelength);
  const auto idler = degenerate_fwm_partner(pump.center, wavelength_to_omega(seed_wavelength));
  return FrequencyBand::around(idler.angular(), *ctx.sc.idler_half_width);
}

void run_noise_ensemble(Context& ctx) {
  const auto& sc = ctx.sc;
  const auto pc = stage1_config(ctx);
  const auto pump = stage1_pump(ctx);
  const double seed_wl = ctx.cfg.source(sc.seed_source).wavelength;
  EnsembleSpec spec{sc.runs, sc.jitter, stage1_band(ctx, pump, seed_wl), sc.workers};

  std::ostringstream stats_csv, energies_csv, hist_csv;
  stats_csv << "seed_power_mW,runs,mean_energy_J,fractional_std\n";
  energies_csv << "seed_power_mW,run,energy_J\n";
  hist_csv << "seed_power_mW,bin_lo_J,bin_hi_J,count\n";
  auto& rows = ctx.result.summary["ensembles"] = nlohmann::ordered_json::array();
  char buf[160];
  for (double ps : sc.seed_powers) {
    spdlog::info("[{}] ensemble: seed {} mW, {} runs", sc.name, ps * 1e3, sc.runs);
    const auto st = ensemble(pump, ps, seed_wl, pc, spec);
    std::snprintf(buf, sizeof buf, "%.6g,%zu,%.9e,%.9f\n", ps * 1e3, st.energies.size(), st.mean,
                  st.fractional_std);
    stats_csv << buf;
    for (std::size_t i = 0; i < st.energies.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6g,%zu,%.9e\n", ps * 1e3, i, st.energies[i]);
      energies_csv << buf;
    }
    for (std::size_t i = 0; i < st.histogram.counts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6g,%.9e,%.9e,%zu\n", ps * 1e3, st.histogram.edges[i],
                    st.histogram.edges[i + 1], st.histogram.counts[i]);
      hist_csv << buf;
    }
    rows.push_back({{"seed_power_mW", ps * 1e3}, {"mean_energy_J", st.mean}, {"fractional_std", st.fractional_std}});
  }
  ctx.result.summary["runs"] = sc.runs;
  ctx.result.summary["pump_jitter"] = sc.jitter;
  ctx.emit("stats", "csv", stats_csv.str());
  ctx.emit("energies", "csv", energies_csv.str());
  ctx.emit("histograms", "csv", hist_csv.str());
  ctx.emit_summary();
}

struct EstimateOut {
  EfficiencyEstimate estimate;
  BandPower converted, source;
};

EstimateOut apply_estimator(const SpectrumRecord& on, const SpectrumRecord& off, const FrequencyBand& source_band,
                            const FrequencyBand& converted_band, double duty, ConversionDirection dir) {
  const auto conv = measure_band(on, off, converted_band);
  const auto src = measure_band(on, off, source_band);
  const double ws = source_band.center(), wc = converted_band.center();
  const auto est = dir == ConversionDirection::Up ? eta_up(conv, src, duty, ws, wc) : eta_down(conv, src, duty, ws, wc);
  return {est, conv, src};
}

void estimate_json(nlohmann::ordered_json& j, const EstimateOut& e, double duty) {
  j["duty_cycle"] = duty;
  j["eta_estimate"] = e.estimate.eta;
  j["above_unity"] = e.estimate.above_unity;
  j["converted_band_W"] = {{"with_input", e.converted.with_input}, {"background", e.converted.background}};
  j["source_band_W"] = {{"with_input", e.source.with_input}, {"background", e.source.background}};
}

std::string spectrum_csv(const SpectrumRecord& s) {
  std::ostringstream os;
  write_spectrum_csv(os, s);
  return os.str();
}

void run_two_stage_chain(Context& ctx) {
  const auto& sc = ctx.sc;
  const auto& cfg = ctx.cfg;
  auto& j = ctx.result.summary;

  // Stage 1: seeded FWM in the first fibre.
  const auto pc = stage1_config(ctx);
  const auto pump = stage1_pump(ctx);
  const double seed_wl = cfg.source(sc.seed_source).wavelength;
  spdlog::info("[{}] stage 1: seeded FWM, seed {} mW", sc.name, sc.seed_powers.front() * 1e3);
  const auto spec1 = seeded_fwm_run(pump, sc.seed_powers.front(), seed_wl, pc);
  ctx.emit("stage1_spectrum", "csv", spectrum_csv(spec1.scaled(pump.rep_rate)));
  const auto band = stage1_band(ctx, pump, seed_wl);
  const double idler_energy = integrate_band_power(spec1, band);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < spec1.size(); ++i)
    if (spec1.frequencies[i] >= band.lo && spec1.frequencies[i] <= band.hi &&
        (peak == 0 || spec1.psd[i] > spec1.psd[peak]))
      peak = i;
  const auto idler_freq = OpticalFrequency::from_angular(spec1.frequencies[peak]);
  const double idler_avg = idler_energy * pump.rep_rate;
  j["stage1"] = {{"idler_energy_J", idler_energy},
                 {"idler_avg_power_mW", idler_avg * 1e3},
                 {"idler_peak_nm", nm(idler_freq.wavelength())},
                 {"idler_fwhm_nm", nm(fwhm(spec1, idler_freq.angular()) * idler_freq.wavelength() *
                                      idler_freq.wavelength() / (2.0 * kPi * kSpeedOfLight))}};

  // Stage 2: the idler becomes the long-wavelength pump.
  auto pumps = cfg.pumps(sc.conversion);
  pumps.pump_long.center = idler_freq;
  pumps.pump_long.avg_power = idler_avg * sc.stage_coupling;
  const auto nominal = cfg.setup(sc.conversion);
  const auto& fiber2 = cfg.fiber(sc.conversion.fiber);
  const ConversionSetup chained(pumps.pump_short.center, idler_freq, nominal.input(), sc.conversion.direction,
                                pumps.pump_short.peak_power(), pumps.pump_long.peak_power(), fiber2.spec);
  const double matched = find_matched_input(chained, sc.scan_lo, sc.scan_hi);
  const auto setup = chained.with_input(wavelength_to_omega(matched));
  j["stage2"] = {{"pump_long_avg_power_mW", pumps.pump_long.avg_power * 1e3},
                 {"pump_long_peak_W", pumps.pump_long.peak_power()},
                 {"pump_short_peak_W", pumps.pump_short.peak_power()},
                 {"matched_input_nm", nm(matched)},
                 {"output_nm", nm(setup.output().wavelength())}};

  SweepSpec spec{sc.axis, {}, sc.workers};
  for (double p : sc.powers) spec.values.push_back(p * (sc.axis == SweepAxis::ShortPumpPower ? fiber2.coupling : sc.stage_coupling));
  const double p_in = cfg.source(sc.conversion.input).power;
  auto sweep = sweep_efficiency(setup, pumps, p_in, spec);
  sweep.abscissa = sc.powers;
  std::ostringstream csv;
  write_csv(csv, sweep);
  ctx.emit("sweep", "csv", csv.str());
  const auto op = pulsed_efficiency(setup, pumps, p_in);
  j["stage2"]["eta_internal"] = op.eta;
  j["stage2"]["walk_off_warning"] = op.walk_off_warning;
  j["stage2"]["eta_sweep_max"] = *std::max_element(sweep.eta.begin(), sweep.eta.end());

  // Recorded spectra and the estimator.
  SynthesisSpec syn{setup.input(), setup.output(), p_in, op.eta, pumps.pump_short};
  const auto spectra = synthesize_conversion(syn);
  const auto osa_on = osa_smooth(spectra.with_input, sc.osa_resolution);
  const auto osa_off = osa_smooth(spectra.blocked, sc.osa_resolution);
  ctx.emit("converted_spectrum", "csv", spectrum_csv(osa_on));
  // Peak position is the centre of the half-maximum span: the box-shaped OSA
  // response turns a narrow line into a plateau with no unique argmax.
  const auto& cb = spectra.converted_band;
  double top = 0.0;
  for (std::size_t i = 0; i < osa_on.size(); ++i)
    if (osa_on.frequencies[i] >= cb.lo && osa_on.frequencies[i] <= cb.hi) top = std::max(top, osa_on.psd[i]);
  const bool found = top > 0.0;
  double f_lo = 0.0, f_hi = 0.0;
  for (std::size_t i = 0; i < osa_on.size() && found; ++i) {
    const double f = osa_on.frequencies[i];
    if (f < cb.lo || f > cb.hi || osa_on.psd[i] < 0.5 * top) continue;
    if (f_lo == 0.0) f_lo = f;
    f_hi = f;
  }
  const double peak_nm = found ? nm(4.0 * kPi * kSpeedOfLight / (f_lo + f_hi)) : 0.0;
  const double predicted_nm = nm(nominal.output().wavelength());
  const auto est = apply_estimator(osa_on, osa_off, spectra.source_band, spectra.converted_band, spectra.duty,
                                   sc.conversion.direction);
  j["spectra"] = {{"osa_resolution_nm", nm(sc.osa_resolution)},
                  {"converted_peak_nm", peak_nm},
                  {"predicted_output_nm", predicted_nm},
                  {"peak_offset_nm", peak_nm - predicted_nm}};
  estimate_json(j["spectra"], est, spectra.duty);
  ctx.emit_summary();
  if (!found || std::abs(peak_nm - predicted_nm) > nm(sc.peak_tolerance))
    throw CheckFailed("converted peak at " + fmt_num("%.3f", peak_nm) + " nm is more than " +
                      fmt_num("%.3g", nm(sc.peak_tolerance)) + " nm from the predicted " +
                      fmt_num("%.3f", predicted_nm) + " nm");
}

void run_estimate_efficiency(Context& ctx) {
  const auto& sc = ctx.sc;
  const auto& cfg = ctx.cfg;
  const auto setup = cfg.setup(sc.conversion);
  const auto pumps = cfg.pumps(sc.conversion);
  const double duty = duty_cycle(pumps.pump_short, sc.duty_convention);
  const auto sb = FrequencyBand::around(setup.input().angular(), sc.band_half_width);
  const auto cb = FrequencyBand::around(setup.output().angular(), sc.band_half_width);
  auto& j = ctx.result.summary;
  EstimateOut est;
  if (sc.eta_internal) {
    SynthesisSpec syn{setup.input(), setup.output(), cfg.source(sc.conversion.input).power, *sc.eta_internal,
                      pumps.pump_short, sc.duty_convention, sc.background};
    syn.band_half_width = sc.band_half_width;
    const auto spectra = synthesize_conversion(syn);
    ctx.emit("with_input", "csv", spectrum_csv(spectra.with_input));
    ctx.emit("blocked", "csv", spectrum_csv(spectra.blocked));
    est = apply_estimator(spectra.with_input, spectra.blocked, sb, cb, duty, sc.conversion.direction);
    j["eta_internal"] = *sc.eta_internal;
  } else {
    auto read = [&](const std::string& rel) {
      const auto path = cfg.base_dir / rel;
      std::ifstream f(path);
      if (!f) throw DomainError("cannot open spectrum file '" + path.string() + "'");
      return read_spectrum_csv(f);
    };
    est = apply_estimator(read(sc.spectrum_with_input), read(sc.spectrum_blocked), sb, cb, duty,
                          sc.conversion.direction);
  }
  j["direction"] = sc.conversion.direction == ConversionDirection::Up ? "up" : "down";
  estimate_json(j, est, duty);
  ctx.emit_summary();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ScenarioResult run_one(const Config& cfg, const Scenario& sc, const RunOptions& opts) {
  ScenarioResult r;
  r.name = sc.name;
  r.kind = sc.kind;
  r.seed = opts.seed ? *opts.seed : sc.seed.value_or(cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  Context ctx{cfg, sc, opts.out_dir, r};
  spdlog::info("[{}] {} started", sc.name, to_string(sc.kind));
  try {
    switch (sc.kind) {
      case ScenarioKind::PhaseMatchScan: run_phase_match_scan(ctx); break;
      case ScenarioKind::PowerSweep: run_power_sweep(ctx); break;
      case ScenarioKind::WavelengthSweep: run_wavelength_sweep(ctx); break;
      case ScenarioKind::NoiseEnsemble: run_noise_ensemble(ctx); break;
      case ScenarioKind::TwoStageChain: run_two_stage_chain(ctx); break;
      case ScenarioKind::EstimateEfficiency: run_estimate_efficiency(ctx); break;
    }
    r.ok = true;
  } catch (const CheckFailed& e) {
    r.cause = "check_failed";
    r.message = e.what();
  } catch (const std::exception& e) {
    r.cause = failure_cause(e);
    r.message = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.ok)
    spdlog::info("[{}] done in {:.2f} s", sc.name, r.wall_seconds);
  else
    spdlog::error("[{}] failed ({}): {}", sc.name, r.cause, r.message);
  return r;
}

}  // namespace

RunManifest run(const Config& cfg, const std::string& config_text, const std::string& config_path,
                const RunOptions& opts) {
  std::vector<const Scenario*> selected;
  for (const auto& s : cfg.scenarios)
    if (!opts.scenario || s.name == *opts.scenario) selected.push_back(&s);
  if (selected.empty()) throw ConfigError("no scenario named '" + opts.scenario.value_or("") + "'", 0, 0);
  std::filesystem::create_directories(opts.out_dir);

  RunManifest m;
  m.config_path = config_path;
  m.config_sha256 = sha256_hex(config_text);
  m.seed = opts.seed.value_or(cfg.seed);
  m.started_utc = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  m.scenarios.resize(selected.size());
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(selected.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < selected.size(); ++i) m.scenarios[i] = run_one(cfg, *selected[i], opts);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < selected.size();) m.scenarios[i] = run_one(cfg, *selected[i], opts);
      });
  }
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream f(opts.out_dir / "manifest.json", std::ios::binary);
  f << m.to_json().dump(2) << "\n";
  return m;
}

}  // namespace seqfwm::runner
