#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "seqfwm/runner/config.hpp"
#include "seqfwm/runner/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw seqfwm::runner::ConfigError("cannot open config '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascaded four-wave-mixing frequency-conversion scenarios"};
  app.set_version_flag("--version", seqfwm::runner::toolkit_version());
  app.require_subcommand(1);

  int verbose = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "More log output (repeat for debug)");
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  std::string config_path;
  std::string scenario;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  auto* run = app.add_subcommand("run", "Run scenarios and write outputs plus a manifest");
  run->add_option("--config", config_path, "YAML configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "Run only this scenario");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  auto* seed_opt = run->add_option("--seed", seed, "Override every scenario seed");
  run->add_option("-j,--jobs", jobs, "Scenarios run concurrently")->check(CLI::Range(1u, 256u))->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Parse and check a configuration without running it");
  validate->add_option("--config", config_path, "YAML configuration")->required()->check(CLI::ExistingFile);

  run->fallthrough();
  validate->fallthrough();

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("seqfwm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(quiet ? spdlog::level::err
                          : verbose >= 2 ? spdlog::level::debug
                          : verbose == 1 ? spdlog::level::info
                                         : spdlog::level::warn);

  using namespace seqfwm::runner;
  try {
    const std::string text = slurp(config_path);
    const Config cfg = parse_config(text, std::filesystem::path(config_path).parent_path());
    if (*validate) {
      std::cout << "ok: " << cfg.fibers.size() << " fibers, " << cfg.sources.size() << " sources, "
                << cfg.scenarios.size() << " scenarios\n";
      return 0;
    }
    RunOptions opts;
    opts.out_dir = out_dir;
    if (!scenario.empty()) opts.scenario = scenario;
    if (*seed_opt) opts.seed = seed;
    opts.jobs = jobs;
    const auto manifest = seqfwm::runner::run(cfg, text, config_path, opts);
    for (const auto& s : manifest.scenarios)
      std::cout << (s.ok ? "ok     " : "FAILED ") << s.name << " (" << to_string(s.kind) << ")"
                << (s.ok ? "" : " [" + s.cause + "] " + s.message) << "\n";
    std::cout << "manifest: " << (opts.out_dir / "manifest.json").string() << "\n";
    return manifest.all_ok() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [" << failure_cause(e) << "]: " << e.what() << "\n";
    return 2;
  }
}
