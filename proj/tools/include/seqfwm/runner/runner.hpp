#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqfwm/runner/config.hpp"

namespace seqfwm::runner {

inline constexpr int kManifestSchemaVersion = 1;
const char* toolkit_version();

struct OutputFile {
  std::string role;
  std::filesystem::path path;
  std::string sha256;
};

struct ScenarioResult {
  std::string name;
  ScenarioKind kind;
  bool ok = false;
  std::string cause;  // machine-readable failure class, empty on success
  std::string message;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<OutputFile> outputs;
  nlohmann::ordered_json summary;
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::string> scenario;  // run only this one
  std::optional<std::uint64_t> seed;    // overrides every scenario seed
  unsigned jobs = 1;                    // scenarios run concurrently
};

struct RunManifest {
  std::string config_path;
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::string started_utc;
  double wall_seconds = 0.0;
  std::vector<ScenarioResult> scenarios;

  bool all_ok() const;
  nlohmann::ordered_json to_json() const;
};

/// Run the selected scenarios and write their outputs plus manifest.json into
/// opts.out_dir. Scenario failures are recorded, not thrown; an unknown
/// scenario name throws ConfigError.
RunManifest run(const Config& cfg, const std::string& config_text, const std::string& config_path,
                const RunOptions& opts);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Map an exception to the machine-readable cause recorded in the manifest.
std::string failure_cause(const std::exception& e);

}  // namespace seqfwm::runner
