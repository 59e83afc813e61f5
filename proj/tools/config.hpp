#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "tcmpc/harness.hpp"

namespace tcmpc::app {

/// Malformed or unknown configuration; the message starts with the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial state of the closed loop at the start of the open-loop comparison.
StateVector preset_initial_state();

/// Everything one run needs. Defaults reproduce the reference parameter
/// table at desk scale.
struct RunConfig {
  CampaignConfig campaign;
  /// "sample", "docked", "preset" or "custom" (explicit 13 values).
  std::string initial_state = "sample";
  /// "desk" or "full"; selects the default trial count and budget grid.
  std::string scale = "desk";

  RunConfig();
};

/// Reads a flat key/value YAML file. A file with a top-level `config`
/// mapping (a run manifest) is read from that mapping.
RunConfig load_config(const std::filesystem::path& path);
/// Same as load_config on in-memory text.
RunConfig parse_config(const std::string& text);

/// Resolved configuration as a flat JSON object using the file keys.
std::string config_to_json(const RunConfig& cfg, int indent = 2);

/// Applies `value` to `key` using the file syntax (used by the CLI flags).
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses a budget list such as "1,2,4,optimal".
std::vector<IterationBudget> parse_budget_list(const std::string& text);

}  // namespace tcmpc::app
