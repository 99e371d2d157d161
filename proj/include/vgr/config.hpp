#pragma once

// Text configuration: `key = value` lines grouped under [section] headers,
// '#' starts a comment. Keys are unique across sections, so every key can
// also be given on the command line as `--key value`.

#include "vgr/training.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vgr {

struct CliConfig {
  FitConfig fit;
  PriorPaths paths;
  std::string out;  // checkpoint written by `fit`
  std::string log;  // training log (CSV); empty: standard error
};

struct ConfigKey {
  std::string section;
  std::string key;
  std::string help;
};

/// All recognised keys in echo order.
const std::vector<ConfigKey>& config_keys();
bool is_config_key(const std::string& key);

/// Throws ContractError for unknown keys or unparsable values.
void set_config_value(CliConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const CliConfig& config, const std::string& key);

/// Applies a key = value document. `origin` names the source in error messages.
void apply_config_text(CliConfig& config, const std::string& text, const std::string& origin = "config");
void load_config_file(CliConfig& config, const std::filesystem::path& path);

/// VGR_SEED overrides the seed; VGR_THREADS bounds the render worker count.
void apply_environment(CliConfig& config);

/// Full effective configuration; parses back to the same values.
std::string config_to_text(const CliConfig& config, bool include_paths = true);

std::string fit_config_to_text(const FitConfig& config);
FitConfig fit_config_from_text(const std::string& text);

}  // namespace vgr
