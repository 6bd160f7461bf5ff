#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "warden/auditor.hpp"
#include "warden/gateway.hpp"
#include "warden/profiler.hpp"
#include "warden/verifier.hpp"

namespace warden {

struct EffectiveConfig {
  ModelConfig model;
  ProfilerConfig profiler;
  AuditorConfig auditor;
  VerifierConfig verifier;
  std::string z3_path = "z3";

  void validate() const;
};

/// Every effective value. The API key itself is never part of it.
nlohmann::json to_json(const EffectiveConfig& c);

/// SHA-256 of the serialized effective configuration.
std::string config_fingerprint(const EffectiveConfig& c);

/// `section.key` = value, as read from any configuration layer.
using ConfigSetting = std::pair<std::string, std::string>;

/// Applies one setting. Throws ConfigError for unknown keys or bad values.
void apply_setting(EffectiveConfig& c, const ConfigSetting& s);

/// Settings from an INI file with [model], [profiler], [auditor] and
/// [verifier] sections.
std::vector<ConfigSetting> read_ini_settings(const std::filesystem::path& path);

/// Environment variables (WARDEN_MODEL, WARDEN_TEMPERATURE, ...) mapped onto
/// setting names.
std::vector<ConfigSetting> read_env_settings(const std::function<const char*(const char*)>& getenv);

/// The environment variable names recognised by read_env_settings.
const std::vector<std::pair<std::string, std::string>>& env_setting_names();

/// Defaults, then the INI file, then the environment, then `flags`.
EffectiveConfig load_config(const std::optional<std::filesystem::path>& ini, const std::vector<ConfigSetting>& flags,
                            const std::function<const char*(const char*)>& getenv);

}  // namespace warden
