#include "warden/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "warden/error.hpp"
#include "warden/util.hpp"

namespace warden {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(trim(v), &used);
    if (used == trim(v).size()) return d;
  } catch (...) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  Int out{};
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  auto t = to_lower(trim(v));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string part; std::getline(ss, part, ',');) {
    if (auto t = trim(part); !t.empty()) out.push_back(t);
  }
  return out;
}

using Setter = std::function<void(EffectiveConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.endpoint_url", [](auto& c, auto&, auto& v) { c.model.endpoint_url = trim(v); }},
      {"model.model_name", [](auto& c, auto&, auto& v) { c.model.model_name = trim(v); }},
      {"model.embedding_model", [](auto& c, auto&, auto& v) { c.model.embedding_model = trim(v); }},
      {"model.embedding_dim", [](auto& c, auto& k, auto& v) { c.model.embedding_dim = to_int<std::size_t>(k, v); }},
      {"model.api_key_env_var", [](auto& c, auto&, auto& v) { c.model.api_key_env_var = trim(v); }},
      {"model.temperature", [](auto& c, auto& k, auto& v) { c.model.temperature = to_double(k, v); }},
      {"model.top_p", [](auto& c, auto& k, auto& v) { c.model.top_p = to_double(k, v); }},
      {"model.max_retries", [](auto& c, auto& k, auto& v) { c.model.max_retries = to_int<int>(k, v); }},
      {"model.request_timeout_ms", [](auto& c, auto& k, auto& v) { c.model.request_timeout_ms = to_int<int>(k, v); }},
      {"model.retry_backoff_ms", [](auto& c, auto& k, auto& v) { c.model.retry_backoff_ms = to_int<int>(k, v); }},
      {"model.max_in_flight", [](auto& c, auto& k, auto& v) { c.model.max_in_flight = to_int<int>(k, v); }},
      {"model.price_per_1k_input_tokens",
       [](auto& c, auto& k, auto& v) { c.model.price_per_1k_input_tokens = to_double(k, v); }},
      {"model.price_per_1k_output_tokens",
       [](auto& c, auto& k, auto& v) { c.model.price_per_1k_output_tokens = to_double(k, v); }},
      {"profiler.alpha", [](auto& c, auto& k, auto& v) { c.profiler.alpha = to_double(k, v); }},
      {"profiler.beta", [](auto& c, auto& k, auto& v) { c.profiler.beta = to_double(k, v); }},
      {"profiler.token_limit", [](auto& c, auto& k, auto& v) { c.profiler.token_limit = to_int<std::int64_t>(k, v); }},
      {"profiler.seed", [](auto& c, auto& k, auto& v) { c.profiler.seed = to_int<std::uint64_t>(k, v); }},
      {"profiler.louvain_restarts", [](auto& c, auto& k, auto& v) { c.profiler.louvain_restarts = to_int<int>(k, v); }},
      {"profiler.tag_vocabulary", [](auto& c, auto&, auto& v) { c.profiler.tag_vocabulary = to_list(v); }},
      {"profiler.refine", [](auto& c, auto& k, auto& v) { c.profiler.refine = to_bool(k, v); }},
      {"auditor.caller_callee_depth",
       [](auto& c, auto& k, auto& v) { c.auditor.caller_callee_depth = to_int<int>(k, v); }},
      {"auditor.knowledge_k", [](auto& c, auto& k, auto& v) { c.auditor.knowledge_k = to_int<std::size_t>(k, v); }},
      {"auditor.primitives", [](auto& c, auto&, auto& v) { c.auditor.primitives = to_list(v); }},
      {"auditor.enable_math", [](auto& c, auto& k, auto& v) { c.auditor.enable_math = to_bool(k, v); }},
      {"auditor.amount_cap_bits", [](auto& c, auto& k, auto& v) { c.auditor.realism.amount_cap_bits = to_int<int>(k, v); }},
      {"auditor.max_iterations",
       [](auto& c, auto& k, auto& v) { c.auditor.realism.max_iterations = to_int<int>(k, v); }},
      {"auditor.solver_timeout_ms", [](auto& c, auto& k, auto& v) { c.auditor.solver_timeout_ms = to_int<int>(k, v); }},
      {"auditor.max_pairs", [](auto& c, auto& k, auto& v) { c.auditor.max_pairs = to_int<std::size_t>(k, v); }},
      {"auditor.z3_path", [](auto& c, auto&, auto& v) { c.z3_path = trim(v); }},
      {"verifier.epsilon", [](auto& c, auto& k, auto& v) { c.verifier.epsilon = to_double(k, v); }},
      {"verifier.min_samples", [](auto& c, auto& k, auto& v) { c.verifier.min_samples = to_int<int>(k, v); }},
  };
  return table;
}

}  // namespace

void EffectiveConfig::validate() const {
  model.validate();
  profiler.validate();
  if (auditor.caller_callee_depth < 1) throw ConfigError("auditor.caller_callee_depth must be at least 1");
  if (auditor.solver_timeout_ms <= 0) throw ConfigError("auditor.solver_timeout_ms must be positive");
  if (auditor.realism.amount_cap_bits < 1) throw ConfigError("auditor.amount_cap_bits must be positive");
  if (auditor.realism.max_iterations < 1) throw ConfigError("auditor.max_iterations must be positive");
  if (!(verifier.epsilon >= 0.0 && verifier.epsilon <= 2.0)) throw ConfigError("verifier.epsilon must be in [0, 2]");
  if (verifier.min_samples < 1) throw ConfigError("verifier.min_samples must be at least 1");
  if (z3_path.empty()) throw ConfigError("auditor.z3_path must not be empty");
}

nlohmann::json to_json(const EffectiveConfig& c) {
  nlohmann::json profiles = nlohmann::json::array();
  for (const auto& p : c.auditor.profiles) profiles.push_back(std::string(to_string(p.name)));
  return {
      {"model", to_json(c.model)},
      {"profiler",
       {{"alpha", c.profiler.alpha},
        {"beta", c.profiler.beta},
        {"token_limit", c.profiler.token_limit},
        {"seed", c.profiler.seed},
        {"louvain_restarts", c.profiler.louvain_restarts},
        {"tag_vocabulary", c.profiler.tag_vocabulary},
        {"refine", c.profiler.refine}}},
      {"auditor",
       {{"caller_callee_depth", c.auditor.caller_callee_depth},
        {"knowledge_k", c.auditor.knowledge_k},
        {"profiles", profiles},
        {"primitives", c.auditor.primitives},
        {"enable_math", c.auditor.enable_math},
        {"amount_cap_bits", c.auditor.realism.amount_cap_bits},
        {"max_iterations", c.auditor.realism.max_iterations},
        {"solver_timeout_ms", c.auditor.solver_timeout_ms},
        {"max_pairs", c.auditor.max_pairs},
        {"z3_path", c.z3_path}}},
      {"verifier", {{"epsilon", c.verifier.epsilon}, {"min_samples", c.verifier.min_samples}}},
  };
}

std::string config_fingerprint(const EffectiveConfig& c) { return sha256_hex(to_json(c).dump()); }

void apply_setting(EffectiveConfig& c, const ConfigSetting& s) {
  const auto& [key, value] = s;
  if (key == "model.api_key") {
    throw ConfigError("model.api_key: keys are read from the environment variable named by api_key_env_var only");
  }
  auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(c, key, value);
}

std::vector<ConfigSetting> read_ini_settings(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  std::vector<ConfigSetting> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' outside any section");
    for (const auto& [key, value] : body) out.emplace_back(section + "." + key, value.data());
  }
  return out;
}

const std::vector<std::pair<std::string, std::string>>& env_setting_names() {
  static const std::vector<std::pair<std::string, std::string>> names = {
      {"WARDEN_ENDPOINT_URL", "model.endpoint_url"},
      {"WARDEN_MODEL", "model.model_name"},
      {"WARDEN_EMBEDDING_MODEL", "model.embedding_model"},
      {"WARDEN_EMBEDDING_DIM", "model.embedding_dim"},
      {"WARDEN_TEMPERATURE", "model.temperature"},
      {"WARDEN_TOP_P", "model.top_p"},
      {"WARDEN_MAX_RETRIES", "model.max_retries"},
      {"WARDEN_REQUEST_TIMEOUT_MS", "model.request_timeout_ms"},
      {"WARDEN_MAX_IN_FLIGHT", "model.max_in_flight"},
      {"WARDEN_PRICE_INPUT", "model.price_per_1k_input_tokens"},
      {"WARDEN_PRICE_OUTPUT", "model.price_per_1k_output_tokens"},
      {"WARDEN_TOKEN_LIMIT", "profiler.token_limit"},
      {"WARDEN_ALPHA", "profiler.alpha"},
      {"WARDEN_BETA", "profiler.beta"},
      {"WARDEN_SEED", "profiler.seed"},
      {"WARDEN_EPSILON", "verifier.epsilon"},
      {"WARDEN_Z3", "auditor.z3_path"},
  };
  return names;
}

std::vector<ConfigSetting> read_env_settings(const std::function<const char*(const char*)>& getenv) {
  std::vector<ConfigSetting> out;
  for (const auto& [var, key] : env_setting_names()) {
    if (const char* v = getenv(var.c_str()); v && *v) out.emplace_back(key, v);
  }
  return out;
}

EffectiveConfig load_config(const std::optional<std::filesystem::path>& ini, const std::vector<ConfigSetting>& flags,
                            const std::function<const char*(const char*)>& getenv) {
  EffectiveConfig c;
  if (ini) {
    for (const auto& s : read_ini_settings(*ini)) apply_setting(c, s);
  }
  for (const auto& s : read_env_settings(getenv)) apply_setting(c, s);
  for (const auto& s : flags) apply_setting(c, s);
  c.validate();
  return c;
}

}  // namespace warden
