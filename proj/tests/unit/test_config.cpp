#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "warden/config.hpp"
#include "warden/error.hpp"

using namespace warden;
using namespace testing_support;

namespace {

auto env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const char* name) -> const char* {
    auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  };
}

const char* no_env(const char*) { return nullptr; }

std::filesystem::path ini_file(const std::string& text) {
  auto path = temp_dir("config") / "warden.ini";
  write_file_atomically(path, text);
  return path;
}

}  // namespace

TEST_CASE("layers apply defaults, then ini, then environment, then flags") {
  auto ini = ini_file("[model]\ntemperature = 0.2\ntop_p = 0.5\nmodel_name = from-ini\n[profiler]\nalpha = 0.7\n");
  auto env = env_of({{"WARDEN_TOP_P", "0.6"}, {"WARDEN_MODEL", "from-env"}, {"WARDEN_ALPHA", ""}});

  auto c = load_config(ini, {{"model.model_name", "from-flag"}}, env);
  CHECK(c.model.temperature == 0.2);
  CHECK(c.model.top_p == 0.6);
  CHECK(c.model.model_name == "from-flag");
  CHECK(c.profiler.alpha == 0.7);
  CHECK(c.profiler.beta == 0.5);
  CHECK(c.verifier.epsilon == 0.15);

  auto defaults = load_config(std::nullopt, {}, no_env);
  CHECK(config_fingerprint(defaults) == config_fingerprint(EffectiveConfig{}));
}

TEST_CASE("unknown keys, key material and bad values are rejected") {
  EffectiveConfig c;
  CHECK_THROWS_AS(apply_setting(c, {"model.nope", "1"}), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, {"model.api_key", "sk-123"}), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, {"model.temperature", "warm"}), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, {"profiler.token_limit", "12k"}), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, {"profiler.refine", "maybe"}), ConfigError);
  CHECK_THROWS_AS(load_config(ini_file("orphan = 1\n"), {}, no_env), ConfigError);
  CHECK_THROWS_AS(load_config(std::filesystem::path("/nonexistent/warden.ini"), {}, no_env), ConfigError);
  CHECK_THROWS_AS(load_config(std::nullopt, {}, env_of({{"WARDEN_EPSILON", "3"}})), ConfigError);

  apply_setting(c, {"profiler.refine", " Off "});
  CHECK_FALSE(c.profiler.refine);
  apply_setting(c, {"auditor.primitives", "reentrancy, , oracle "});
  CHECK(c.auditor.primitives == std::vector<std::string>{"reentrancy", "oracle"});
}

TEST_CASE("the fingerprint changes exactly when a value changes") {
  const std::vector<ConfigSetting> alternates = {
      {"model.endpoint_url", "http://localhost:1/v1"},
      {"model.model_name", "other"},
      {"model.embedding_model", "other-embed"},
      {"model.embedding_dim", "64"},
      {"model.api_key_env_var", "OTHER_KEY"},
      {"model.temperature", "0.1"},
      {"model.top_p", "0.3"},
      {"model.max_retries", "1"},
      {"model.request_timeout_ms", "500"},
      {"model.retry_backoff_ms", "7"},
      {"model.max_in_flight", "9"},
      {"model.price_per_1k_input_tokens", "0.25"},
      {"model.price_per_1k_output_tokens", "0.75"},
      {"profiler.alpha", "0.9"},
      {"profiler.beta", "0.1"},
      {"profiler.token_limit", "8000"},
      {"profiler.seed", "42"},
      {"profiler.louvain_restarts", "3"},
      {"profiler.tag_vocabulary", "lending,oracle"},
      {"profiler.refine", "false"},
      {"auditor.caller_callee_depth", "3"},
      {"auditor.knowledge_k", "5"},
      {"auditor.primitives", "flashloan"},
      {"auditor.enable_math", "false"},
      {"auditor.amount_cap_bits", "64"},
      {"auditor.max_iterations", "10"},
      {"auditor.solver_timeout_ms", "1234"},
      {"auditor.max_pairs", "11"},
      {"auditor.z3_path", "/opt/z3"},
      {"verifier.epsilon", "0.3"},
      {"verifier.min_samples", "2"},
  };
  const EffectiveConfig base;
  const auto base_print = config_fingerprint(base);
  std::set<std::string> prints{base_print};
  for (const auto& s : alternates) {
    CAPTURE(s.first);
    EffectiveConfig c = base;
    apply_setting(c, s);
    auto changed = config_fingerprint(c);
    CHECK(changed != base_print);
    prints.insert(changed);
    apply_setting(c, s);
    CHECK(config_fingerprint(c) == changed);
  }
  CHECK(prints.size() == alternates.size() + 1);
}

TEST_CASE("effective configuration never carries the key") {
  auto c = load_config(std::nullopt, {}, env_of({{"WARDEN_API_KEY", "sk-very-secret"}}));
  auto text = to_json(c).dump();
  CHECK(text.find("sk-very-secret") == std::string::npos);
  CHECK(text.find("WARDEN_API_KEY") != std::string::npos);
}

TEST_CASE("environment names map onto setting keys") {
  EffectiveConfig c;
  std::set<std::string> vars;
  for (const auto& [var, key] : env_setting_names()) {
    CHECK(var.rfind("WARDEN_", 0) == 0);
    CHECK(vars.insert(var).second);
    CHECK_NOTHROW(apply_setting(c, {key, "1"}));
  }
  auto settings = read_env_settings(env_of({{"WARDEN_Z3", "/usr/bin/z3"}, {"WARDEN_SEED", "9"}}));
  CHECK(settings == std::vector<ConfigSetting>{{"profiler.seed", "9"}, {"auditor.z3_path", "/usr/bin/z3"}});
}

TEST_CASE("validation bounds") {
  auto bad = [](const ConfigSetting& s) {
    EffectiveConfig c;
    apply_setting(c, s);
    return c;
  };
  CHECK_THROWS_AS(bad({"auditor.caller_callee_depth", "0"}).validate(), ConfigError);
  CHECK_THROWS_AS(bad({"auditor.solver_timeout_ms", "0"}).validate(), ConfigError);
  CHECK_THROWS_AS(bad({"verifier.min_samples", "0"}).validate(), ConfigError);
  CHECK_THROWS_AS(bad({"auditor.z3_path", "  "}).validate(), ConfigError);
  CHECK_THROWS_AS(bad({"profiler.alpha", "-0.5"}).validate(), ConfigError);
  CHECK_THROWS_AS(bad({"model.max_in_flight", "0"}).validate(), ConfigError);
  CHECK_NOTHROW(EffectiveConfig{}.validate());
}
