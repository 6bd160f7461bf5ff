#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace warden {

/// Sampling, transport and pricing settings for one model endpoint.
struct ModelConfig {
  std::string endpoint_url = "https://openrouter.ai/api/v1";
  std::string model_name = "openai/gpt-oss-120b";
  std::string embedding_model = "text-embedding-3-small";
  std::size_t embedding_dim = 1536;
  std::string api_key_env_var = "WARDEN_API_KEY";
  double temperature = 0.7;
  double top_p = 0.9;
  int max_retries = 3;
  int request_timeout_ms = 120000;
  int retry_backoff_ms = 500;
  int max_in_flight = 4;
  double price_per_1k_input_tokens = 0.0;
  double price_per_1k_output_tokens = 0.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);

struct CompletionRequest {
  std::string stage;
  std::string system_text;
  std::string user_text;
};

struct TokenCount {
  std::int64_t input = 0;
  std::int64_t output = 0;
};

struct BackendReply {
  std::string text;
  std::optional<TokenCount> tokens;  ///< provider-reported counts, when available
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual BackendReply complete(const CompletionRequest& request) = 0;
  virtual std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts) = 0;
};

/// One rule of a scripted scenario. Empty stage or "*" matches any stage; every
/// matcher substring must occur in the system or user text.
struct ScriptedRule {
  std::string stage;
  std::vector<std::string> matchers;
  std::string reply;
  std::optional<TokenCount> tokens;
};

/// Offline backend that answers from an ordered rule list. Pure function of
/// (scenario, request).
class ScriptedBackend : public ModelBackend {
 public:
  static constexpr std::string_view kRefusal = "NO_SCRIPTED_REPLY";

  explicit ScriptedBackend(std::vector<ScriptedRule> rules, bool strict = false, std::size_t embedding_dim = 1536);

  /// Accepts a JSON list of {stage, matcher, reply} or an object with
  /// `rules`, `strict`, `embedding_dim` and `embedding_aliases`.
  static std::unique_ptr<ScriptedBackend> from_json(std::string_view text);

  BackendReply complete(const CompletionRequest& request) override;
  std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts) override;

  /// Texts containing `matcher` embed as if they were `key`.
  void add_embedding_alias(std::string matcher, std::string key);

  std::size_t embedding_dim() const noexcept { return dim_; }

 private:
  std::vector<ScriptedRule> rules_;
  std::vector<std::pair<std::string, std::string>> aliases_;
  bool strict_;
  std::size_t dim_;
};

/// Deterministic unit vector derived from a hash of `text`.
Eigen::VectorXd hashed_embedding(std::string_view text, std::size_t dim);

/// Chat-completion compatible HTTP endpoint.
class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(ModelConfig config);
  BackendReply complete(const CompletionRequest& request) override;
  std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts) override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  ModelConfig config_;
  std::string api_key_;
};

struct UsageRecord {
  std::uint64_t sequence = 0;
  std::string stage;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double wall_ms = 0.0;
  double monetary_cost = 0.0;
};

struct UsageRow {
  std::string stage;
  std::int64_t calls = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double wall_ms = 0.0;
  double monetary_cost = 0.0;
};

struct UsageReport {
  std::vector<UsageRow> rows;  ///< sorted by stage
  UsageRow total;
};

nlohmann::json to_json(const UsageReport& report, bool include_timing = true);

double usage_cost(std::int64_t input_tokens, std::int64_t output_tokens, const ModelConfig& config);

struct Completion {
  std::string text;
  UsageRecord usage;
};

/// Shared entry point for every model call: caps in-flight requests and keeps
/// an append-only usage ledger. Safe for concurrent callers.
class ModelGateway {
 public:
  ModelGateway(std::unique_ptr<ModelBackend> backend, ModelConfig config);

  Completion complete(const CompletionRequest& request);
  std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts);

  UsageReport usage_report() const;
  std::vector<UsageRecord> ledger() const;
  const ModelConfig& config() const noexcept { return config_; }

 private:
  class Slot;

  std::unique_ptr<ModelBackend> backend_;
  ModelConfig config_;
  std::counting_semaphore<1024> in_flight_;
  mutable std::mutex mutex_;
  std::vector<UsageRecord> ledger_;
  std::uint64_t next_sequence_ = 0;
};

}  // namespace warden
