#include "warden/gateway.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <random>

#include "warden/error.hpp"
#include "warden/util.hpp"

namespace warden {

void ModelConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError("temperature must lie in [0, 2]");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (request_timeout_ms <= 0) throw ConfigError("request_timeout_ms must be positive");
  if (max_in_flight < 1 || max_in_flight > 1024) throw ConfigError("max_in_flight must lie in [1, 1024]");
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  if (price_per_1k_input_tokens < 0 || price_per_1k_output_tokens < 0) throw ConfigError("prices must be non-negative");
}

nlohmann::json to_json(const ModelConfig& c) {
  // The key itself is never serialized, only the variable that holds it.
  return {{"endpoint_url", c.endpoint_url},
          {"model_name", c.model_name},
          {"embedding_model", c.embedding_model},
          {"embedding_dim", c.embedding_dim},
          {"api_key_env_var", c.api_key_env_var},
          {"temperature", c.temperature},
          {"top_p", c.top_p},
          {"max_retries", c.max_retries},
          {"request_timeout_ms", c.request_timeout_ms},
          {"retry_backoff_ms", c.retry_backoff_ms},
          {"max_in_flight", c.max_in_flight},
          {"price_per_1k_input_tokens", c.price_per_1k_input_tokens},
          {"price_per_1k_output_tokens", c.price_per_1k_output_tokens}};
}

Eigen::VectorXd hashed_embedding(std::string_view text, std::size_t dim) {
  std::string digest = sha256_hex(text);
  std::seed_seq seq(digest.begin(), digest.end());
  std::mt19937_64 rng(seq);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  }
  return v.normalized();
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules, bool strict, std::size_t embedding_dim)
    : rules_(std::move(rules)), strict_(strict), dim_(embedding_dim) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError("scenario pack is not valid JSON");
  const nlohmann::json* rules = &j;
  bool strict = false;
  std::size_t dim = 1536;
  if (j.is_object()) {
    if (!j.contains("rules") || !j["rules"].is_array()) throw InputError("scenario pack object needs a 'rules' array");
    rules = &j["rules"];
    strict = j.value("strict", false);
    dim = j.value("embedding_dim", std::size_t{1536});
  } else if (!j.is_array()) {
    throw InputError("scenario pack must be a JSON list or object");
  }
  std::vector<ScriptedRule> parsed;
  for (const auto& r : *rules) {
    if (!r.is_object() || !r.contains("reply")) throw InputError("scenario rule without 'reply'");
    ScriptedRule rule;
    rule.stage = r.value("stage", "");
    if (r.contains("matcher")) {
      const auto& m = r["matcher"];
      if (m.is_string()) rule.matchers.push_back(m.get<std::string>());
      else if (m.is_array()) rule.matchers = m.get<std::vector<std::string>>();
      else throw InputError("scenario matcher must be a string or list of strings");
    }
    const auto& reply = r["reply"];
    rule.reply = reply.is_string() ? reply.get<std::string>() : reply.dump();
    if (r.contains("input_tokens") || r.contains("output_tokens")) {
      rule.tokens = TokenCount{r.value("input_tokens", std::int64_t{0}), r.value("output_tokens", std::int64_t{0})};
    }
    parsed.push_back(std::move(rule));
  }
  auto backend = std::make_unique<ScriptedBackend>(std::move(parsed), strict, dim);
  if (j.is_object() && j.contains("embedding_aliases")) {
    for (const auto& a : j["embedding_aliases"]) {
      backend->add_embedding_alias(a.at("matcher").get<std::string>(), a.at("key").get<std::string>());
    }
  }
  return backend;
}

void ScriptedBackend::add_embedding_alias(std::string matcher, std::string key) {
  aliases_.emplace_back(std::move(matcher), std::move(key));
}

BackendReply ScriptedBackend::complete(const CompletionRequest& request) {
  for (const auto& rule : rules_) {
    if (!rule.stage.empty() && rule.stage != "*" && rule.stage != request.stage) continue;
    bool all = std::all_of(rule.matchers.begin(), rule.matchers.end(), [&](const std::string& m) {
      return request.system_text.find(m) != std::string::npos || request.user_text.find(m) != std::string::npos;
    });
    if (all) return {rule.reply, rule.tokens};
  }
  if (strict_) throw ScenarioMiss(request.stage, "no scripted rule matches stage '" + request.stage + "'");
  return {std::string(kRefusal), std::nullopt};
}

std::vector<Eigen::VectorXd> ScriptedBackend::embed(const std::vector<std::string>& texts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::string_view key = t;
    for (const auto& [matcher, alias] : aliases_) {
      if (t.find(matcher) != std::string::npos) {
        key = alias;
        break;
      }
    }
    out.push_back(hashed_embedding(key, dim_));
  }
  return out;
}

double usage_cost(std::int64_t input_tokens, std::int64_t output_tokens, const ModelConfig& config) {
  return static_cast<double>(input_tokens) / 1000.0 * config.price_per_1k_input_tokens +
         static_cast<double>(output_tokens) / 1000.0 * config.price_per_1k_output_tokens;
}

class ModelGateway::Slot {
 public:
  explicit Slot(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~Slot() { s_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

ModelGateway::ModelGateway(std::unique_ptr<ModelBackend> backend, ModelConfig config)
    : backend_(std::move(backend)), config_(std::move(config)), in_flight_(config_.max_in_flight) {
  config_.validate();
  if (!backend_) throw ConfigError("model gateway needs a backend");
}

Completion ModelGateway::complete(const CompletionRequest& request) {
  BackendReply reply;
  auto start = std::chrono::steady_clock::now();
  {
    Slot slot(in_flight_);
    reply = backend_->complete(request);
  }
  auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  TokenCount tokens = reply.tokens.value_or(
      TokenCount{estimate_tokens(request.system_text.size() + request.user_text.size()), estimate_tokens(reply.text.size())});
  UsageRecord rec;
  rec.stage = request.stage;
  rec.input_tokens = tokens.input;
  rec.output_tokens = tokens.output;
  rec.wall_ms = elapsed;
  rec.monetary_cost = usage_cost(tokens.input, tokens.output, config_);
  {
    std::lock_guard lock(mutex_);
    rec.sequence = next_sequence_++;
    ledger_.push_back(rec);
  }
  return {std::move(reply.text), rec};
}

std::vector<Eigen::VectorXd> ModelGateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw EmbeddingError("embed called with no texts");
  std::vector<Eigen::VectorXd> out;
  auto start = std::chrono::steady_clock::now();
  {
    Slot slot(in_flight_);
    out = backend_->embed(texts);
  }
  auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (out.size() != texts.size()) throw EmbeddingError("backend returned a different number of embeddings");
  for (const auto& v : out) {
    if (v.size() != out.front().size() || v.size() == 0) throw EmbeddingError("embeddings have inconsistent dimension");
  }
  std::size_t chars = 0;
  for (const auto& t : texts) chars += t.size();
  UsageRecord rec;
  rec.stage = "embed";
  rec.input_tokens = estimate_tokens(chars);
  rec.wall_ms = elapsed;
  rec.monetary_cost = usage_cost(rec.input_tokens, 0, config_);
  std::lock_guard lock(mutex_);
  rec.sequence = next_sequence_++;
  ledger_.push_back(rec);
  return out;
}

std::vector<UsageRecord> ModelGateway::ledger() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

UsageReport ModelGateway::usage_report() const {
  std::map<std::string, UsageRow> rows;
  UsageReport report;
  report.total.stage = "total";
  for (const auto& r : ledger()) {
    auto& row = rows[r.stage];
    row.stage = r.stage;
    for (auto* x : {&row, &report.total}) {
      ++x->calls;
      x->input_tokens += r.input_tokens;
      x->output_tokens += r.output_tokens;
      x->wall_ms += r.wall_ms;
      x->monetary_cost += r.monetary_cost;
    }
  }
  for (auto& [_, row] : rows) report.rows.push_back(row);
  return report;
}

nlohmann::json to_json(const UsageReport& report, bool include_timing) {
  auto row_json = [&](const UsageRow& r) {
    nlohmann::json j{{"stage", r.stage},
                     {"calls", r.calls},
                     {"input_tokens", r.input_tokens},
                     {"output_tokens", r.output_tokens},
                     {"monetary_cost", r.monetary_cost}};
    if (include_timing) j["wall_ms"] = r.wall_ms;
    return j;
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  return {{"rows", rows}, {"total", row_json(report.total)}};
}

}  // namespace warden
