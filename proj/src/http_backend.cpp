// Eigen must precede httplib: <resolv.h> defines a `_res` macro.
#include "warden/gateway.hpp"

#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "warden/error.hpp"

namespace warden {

namespace {

struct Endpoint {
  std::string origin;
  std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string base = url.substr(slash);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {url.substr(0, slash), base};
}

}  // namespace

HttpBackend::HttpBackend(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  if (const char* key = std::getenv(config_.api_key_env_var.c_str())) api_key_ = key;
}

nlohmann::json HttpBackend::post(const std::string& path, const nlohmann::json& body) {
  auto ep = split_endpoint(config_.endpoint_url);
  httplib::Client client(ep.origin);
  auto timeout = std::chrono::milliseconds(config_.request_timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string payload = body.dump();
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms) * (1 << (attempt - 1)));
    }
    auto res = client.Post(ep.base_path + path, headers, payload, "application/json");
    if (!res) {
      if (res.error() == httplib::Error::Connection || res.error() == httplib::Error::ConnectionTimeout) {
        throw GatewayUnreachable("cannot reach " + config_.endpoint_url + ": " + httplib::to_string(res.error()));
      }
      last_status = 0;
      continue;
    }
    last_status = res->status;
    if (res->status == 429 || res->status >= 500) continue;
    if (res->status != 200) {
      throw ModelError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw ModelError("endpoint returned a non-JSON body");
    return j;
  }
  if (last_status == 429) throw RateLimited("rate limited after " + std::to_string(config_.max_retries) + " retries");
  throw ModelError("request failed after retries (last status " + std::to_string(last_status) + ")");
}

BackendReply HttpBackend::complete(const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  nlohmann::json body{{"model", config_.model_name},
                      {"messages", messages},
                      {"temperature", config_.temperature},
                      {"top_p", config_.top_p}};
  auto j = post("/chat/completions", body);
  BackendReply reply;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    reply.text = content.is_string() ? content.get<std::string>() : "";
  } catch (const nlohmann::json::exception&) {
    throw ModelError("completion response has no choices[0].message.content");
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    reply.tokens = TokenCount{u.value("prompt_tokens", std::int64_t{0}), u.value("completion_tokens", std::int64_t{0})};
  }
  return reply;
}

std::vector<Eigen::VectorXd> HttpBackend::embed(const std::vector<std::string>& texts) {
  auto j = post("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});
  std::vector<Eigen::VectorXd> out(texts.size());
  try {
    for (const auto& item : j.at("data")) {
      auto idx = item.value("index", std::size_t{0});
      if (idx >= out.size()) throw EmbeddingError("embedding index out of range");
      auto values = item.at("embedding").get<std::vector<double>>();
      out[idx] = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
  } catch (const nlohmann::json::exception&) {
    throw EmbeddingError("embedding response is malformed");
  }
  for (const auto& v : out) {
    if (v.size() == 0) throw EmbeddingError("embedding response is missing entries");
  }
  return out;
}

}  // namespace warden
