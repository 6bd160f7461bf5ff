#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace warden {

/// Non-fatal problem recorded by a stage. `source` is a file path, a stage
/// name or a hypothesis id depending on who produced it.
struct Warning {
  std::string source;
  std::string message;

  bool operator==(const Warning&) const = default;
};

void to_json(nlohmann::json& j, const Warning& w);

/// Model-agnostic token estimate: ceil(chars / 4).
constexpr std::int64_t estimate_tokens(std::size_t chars) noexcept {
  return static_cast<std::int64_t>((chars + 3) / 4);
}

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
/// Lowercase alphanumerics only; "Uniswap-V2" and "uniswap v2" compare equal.
std::string fold_name(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
/// First 16 hex chars of the SHA-256 digest; used for stable ids.
std::string short_hash(std::string_view data);

/// Removes a surrounding ```lang ... ``` fence if the reply has one.
std::string strip_code_fence(std::string_view reply);

/// Best-effort JSON extraction from a model reply: the whole text, a fenced
/// block, or the outermost {...} / [...] span.
std::optional<nlohmann::json> extract_json(std::string_view reply);

/// Reads a yes/no judgement from a reply. JSON replies are searched for the
/// given boolean keys; plain text is matched on its leading word.
std::optional<bool> parse_verdict(std::string_view reply, const std::vector<std::string>& keys);

/// Reads a list of strings from a reply: a JSON array, a JSON object holding
/// an array under one of `keys`, or comma/newline separated text.
std::vector<std::string> parse_string_list(std::string_view reply, const std::vector<std::string>& keys);

std::string read_file(const std::string& path);

/// Writes through a sibling temp file and rename(2) so readers never observe
/// a truncated file.
void write_file_atomically(const std::string& path, std::string_view content);

}  // namespace warden
