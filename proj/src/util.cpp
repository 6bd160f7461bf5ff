#include "warden/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include "warden/error.hpp"

namespace warden {

void to_json(nlohmann::json& j, const Warning& w) {
  j = nlohmann::json{{"source", w.source}, {"message", w.message}};
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool icontains(std::string_view haystack, std::string_view needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::string fold_name(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string short_hash(std::string_view data) { return sha256_hex(data).substr(0, 16); }

std::string strip_code_fence(std::string_view reply) {
  std::string text = trim(reply);
  auto open = text.find("```");
  if (open == std::string::npos) return text;
  auto body_start = text.find('\n', open);
  if (body_start == std::string::npos) return text;
  auto close = text.find("```", body_start);
  if (close == std::string::npos) return trim(text.substr(body_start + 1));
  return trim(text.substr(body_start + 1, close - body_start - 1));
}

namespace {

std::optional<nlohmann::json> try_parse(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::optional<nlohmann::json> outer_span(const std::string& text, char open, char close) {
  auto b = text.find(open);
  auto e = text.rfind(close);
  if (b == std::string::npos || e == std::string::npos || e <= b) return std::nullopt;
  return try_parse(std::string_view(text).substr(b, e - b + 1));
}

}  // namespace

std::optional<nlohmann::json> extract_json(std::string_view reply) {
  std::string text = trim(reply);
  if (auto j = try_parse(text)) return j;
  std::string fenced = strip_code_fence(text);
  if (auto j = try_parse(fenced)) return j;
  auto obj = outer_span(fenced, '{', '}');
  auto arr = outer_span(fenced, '[', ']');
  if (obj && arr) {
    // Prefer whichever span starts first.
    return fenced.find('{') < fenced.find('[') ? obj : arr;
  }
  return obj ? obj : arr;
}

std::optional<bool> parse_verdict(std::string_view reply, const std::vector<std::string>& keys) {
  if (auto j = extract_json(reply); j && j->is_object()) {
    for (const auto& key : keys) {
      if (j->contains(key)) {
        const auto& v = (*j)[key];
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_string()) {
          auto s = to_lower(v.get<std::string>());
          if (s == "yes" || s == "true") return true;
          if (s == "no" || s == "false") return false;
        }
      }
    }
  } else if (j && j->is_boolean()) {
    return j->get<bool>();
  }
  std::string lower = to_lower(trim(reply));
  std::size_t i = 0;
  while (i < lower.size() && !std::isalpha(static_cast<unsigned char>(lower[i]))) ++i;
  std::size_t k = i;
  while (k < lower.size() && std::isalpha(static_cast<unsigned char>(lower[k]))) ++k;
  std::string word = lower.substr(i, k - i);
  if (word == "yes" || word == "true") return true;
  if (word == "no" || word == "false") return false;
  return std::nullopt;
}

std::vector<std::string> parse_string_list(std::string_view reply, const std::vector<std::string>& keys) {
  std::vector<std::string> out;
  auto take_array = [&](const nlohmann::json& arr) {
    for (const auto& item : arr) {
      if (item.is_string()) out.push_back(trim(item.get<std::string>()));
    }
  };
  if (auto j = extract_json(reply)) {
    if (j->is_array()) {
      take_array(*j);
      return out;
    }
    if (j->is_object()) {
      for (const auto& key : keys) {
        if (j->contains(key) && (*j)[key].is_array()) {
          take_array((*j)[key]);
          return out;
        }
      }
      return out;
    }
  }
  std::string item;
  for (char c : reply) {
    if (c == ',' || c == '\n') {
      if (auto t = trim(item); !t.empty()) out.push_back(t);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (auto t = trim(item); !t.empty()) out.push_back(t);
  for (auto& s : out) {
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '"')) s.erase(0, 1);
    while (!s.empty() && s.back() == '"') s.pop_back();
    s = trim(s);
  }
  std::erase_if(out, [](const std::string& s) { return s.empty(); });
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomically(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InputError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot replace " + path);
  }
}

}  // namespace warden
