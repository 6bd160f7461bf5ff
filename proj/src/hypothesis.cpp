#include "warden/hypothesis.hpp"

#include <map>

#include "warden/util.hpp"

namespace warden {

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Critical: return "Critical";
    case Severity::High: return "High";
    case Severity::Medium: return "Medium";
    case Severity::Low: return "Low";
  }
  return "Medium";
}

std::optional<Severity> severity_from(std::string_view s) {
  auto l = to_lower(trim(s));
  if (l == "critical") return Severity::Critical;
  if (l == "high") return Severity::High;
  if (l == "medium") return Severity::Medium;
  if (l == "low") return Severity::Low;
  return std::nullopt;
}

Severity max_severity(Severity a, Severity b) { return static_cast<int>(a) <= static_cast<int>(b) ? a : b; }

std::string content_id(const VulnerabilityHypothesis& h) {
  nlohmann::json j{{"entry", {h.entry_point.function, h.entry_point.line}},
                   {"constraints", h.constraints},
                   {"path", h.reasoning_path},
                   {"category", h.category},
                   {"severity", to_string(h.severity)},
                   {"origin", h.origin},
                   {"parents", h.parents},
                   {"batch", h.batch_id}};
  return "H-" + short_hash(j.dump());
}

void assign_unique_ids(std::vector<VulnerabilityHypothesis>& hs) {
  std::map<std::string, int> seen;
  for (auto& h : hs) {
    std::string base = content_id(h);
    int n = ++seen[base];
    h.id = n == 1 ? base : base + "-" + std::to_string(n);
  }
}

std::string canonical_text(const VulnerabilityHypothesis& h) {
  std::string out = h.category + "\n" + h.entry_point.function + ":" + std::to_string(h.entry_point.line) + "\n";
  for (const auto& step : h.reasoning_path) out += step + "\n";
  return out;
}

nlohmann::json to_json(const VulnerabilityHypothesis& h) {
  return {{"id", h.id},
          {"entry_point", {{"function", h.entry_point.function}, {"line", h.entry_point.line}}},
          {"constraints", h.constraints},
          {"reasoning_path", h.reasoning_path},
          {"category", h.category},
          {"severity", to_string(h.severity)},
          {"origin", h.origin},
          {"alternative_paths", h.alternative_paths},
          {"confidence", h.confidence},
          {"parents", h.parents},
          {"batch_id", h.batch_id}};
}

}  // namespace warden
