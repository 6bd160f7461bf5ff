#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace warden {

enum class Severity { Critical, High, Medium, Low };

std::string_view to_string(Severity s);
std::optional<Severity> severity_from(std::string_view s);
/// The more severe of the two.
Severity max_severity(Severity a, Severity b);

struct EntryPoint {
  std::string function;
  int line = 0;

  bool operator==(const EntryPoint&) const = default;
};

struct VulnerabilityHypothesis {
  std::string id;
  EntryPoint entry_point;
  std::vector<std::string> constraints;
  std::vector<std::string> reasoning_path;
  std::string category;
  Severity severity = Severity::Medium;
  std::string origin;  ///< base, adversarial:<profile>, math or chained
  std::vector<std::vector<std::string>> alternative_paths;
  double confidence = 0.5;
  std::vector<std::string> parents;
  int batch_id = -1;

  bool operator==(const VulnerabilityHypothesis&) const = default;
};

/// Content hash over everything except `id`, `alternative_paths` and
/// `confidence`, prefixed with "H-".
std::string content_id(const VulnerabilityHypothesis& h);

/// Sets content ids and suffixes repeats ("-2", "-3", ...) so ids are unique.
void assign_unique_ids(std::vector<VulnerabilityHypothesis>& hs);

/// Text used for embedding: category, entry point and reasoning path.
std::string canonical_text(const VulnerabilityHypothesis& h);

nlohmann::json to_json(const VulnerabilityHypothesis& h);

}  // namespace warden
