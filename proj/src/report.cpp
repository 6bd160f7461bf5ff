#include "warden/report.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

namespace warden {

void classify(AuditReport& report, const std::vector<VulnerabilityHypothesis>& v_final) {
  report.findings = v_final;
  report.filtered.clear();
  report.merged.clear();
  std::map<std::string, const VulnerabilityHypothesis*> by_id;
  for (const auto& h : report.v_raw) by_id.emplace(h.id, &h);
  for (const auto& v : report.verdicts) {
    if (v.verdict == "dropped") {
      if (auto it = by_id.find(v.hypothesis_id); it != by_id.end()) report.filtered.push_back({*it->second, v});
    } else if (v.verdict.starts_with("merged_into:")) {
      report.merged.push_back({v.hypothesis_id, v.verdict.substr(std::string("merged_into:").size())});
    }
  }
}

bool accounting_holds(const AuditReport& report) {
  std::multiset<std::string> accounted;
  for (const auto& h : report.findings) accounted.insert(h.id);
  for (const auto& f : report.filtered) accounted.insert(f.hypothesis.id);
  for (const auto& m : report.merged) accounted.insert(m.hypothesis_id);
  std::multiset<std::string> raw;
  for (const auto& h : report.v_raw) raw.insert(h.id);
  return raw.size() == report.findings.size() + report.filtered.size() + report.merged.size() && raw == accounted;
}

nlohmann::json to_json(const AuditReport& report, bool include_timing) {
  nlohmann::json batches = nlohmann::json::array();
  for (const auto& b : report.batches) {
    batches.push_back({{"id", b.id},
                       {"contracts", b.contracts},
                       {"tags", b.tags},
                       {"estimated_tokens", b.estimated_tokens},
                       {"pruned", b.pruned_contracts},
                       {"truncated_functions", b.truncated_bodies.size()}});
  }
  std::map<std::string, std::vector<const VerdictRecord*>> trail;
  for (const auto& v : report.verdicts) trail[v.hypothesis_id].push_back(&v);
  auto trail_of = [&](const std::string& id) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto* v : trail[id]) t.push_back(to_json(*v));
    return t;
  };

  nlohmann::json findings = nlohmann::json::array();
  for (const auto& h : report.findings) {
    auto j = to_json(h);
    j["verdict_trail"] = trail_of(h.id);
    findings.push_back(std::move(j));
  }
  nlohmann::json filtered = nlohmann::json::array();
  for (const auto& f : report.filtered) {
    auto j = to_json(f.hypothesis);
    j["dropped_at"] = to_string(f.verdict.stage);
    j["rationale"] = f.verdict.rationale;
    filtered.push_back(std::move(j));
  }
  nlohmann::json merged = nlohmann::json::array();
  for (const auto& m : report.merged) merged.push_back({{"hypothesis_id", m.hypothesis_id}, {"merged_into", m.merged_into}});
  nlohmann::json raw_ids = nlohmann::json::array();
  for (const auto& h : report.v_raw) raw_ids.push_back(h.id);
  nlohmann::json smt = nlohmann::json::array();
  for (const auto& p : report.smt_problems) smt.push_back(to_json(p));
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) verdicts.push_back(to_json(v));

  nlohmann::json j = {
      {"project_name", report.project_name},
      {"tool_version", report.tool_version},
      {"config_fingerprint", report.config_fingerprint},
      {"verifier", report.verifier_enabled ? "enabled" : "skipped"},
      {"batches_summary", batches},
      {"raw_hypothesis_ids", raw_ids},
      {"findings", findings},
      {"filtered", filtered},
      {"merged", merged},
      {"verdicts", verdicts},
      {"accounting",
       {{"raw", report.v_raw.size()},
        {"findings", report.findings.size()},
        {"dropped", report.filtered.size()},
        {"merged", report.merged.size()},
        {"balanced", accounting_holds(report)}}},
      {"smt_problems", smt},
      {"usage", to_json(report.usage, include_timing)},
      {"warnings", report.warnings},
  };
  if (include_timing) j["timing_ms"] = report.timing_ms;
  return j;
}

namespace {

void render_finding(std::ostringstream& md, const VulnerabilityHypothesis& h) {
  md << "### " << h.category << " in `" << h.entry_point.function << "`\n\n"
     << "- id: `" << h.id << "`\n"
     << "- entry point: `" << h.entry_point.function << "` line " << h.entry_point.line << "\n"
     << "- origin: " << h.origin << "\n"
     << "- confidence: " << h.confidence << "\n";
  if (!h.parents.empty()) md << "- chained from: " << join(h.parents, ", ") << "\n";
  md << "\n**Preconditions**\n\n";
  if (h.constraints.empty()) md << "- none\n";
  for (const auto& c : h.constraints) md << "- " << c << "\n";
  md << "\n**Attack path**\n\n";
  for (std::size_t i = 0; i < h.reasoning_path.size(); ++i) md << (i + 1) << ". " << h.reasoning_path[i] << "\n";
  if (!h.alternative_paths.empty()) {
    md << "\n**Alternative trigger paths**\n\n";
    for (const auto& p : h.alternative_paths) md << "- " << join(p, " -> ") << "\n";
  }
  md << "\n";
}

}  // namespace

std::string render_markdown(const AuditReport& report) {
  std::ostringstream md;
  md << "# Audit report: " << report.project_name << "\n\n"
     << "- tool version: " << report.tool_version << "\n"
     << "- config fingerprint: `" << report.config_fingerprint << "`\n"
     << "- verifier: " << (report.verifier_enabled ? "enabled" : "skipped") << "\n"
     << "- batches: " << report.batches.size() << "\n"
     << "- raw hypotheses: " << report.v_raw.size() << ", findings: " << report.findings.size()
     << ", dropped: " << report.filtered.size() << ", merged: " << report.merged.size() << "\n\n";

  md << "## Findings\n\n";
  if (report.findings.empty()) md << "No findings.\n\n";
  for (Severity s : {Severity::Critical, Severity::High, Severity::Medium, Severity::Low}) {
    std::vector<const VulnerabilityHypothesis*> group;
    for (const auto& h : report.findings) {
      if (h.severity == s) group.push_back(&h);
    }
    if (group.empty()) continue;
    std::string title(to_string(s));
    if (!title.empty()) title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
    md << "## " << title << " (" << group.size() << ")\n\n";
    for (const auto* h : group) render_finding(md, *h);
  }

  if (!report.filtered.empty()) {
    md << "## Filtered\n\n| id | category | stage | rationale |\n|---|---|---|---|\n";
    for (const auto& f : report.filtered) {
      md << "| `" << f.hypothesis.id << "` | " << f.hypothesis.category << " | " << to_string(f.verdict.stage) << " | "
         << f.verdict.rationale << " |\n";
    }
    md << "\n";
  }
  if (!report.merged.empty()) {
    md << "## Merged duplicates\n\n";
    for (const auto& m : report.merged) md << "- `" << m.hypothesis_id << "` into `" << m.merged_into << "`\n";
    md << "\n";
  }

  md << "## Usage\n\n| stage | calls | input tokens | output tokens | cost |\n|---|---|---|---|---|\n";
  auto row = [&](const UsageRow& r) {
    md << "| " << r.stage << " | " << r.calls << " | " << r.input_tokens << " | " << r.output_tokens << " | "
       << std::fixed << std::setprecision(4) << r.monetary_cost << std::defaultfloat << " |\n";
  };
  for (const auto& r : report.usage.rows) row(r);
  row(report.usage.total);
  md << "\n";

  if (!report.warnings.empty()) {
    md << "## Warnings\n\n";
    for (const auto& w : report.warnings) md << "- " << w.source << ": " << w.message << "\n";
  }
  return md.str();
}

}  // namespace warden
