#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "warden/gateway.hpp"
#include "warden/hypothesis.hpp"
#include "warden/profiler.hpp"
#include "warden/smt.hpp"
#include "warden/util.hpp"
#include "warden/verifier.hpp"

namespace warden {

struct FilteredFinding {
  VulnerabilityHypothesis hypothesis;
  VerdictRecord verdict;
};

struct MergedFinding {
  std::string hypothesis_id;
  std::string merged_into;
};

struct AuditReport {
  std::string project_name;
  std::string tool_version;
  std::string config_fingerprint;
  bool verifier_enabled = true;
  std::vector<Batch> batches;
  std::vector<VulnerabilityHypothesis> v_raw;
  std::vector<VulnerabilityHypothesis> findings;
  std::vector<VerdictRecord> verdicts;
  std::vector<FilteredFinding> filtered;
  std::vector<MergedFinding> merged;
  std::vector<SmtProblem> smt_problems;
  UsageReport usage;
  std::map<std::string, double> timing_ms;
  std::vector<Warning> warnings;
};

/// Fills `findings`, `filtered` and `merged` from the raw hypotheses, the
/// survivors and the verdict ledger.
void classify(AuditReport& report, const std::vector<VulnerabilityHypothesis>& v_final);

/// |v_raw| == |findings| + |filtered| + |merged|, with every id accounted for
/// exactly once.
bool accounting_holds(const AuditReport& report);

/// `include_timing` false drops wall-clock fields so runs compare equal.
nlohmann::json to_json(const AuditReport& report, bool include_timing = true);

/// Findings grouped by severity, followed by filtered findings and usage.
std::string render_markdown(const AuditReport& report);

}  // namespace warden
