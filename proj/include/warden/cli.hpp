#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "warden/config.hpp"
#include "warden/facts.hpp"
#include "warden/knowledge.hpp"
#include "warden/report.hpp"
#include "warden/smt.hpp"

namespace warden {

std::string_view tool_version();

/// A project directory of .sol files, or a fact file (.json).
Extraction load_project(const std::filesystem::path& input);

struct AuditInputs {
  std::string project_name;
  const FactSet& facts;
  const KnowledgeIndex& kb;
  ModelGateway& model;
  SearchClient& search;
  SolverRunner& solver;
  bool skip_verifier = false;
};

/// Profiler, auditor over every batch, then the verifier cascade.
AuditReport run_audit(const AuditInputs& in, const EffectiveConfig& config);

/// Entry point of the `warden` binary. `args` excludes the program name.
/// Returns 0 on success, 2 on input errors and 3 on gateway errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace warden
