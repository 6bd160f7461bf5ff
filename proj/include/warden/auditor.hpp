#pragma once

#include <set>
#include <string>
#include <vector>

#include "warden/facts.hpp"
#include "warden/gateway.hpp"
#include "warden/graph.hpp"
#include "warden/hypothesis.hpp"
#include "warden/knowledge.hpp"
#include "warden/profiler.hpp"
#include "warden/smt.hpp"

namespace warden {

struct AuditTask {
  std::set<std::string> functions;
  std::vector<KnowledgeEntry> knowledge;
  std::string contract;
  std::string flagged_function;
  int severity_rank = 0;
  double contract_score = 0.0;
};

/// Strict queue order: score descending, severity rank ascending, contract
/// name, then a hash of the function set.
bool task_before(const AuditTask& a, const AuditTask& b);
std::string function_set_hash(const std::set<std::string>& functions);

enum class ProfileName { EnvironmentTampering, InteractionHijacking, ResourceInfinity };
std::string_view to_string(ProfileName p);

struct AdversarialProfile {
  ProfileName name;
  std::string context_text;
};

const std::vector<AdversarialProfile>& default_profiles();

struct AuditorConfig {
  int caller_callee_depth = 2;
  std::size_t knowledge_k = 3;
  std::vector<AdversarialProfile> profiles = default_profiles();
  std::vector<std::string> primitives = default_primitives();
  bool enable_math = true;
  RealismOptions realism;
  int solver_timeout_ms = 10000;
  std::size_t max_pairs = 200;
};

/// Everything the agent loop reads besides the batch itself.
struct AuditDeps {
  const FactSet& facts;
  const DependencyGraph& graph;
  const KnowledgeIndex& kb;
  ModelGateway& model;
  SearchClient& search;
  SolverRunner& solver;
};

template <typename T>
struct Staged {
  T value{};
  std::vector<Warning> warnings;
};

Staged<std::vector<AuditTask>> plan(const Batch& batch, const AuditDeps& deps, const AuditorConfig& config = {});

Staged<KnowledgeContext> remind(const AuditTask& task, const AuditDeps& deps, const AuditorConfig& config = {});

/// Source of the batch with the anchor contract first.
std::string render_batch_code(const Batch& batch, const FactSet& facts);

/// Parses a findings reply into hypotheses. Findings that violate the schema
/// or point outside `allowed_entries` are dropped with a warning. Returns
/// nullopt when the reply holds no findings document at all.
std::optional<Staged<std::vector<VulnerabilityHypothesis>>> parse_findings(
    const std::string& reply, const FactSet& facts, const std::set<std::string>& allowed_entries,
    const std::string& origin, int batch_id);

/// One audit call; a reply without a findings document gets a single repair
/// re-prompt before it is dropped with a warning.
Staged<std::vector<VulnerabilityHypothesis>> run_findings_call(const std::string& stage, const std::string& user,
                                                               const Batch& batch, const std::set<std::string>& entries,
                                                               const std::string& origin, const AuditDeps& deps);

Staged<std::vector<VulnerabilityHypothesis>> base_audit(const Batch& batch, const AuditTask& task,
                                                        const KnowledgeContext& context, const AuditDeps& deps);

Staged<std::vector<VulnerabilityHypothesis>> adversarial_audit(const Batch& batch, const AuditTask& task,
                                                               const KnowledgeContext& context,
                                                               const std::vector<AdversarialProfile>& profiles,
                                                               const AuditDeps& deps);

/// True when the comment-free body mentions `/`, `*`, `%`, mulDiv, mulDown
/// or divUp.
bool has_arithmetic(const FunctionFact& f);

Staged<std::vector<std::string>> select_arithmetic_sensitive(const AuditTask& task, const FactSet& facts,
                                                             ModelGateway& model);

/// Asks the model for an SMT-LIB encoding of `function`, appends realism
/// constraints and runs the solver. A sat model that does not survive replay
/// is reported as Unknown.
SmtProblem transpile_and_solve(const FunctionFact& function, ModelGateway& model, SolverRunner& solver,
                               const RealismOptions& realism = {}, int timeout_ms = 10000);

Staged<std::vector<VulnerabilityHypothesis>> math_audit(const Batch& batch, const SmtProblem& smt,
                                                        const AuditDeps& deps, const AuditorConfig& config = {});

struct SynthesisStats {
  std::size_t pairs_evaluated = 0;
  std::size_t merges = 0;
  bool budget_exhausted = false;
};

VulnerabilityHypothesis chain(const VulnerabilityHypothesis& a, const VulnerabilityHypothesis& b,
                              const std::vector<std::string>& satisfied);

/// Repeatedly merges linked pairs until a full scan finds no link or the
/// budget of distinct pair evaluations runs out.
Staged<std::vector<VulnerabilityHypothesis>> synthesize_chains(std::vector<VulnerabilityHypothesis> hypotheses,
                                                               ModelGateway& model, std::size_t max_pairs = 200,
                                                               SynthesisStats* stats = nullptr);

struct BatchAudit {
  std::vector<VulnerabilityHypothesis> hypotheses;
  std::vector<AuditTask> tasks;
  std::vector<SmtProblem> smt_problems;
  std::vector<Warning> warnings;
};

BatchAudit audit_batch(const Batch& batch, const AuditDeps& deps, const AuditorConfig& config = {});

}  // namespace warden
