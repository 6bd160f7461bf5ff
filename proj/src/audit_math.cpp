#include <algorithm>
#include <sstream>

#include "warden/auditor.hpp"
#include "warden/error.hpp"

namespace warden {

bool has_arithmetic(const FunctionFact& f) {
  std::string body = blank_comments_and_strings(f.body_text);
  auto brace = body.find('{');
  if (brace != std::string::npos) body = body.substr(brace);
  for (const char* token : {"/", "*", "%", "mulDiv", "mulDown", "divUp"}) {
    if (body.find(token) != std::string::npos) return true;
  }
  return false;
}

Staged<std::vector<std::string>> select_arithmetic_sensitive(const AuditTask& task, const FactSet& facts,
                                                             ModelGateway& model) {
  Staged<std::vector<std::string>> out;
  std::vector<const FunctionFact*> candidates;
  for (const auto& key : task.functions) {
    const auto* f = facts.find_function(key);
    if (f && has_arithmetic(*f)) candidates.push_back(f);
  }
  if (candidates.empty()) return out;

  std::ostringstream user;
  user << "Which of these functions contain arithmetic whose rounding, ordering of multiplication and "
          "division, or accumulated error could be exploited?\n\n";
  for (const auto* f : candidates) user << "// " << f->key() << "\n" << f->body_text << "\n\n";
  const std::string system =
      "You review fixed-point arithmetic in Solidity. Reply with JSON {\"functions\": [\"Contract.fn(types)\", ...]} "
      "naming only functions from the prompt.";
  std::string reply;
  try {
    reply = model.complete({"arith_select", system, user.str()}).text;
  } catch (const GatewayUnreachable&) {
    throw;
  } catch (const ModelError& e) {
    out.warnings.push_back({"arith_select", std::string("model error, using lexical pre-filter: ") + e.what()});
    for (const auto* f : candidates) out.value.push_back(f->key());
    return out;
  }
  auto named = parse_string_list(reply, {"functions"});
  for (const auto* f : candidates) {
    std::string key = f->key();
    std::string qualified = key.substr(0, key.find('('));
    bool hit = std::any_of(named.begin(), named.end(), [&](const std::string& n) {
      auto t = trim(n);
      return t == key || t == f->signature || t == qualified;
    });
    if (hit) out.value.push_back(key);
  }
  return out;
}

SmtProblem transpile_and_solve(const FunctionFact& function, ModelGateway& model, SolverRunner& solver,
                               const RealismOptions& realism, int timeout_ms) {
  SmtProblem p;
  p.function = function.key();
  const std::string system =
      "You translate Solidity arithmetic into SMT-LIB v2 for the Z3 solver. Model every uint256 as "
      "(_ BitVec 256) unless a narrower width is provably enough, turn each require into an assert, declare every "
      "input with declare-const, and assert the property that the computed result deviates from the exact "
      "rational result. Finish with (check-sat) and (get-model). Reply with the script only.";
  std::string user = "Function " + function.key() + ":\n\n" + function.body_text;
  std::string script = strip_code_fence(model.complete({"transpile", system, user}).text);

  auto symbols = declared_symbols(script);
  if (symbols.empty()) {
    p.script_text = script;
    p.outcome = SolverOutcome::Unknown;
    p.message = "model reply declares no SMT symbols";
    return p;
  }
  p.realism_constraints = default_realism_constraints(symbols, realism);
  p.script_text = attach_realism(script, p.realism_constraints);
  auto result = solver.run(p.script_text, timeout_ms);
  p.outcome = result.outcome;
  p.message = result.message;
  if (p.outcome != SolverOutcome::Sat) return p;

  p.model_text = result.model_text;
  p.model_values = parse_model_values(result.model_text);
  auto replay = recheck_model(p.script_text, p.model_values, solver, timeout_ms);
  if (replay.outcome != SolverOutcome::Sat) {
    p.outcome = SolverOutcome::Unknown;
    p.message = "counterexample did not survive replay (" + std::string(to_string(replay.outcome)) + ")";
  }
  return p;
}

Staged<std::vector<VulnerabilityHypothesis>> math_audit(const Batch& batch, const SmtProblem& smt,
                                                        const AuditDeps& deps, const AuditorConfig& config) {
  if (smt.outcome != SolverOutcome::Sat) return {};
  auto functions = extract_caller_callee(deps.graph, smt.function, config.caller_callee_depth);

  std::vector<std::string> assignments;
  for (const auto& [name, value] : smt.model_values) assignments.push_back(name + " = " + value);

  std::ostringstream user;
  user << "## Code\n" << render_batch_code(batch, deps.facts) << "## Entry candidates\n";
  for (const auto& f : functions) user << "- " << f << "\n";
  user << "\n## Arithmetic counterexample for " << smt.function << "\n"
       << "The solver found concrete inputs for which the computed value differs from the exact result:\n";
  for (const auto& a : assignments) user << "- " << a << "\n";
  user << "\nExplain how an attacker reaches and exploits this deviation, for example by repeating the call.\n";

  auto out = run_findings_call("math_audit", user.str(), batch, functions, "math", deps);
  for (auto& h : out.value) {
    for (const auto& a : assignments) {
      if (std::find(h.constraints.begin(), h.constraints.end(), a) == h.constraints.end()) h.constraints.push_back(a);
    }
  }
  assign_unique_ids(out.value);
  return out;
}

}  // namespace warden
