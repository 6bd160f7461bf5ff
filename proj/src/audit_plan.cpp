#include <algorithm>
#include <sstream>

#include "warden/auditor.hpp"
#include "warden/error.hpp"

namespace warden {

std::string function_set_hash(const std::set<std::string>& functions) {
  return short_hash(join(std::vector<std::string>(functions.begin(), functions.end()), "\n"));
}

bool task_before(const AuditTask& a, const AuditTask& b) {
  if (a.contract_score != b.contract_score) return a.contract_score > b.contract_score;
  if (a.severity_rank != b.severity_rank) return a.severity_rank < b.severity_rank;
  if (a.contract != b.contract) return a.contract < b.contract;
  return function_set_hash(a.functions) < function_set_hash(b.functions);
}

std::string_view to_string(ProfileName p) {
  switch (p) {
    case ProfileName::EnvironmentTampering: return "EnvironmentTampering";
    case ProfileName::InteractionHijacking: return "InteractionHijacking";
    case ProfileName::ResourceInfinity: return "ResourceInfinity";
  }
  return "EnvironmentTampering";
}

const std::vector<AdversarialProfile>& default_profiles() {
  static const std::vector<AdversarialProfile> profiles{
      {ProfileName::EnvironmentTampering,
       "Assume the attacker shapes the execution environment: they pick transaction ordering inside a block, "
       "can front-run or back-run any pending call, and as a block producer can nudge block.timestamp and "
       "block.number. Oracle updates may arrive late or out of order."},
      {ProfileName::InteractionHijacking,
       "Assume every external call transfers control to attacker code. Token hooks, receiver callbacks and "
       "arbitrary token contracts can re-enter any public function, return misleading values or revert "
       "selectively."},
      {ProfileName::ResourceInfinity,
       "Assume the attacker has unbounded capital for the length of one transaction through flash loans, and "
       "can repeat any action as many times as gas allows, splitting or merging positions at will."},
  };
  return profiles;
}

namespace {

std::vector<int> parse_ranking(const std::string& reply, std::size_t n) {
  std::vector<int> rank(n, static_cast<int>(n));
  int next = 0;
  for (const auto& item : parse_string_list(reply, {"order", "ranking", "tasks"})) {
    std::string t = trim(item);
    if (!t.empty() && (t[0] == 'T' || t[0] == 't')) t = t.substr(1);
    std::size_t idx = 0;
    try {
      idx = std::stoul(t);
    } catch (...) {
      continue;
    }
    if (idx < 1 || idx > n || rank[idx - 1] != static_cast<int>(n)) continue;
    rank[idx - 1] = next++;
  }
  return rank;
}

}  // namespace

Staged<std::vector<AuditTask>> plan(const Batch& batch, const AuditDeps& deps, const AuditorConfig& config) {
  Staged<std::vector<AuditTask>> out;
  const std::string scan_system =
      "You are a smart-contract auditor doing a first pass. Decide whether the function below performs a "
      "security-sensitive operation that deserves a closer look: value transfers, external calls, privileged "
      "state changes, price or share arithmetic. Reply with JSON {\"vulnerable\": true|false, \"reason\": \"...\"}.";
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& contract : batch.contracts) {
    const auto* cf = deps.facts.find_contract(contract);
    if (cf && cf->kind == ContractKind::Interface) continue;
    for (const auto* f : deps.facts.functions_of(contract)) {
      if (!deps.graph.contains(f->key())) continue;
      std::string user = "Contract: " + contract + "\nFunction: " + f->key() + "\n\n" + f->body_text;
      std::optional<bool> flagged;
      try {
        flagged = parse_verdict(deps.model.complete({"plan", scan_system, user}).text, {"vulnerable", "suspicious"});
      } catch (const GatewayUnreachable&) {
        throw;
      } catch (const ModelError&) {
        out.warnings.push_back({"plan", f->key() + ": model error, function skipped"});
        continue;
      }
      if (flagged != true) continue;

      AuditTask task;
      task.functions = extract_caller_callee(deps.graph, f->key(), config.caller_callee_depth);
      task.contract = contract;
      task.flagged_function = f->key();
      task.contract_score = batch.scores.contains(contract) ? batch.scores.at(contract) : 0.0;
      if (!seen.emplace(contract, function_set_hash(task.functions)).second) continue;
      std::vector<const FunctionFact*> fns;
      for (const auto& k : task.functions) {
        if (const auto* ff = deps.facts.find_function(k)) fns.push_back(ff);
      }
      try {
        task.knowledge = relate(fns, deps.kb, deps.model, config.knowledge_k);
      } catch (const GatewayUnreachable&) {
        throw;
      } catch (const ModelError&) {
        out.warnings.push_back({"relate", f->key() + ": model error, no knowledge attached"});
      }
      out.value.push_back(std::move(task));
    }
  }
  if (out.value.empty()) return out;

  std::ostringstream user;
  for (std::size_t i = 0; i < out.value.size(); ++i) {
    const auto& t = out.value[i];
    user << "T" << (i + 1) << ": " << t.flagged_function << " in " << t.contract << " (context: "
         << join(std::vector<std::string>(t.functions.begin(), t.functions.end()), ", ") << ")\n";
  }
  const std::string rank_system =
      "Order the audit tasks by how severe a bug in them could be, worst first. Reply with JSON "
      "{\"order\": [\"T1\", ...]} listing every task id once.";
  std::vector<int> ranks(out.value.size(), static_cast<int>(out.value.size()));
  try {
    ranks = parse_ranking(deps.model.complete({"severity", rank_system, user.str()}).text, out.value.size());
  } catch (const GatewayUnreachable&) {
    throw;
  } catch (const ModelError&) {
    out.warnings.push_back({"severity", "model error, tasks keep equal severity"});
  }
  for (std::size_t i = 0; i < out.value.size(); ++i) out.value[i].severity_rank = ranks[i];
  std::sort(out.value.begin(), out.value.end(), task_before);
  return out;
}

Staged<KnowledgeContext> remind(const AuditTask& task, const AuditDeps& deps, const AuditorConfig& config) {
  Staged<KnowledgeContext> out;
  std::vector<LiveNote> notes;
  if (const auto* c = deps.facts.find_contract(task.contract)) {
    auto lineage = lineage_augment(*c, deps.facts, deps.search, deps.model, config.primitives);
    notes = std::move(lineage.notes);
    out.warnings = std::move(lineage.warnings);
  }
  out.value = make_context(task.knowledge, std::move(notes));
  return out;
}

BatchAudit audit_batch(const Batch& batch, const AuditDeps& deps, const AuditorConfig& config) {
  BatchAudit out;
  auto append = [&](auto& staged) {
    out.warnings.insert(out.warnings.end(), staged.warnings.begin(), staged.warnings.end());
  };
  auto planned = plan(batch, deps, config);
  append(planned);
  out.tasks = planned.value;

  std::vector<VulnerabilityHypothesis> raw;
  std::set<std::string> solved;
  for (const auto& task : out.tasks) {
    auto ctx = remind(task, deps, config);
    append(ctx);
    try {
      auto base = base_audit(batch, task, ctx.value, deps);
      append(base);
      raw.insert(raw.end(), base.value.begin(), base.value.end());
    } catch (const GatewayUnreachable&) {
      throw;
    } catch (const ModelError& e) {
      out.warnings.push_back({"audit", task.flagged_function + ": " + e.what()});
    }
    auto adv = adversarial_audit(batch, task, ctx.value, config.profiles, deps);
    append(adv);
    raw.insert(raw.end(), adv.value.begin(), adv.value.end());
    if (!config.enable_math) continue;

    auto selected = select_arithmetic_sensitive(task, deps.facts, deps.model);
    append(selected);
    for (const auto& key : selected.value) {
      if (!solved.insert(key).second) continue;
      const auto* f = deps.facts.find_function(key);
      if (!f) continue;
      SmtProblem smt;
      try {
        smt = transpile_and_solve(*f, deps.model, deps.solver, config.realism, config.solver_timeout_ms);
      } catch (const GatewayUnreachable&) {
        throw;
      } catch (const ModelError& e) {
        out.warnings.push_back({"transpile", key + ": " + e.what()});
        continue;
      }
      if (smt.outcome != SolverOutcome::Sat) {
        out.warnings.push_back({"smt", key + ": " + std::string(to_string(smt.outcome)) +
                                           (smt.message.empty() ? "" : " (" + smt.message + ")")});
      }
      try {
        auto math = math_audit(batch, smt, deps, config);
        append(math);
        raw.insert(raw.end(), math.value.begin(), math.value.end());
      } catch (const GatewayUnreachable&) {
        throw;
      } catch (const ModelError& e) {
        out.warnings.push_back({"math_audit", key + ": " + e.what()});
      }
      out.smt_problems.push_back(std::move(smt));
    }
  }
  assign_unique_ids(raw);
  auto synthesized = synthesize_chains(std::move(raw), deps.model, config.max_pairs);
  append(synthesized);
  out.hypotheses = std::move(synthesized.value);
  return out;
}

}  // namespace warden
