#include <algorithm>
#include <sstream>

#include "warden/auditor.hpp"
#include "warden/error.hpp"

namespace warden {

namespace {

const char* const kFindingsSchema =
    "Reply with JSON only, shaped as {\"findings\": [{\"entry_function\": \"Contract.fn(types)\", \"line\": 0, "
    "\"category\": \"...\", \"severity\": \"Critical|High|Medium|Low\", \"constraints\": [\"precondition\"], "
    "\"reasoning_path\": [\"step\"]}]}. Return {\"findings\": []} when nothing is exploitable.";

const char* const kAuditSystem =
    "You are a senior smart-contract security auditor. Look for concrete, exploitable vulnerabilities that "
    "start at one of the entry candidates. For each finding give the entry function and line, the conditions "
    "that must hold beforehand, and the attack as an ordered list of steps.";

std::optional<std::string> resolve_entry(const std::string& name, const std::set<std::string>& allowed) {
  if (allowed.contains(name)) return name;
  std::vector<std::string> hits;
  for (const auto& key : allowed) {
    auto dot = key.find('.');
    auto paren = key.find('(');
    std::string signature = key.substr(dot + 1);
    std::string bare = key.substr(dot + 1, paren - dot - 1);
    std::string qualified = key.substr(0, paren);
    if (name == signature || name == bare || name == qualified) hits.push_back(key);
  }
  if (hits.size() == 1) return hits.front();
  return std::nullopt;
}

std::optional<std::vector<std::string>> string_array(const nlohmann::json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& x : j) {
    if (!x.is_string()) return std::nullopt;
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

std::string render_batch_code(const Batch& batch, const FactSet& facts) {
  std::ostringstream os;
  for (const auto& c : batch.contracts) {
    const auto* cf = facts.find_contract(c);
    os << "// ===== " << (cf ? std::string(to_string(cf->kind)) : "contract") << " " << c;
    if (cf) os << " (" << cf->source_path << ")";
    os << " =====\n";
    for (const auto* f : facts.functions_of(c)) {
      auto it = batch.truncated_bodies.find(f->key());
      os << "// " << f->key() << " [lines " << f->source_span.start_line << "-" << f->source_span.end_line << "]\n"
         << (it == batch.truncated_bodies.end() ? f->body_text : it->second) << "\n\n";
    }
  }
  return os.str();
}

std::optional<Staged<std::vector<VulnerabilityHypothesis>>> parse_findings(
    const std::string& reply, const FactSet& facts, const std::set<std::string>& allowed_entries,
    const std::string& origin, int batch_id) {
  auto doc = extract_json(reply);
  if (!doc) return std::nullopt;
  const nlohmann::json* list = nullptr;
  if (doc->is_array()) list = &*doc;
  if (doc->is_object() && doc->contains("findings") && (*doc)["findings"].is_array()) list = &(*doc)["findings"];
  if (!list) return std::nullopt;

  Staged<std::vector<VulnerabilityHypothesis>> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& f = (*list)[i];
    auto reject = [&](const std::string& why) {
      out.warnings.push_back({origin, "finding " + std::to_string(i) + " dropped: " + why});
    };
    if (!f.is_object()) {
      reject("not an object");
      continue;
    }
    if (!f.contains("entry_function") || !f["entry_function"].is_string()) {
      reject("missing entry_function");
      continue;
    }
    auto entry = resolve_entry(trim(f["entry_function"].get<std::string>()), allowed_entries);
    if (!entry) {
      reject("entry_function '" + f["entry_function"].get<std::string>() + "' is not in this batch");
      continue;
    }
    VulnerabilityHypothesis h;
    h.entry_point.function = *entry;
    if (f.contains("line")) {
      if (!f["line"].is_number_integer() || f["line"].get<int>() < 0) {
        reject("line must be a non-negative integer");
        continue;
      }
      h.entry_point.line = f["line"].get<int>();
    } else if (const auto* fn = facts.find_function(*entry)) {
      h.entry_point.line = fn->source_span.start_line;
    }
    if (!f.contains("category") || !f["category"].is_string() || trim(f["category"].get<std::string>()).empty()) {
      reject("missing category");
      continue;
    }
    h.category = trim(f["category"].get<std::string>());
    auto sev = f.contains("severity") && f["severity"].is_string() ? severity_from(f["severity"].get<std::string>())
                                                                    : std::nullopt;
    if (!sev) {
      reject("severity must be Critical, High, Medium or Low");
      continue;
    }
    h.severity = *sev;
    if (f.contains("constraints")) {
      auto c = string_array(f["constraints"]);
      if (!c) {
        reject("constraints must be a list of strings");
        continue;
      }
      h.constraints = *c;
    }
    auto path = f.contains("reasoning_path") ? string_array(f["reasoning_path"]) : std::nullopt;
    if (!path || path->empty()) {
      reject("reasoning_path must be a non-empty list of strings");
      continue;
    }
    h.reasoning_path = *path;
    h.origin = origin;
    h.batch_id = batch_id;
    out.value.push_back(std::move(h));
  }
  assign_unique_ids(out.value);
  return out;
}

namespace {

std::set<std::string> batch_functions(const Batch& batch, const FactSet& facts) {
  std::set<std::string> out;
  for (const auto& c : batch.contracts) {
    for (const auto* f : facts.functions_of(c)) out.insert(f->key());
  }
  return out;
}

}  // namespace

Staged<std::vector<VulnerabilityHypothesis>> run_findings_call(const std::string& stage, const std::string& user,
                                                               const Batch& batch, const std::set<std::string>& entries,
                                                               const std::string& origin, const AuditDeps& deps) {
  std::set<std::string> allowed = batch_functions(batch, deps.facts);
  allowed.insert(entries.begin(), entries.end());
  std::string system = std::string(kAuditSystem) + "\n" + kFindingsSchema;
  auto reply = deps.model.complete({stage, system, user}).text;
  auto parsed = parse_findings(reply, deps.facts, allowed, origin, batch.id);
  if (!parsed) {
    std::string repair_user = "The reply below does not follow the required findings format. Rewrite it so it "
                              "does, keeping its content.\n\n" + std::string(kFindingsSchema) +
                              "\n\nReply to fix:\n" + reply;
    auto repaired = deps.model.complete({"repair", "You convert audit notes into strict JSON.", repair_user}).text;
    parsed = parse_findings(repaired, deps.facts, allowed, origin, batch.id);
  }
  if (!parsed) return {{}, {{origin, "reply had no parseable findings document, even after one repair attempt"}}};
  return std::move(*parsed);
}

namespace {

std::string audit_prompt(const Batch& batch, const AuditTask& task, const KnowledgeContext& context,
                         const FactSet& facts, const std::string& extra) {
  std::ostringstream os;
  os << "## Code\n" << render_batch_code(batch, facts) << "## Entry candidates\n";
  for (const auto& f : task.functions) os << "- " << f << "\n";
  os << "\nFocus contract: " << task.contract << "\n";
  std::string knowledge = render_context(context);
  if (!knowledge.empty()) os << "\n## Reference knowledge\n" << knowledge;
  if (!extra.empty()) os << "\n" << extra << "\n";
  return os.str();
}

}  // namespace

Staged<std::vector<VulnerabilityHypothesis>> base_audit(const Batch& batch, const AuditTask& task,
                                                        const KnowledgeContext& context, const AuditDeps& deps) {
  return run_findings_call("audit", audit_prompt(batch, task, context, deps.facts, ""), batch, task.functions, "base",
                           deps);
}

Staged<std::vector<VulnerabilityHypothesis>> adversarial_audit(const Batch& batch, const AuditTask& task,
                                                               const KnowledgeContext& context,
                                                               const std::vector<AdversarialProfile>& profiles,
                                                               const AuditDeps& deps) {
  Staged<std::vector<VulnerabilityHypothesis>> out;
  for (const auto& p : profiles) {
    std::string name(to_string(p.name));
    std::string extra = "## Adversarial profile: " + name + "\n" + p.context_text;
    try {
      auto r = run_findings_call("adversarial", audit_prompt(batch, task, context, deps.facts, extra), batch,
                                 task.functions, "adversarial:" + name, deps);
      out.value.insert(out.value.end(), r.value.begin(), r.value.end());
      out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
    } catch (const GatewayUnreachable&) {
      throw;
    } catch (const ModelError& e) {
      out.warnings.push_back({"adversarial:" + name, std::string("profile skipped: ") + e.what()});
    }
  }
  assign_unique_ids(out.value);
  return out;
}

}  // namespace warden
