#include "warden/verifier.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "warden/error.hpp"

namespace warden {

std::string_view to_string(VerdictStage s) {
  switch (s) {
    case VerdictStage::Aggregation: return "aggregation";
    case VerdictStage::Dedup: return "dedup";
    case VerdictStage::ThreatModel: return "threat_model";
  }
  return "aggregation";
}

nlohmann::json to_json(const VerdictRecord& r) {
  return {{"hypothesis_id", r.hypothesis_id}, {"stage", to_string(r.stage)}, {"verdict", r.verdict},
          {"rationale", r.rationale}};
}

namespace {

std::string describe(const VulnerabilityHypothesis& h) {
  std::ostringstream os;
  os << "Category: " << h.category << " (" << to_string(h.severity) << ")\nEntry point: " << h.entry_point.function
     << " line " << h.entry_point.line << "\nPreconditions:\n";
  for (const auto& c : h.constraints) os << "- " << c << "\n";
  os << "Attack steps:\n";
  for (std::size_t i = 0; i < h.reasoning_path.size(); ++i) os << (i + 1) << ". " << h.reasoning_path[i] << "\n";
  return os.str();
}

std::string rationale_of(const std::string& reply) {
  if (auto j = extract_json(reply); j && j->is_object() && j->contains("rationale") && (*j)["rationale"].is_string()) {
    return (*j)["rationale"].get<std::string>();
  }
  std::string t = trim(reply);
  return t.size() > 400 ? t.substr(0, 400) : t;
}

void describe_function(std::ostringstream& os, const FunctionFact& f) {
  os << "// " << f.key() << " visibility=" << to_string(f.visibility)
     << " modifiers=[" << join(f.modifiers, ", ") << "]\n"
     << f.body_text << "\n\n";
}

}  // namespace

Judgement aggregate_context(const VulnerabilityHypothesis& h, const FactSet& facts, const DependencyGraph& graph,
                            ModelGateway& model) {
  Judgement out;
  const auto* entry = facts.find_function(h.entry_point.function);
  if (!entry || !graph.contains(entry->key())) {
    out.rationale = "entry point not found in project facts; kept";
    out.warnings.push_back({h.id, out.rationale});
    return out;
  }
  std::ostringstream user;
  user << "## Hypothesis\n" << describe(h) << "\n## Entry function\n";
  describe_function(user, *entry);
  auto callers = transitive_callers(graph, entry->key());
  user << "## Every function that can reach the entry (" << callers.size() << ")\n";
  for (const auto& k : callers) {
    if (const auto* f = facts.find_function(k)) describe_function(user, *f);
  }
  user << "Considering modifiers, access control and checks along every route to the entry, is at least one "
          "route still exploitable as described?";
  const std::string system =
      "You re-check audit findings against their full calling context. A finding stays feasible if any route to "
      "the entry point lacks a guard that blocks it. Reply with JSON {\"feasible\": true|false, \"rationale\": \"...\"}.";
  try {
    auto reply = model.complete({"verify_aggregate", system, user.str()}).text;
    if (parse_verdict(reply, {"feasible"}) == false) {
      out.keep = false;
      out.rationale = rationale_of(reply);
    } else {
      out.rationale = "feasible under full context";
    }
  } catch (const GatewayUnreachable&) {
    throw;
  } catch (const ModelError& e) {
    out.rationale = std::string("model error, kept: ") + e.what();
    out.warnings.push_back({h.id, out.rationale});
  }
  return out;
}

Judgement threat_filter(const VulnerabilityHypothesis& h, ModelGateway& model) {
  Judgement out;
  const std::string system =
      "You check whether an audit finding fits the threat model. Out of scope: attacks that need a trusted party "
      "to be compromised, such as leaked admin keys, a malicious owner or deployer, or a trusted oracle that "
      "reports false data. In scope: anything an outside attacker can do, including flash loans, calling public "
      "functions, transaction ordering and influence over block variables. Reply with JSON "
      "{\"requires_external_compromise\": true|false, \"rationale\": \"...\"}.";
  std::string user = describe(h) + "\nDoes every way of exploiting this require a compromised trusted party?";
  try {
    auto reply = model.complete({"verify_threat", system, user}).text;
    if (parse_verdict(reply, {"requires_external_compromise", "external"}) == true) {
      out.keep = false;
      out.rationale = rationale_of(reply);
    } else {
      out.rationale = "exploitable by an unprivileged attacker";
    }
  } catch (const GatewayUnreachable&) {
    throw;
  } catch (const ModelError& e) {
    out.rationale = std::string("model error, kept: ") + e.what();
    out.warnings.push_back({h.id, out.rationale});
  }
  return out;
}

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return std::max(0.0, 1.0 - a.dot(b) / (na * nb));
}

std::vector<int> dbscan_cosine(const std::vector<Eigen::VectorXd>& points, double epsilon, int min_samples) {
  return dbscan(points.size(), epsilon, min_samples,
                [&](std::size_t i, std::size_t j) { return cosine_distance(points[i], points[j]); });
}

namespace {

double parse_confidence(const std::string& reply) {
  double value = -1.0;
  if (auto j = extract_json(reply)) {
    if (j->is_number()) value = j->get<double>();
    if (j->is_object() && j->contains("confidence") && (*j)["confidence"].is_number()) {
      value = (*j)["confidence"].get<double>();
    }
  } else {
    try {
      value = std::stod(trim(reply));
    } catch (...) {
    }
  }
  return value >= 0.0 && value <= 1.0 ? value : 0.5;
}

}  // namespace

DedupResult dedup(const std::vector<VulnerabilityHypothesis>& hs, ModelGateway& model, double epsilon,
                  int min_samples) {
  DedupResult out;
  if (hs.empty()) return out;
  std::vector<std::string> texts;
  for (const auto& h : hs) texts.push_back(canonical_text(h));
  std::vector<Eigen::VectorXd> vectors;
  try {
    vectors = model.embed(texts);
  } catch (const GatewayUnreachable&) {
    throw;
  } catch (const ModelError& e) {
    out.warnings.push_back({"dedup", std::string("embedding failed, dedup skipped: ") + e.what()});
    out.survivors = hs;
    for (const auto& h : hs) out.clusters.push_back({{h.id}, h.id});
    return out;
  }
  auto labels = dbscan_cosine(vectors, epsilon, min_samples);

  std::map<int, std::vector<std::size_t>> groups;
  int noise = -2;
  for (std::size_t i = 0; i < hs.size(); ++i) groups[labels[i] == -1 ? noise-- : labels[i]].push_back(i);

  const std::string system =
      "You rate how likely an audit finding is a real, exploitable vulnerability. Reply with JSON "
      "{\"confidence\": <number between 0 and 1>}.";
  std::vector<std::pair<std::size_t, VulnerabilityHypothesis>> kept;
  for (auto& [_, members] : groups) {
    if (members.size() == 1) {
      kept.emplace_back(members.front(), hs[members.front()]);
      out.clusters.push_back({{hs[members.front()].id}, hs[members.front()].id});
      continue;
    }
    std::vector<double> conf;
    for (auto i : members) {
      double c = 0.5;
      try {
        c = parse_confidence(model.complete({"confidence", system, describe(hs[i])}).text);
      } catch (const GatewayUnreachable&) {
        throw;
      } catch (const ModelError& e) {
        out.warnings.push_back({hs[i].id, std::string("confidence defaulted to 0.5: ") + e.what()});
      }
      conf.push_back(c);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < members.size(); ++k) {
      const auto& cand = hs[members[k]];
      const auto& cur = hs[members[best]];
      if (conf[k] > conf[best] || (conf[k] == conf[best] && cand.id < cur.id)) best = k;
    }
    VulnerabilityHypothesis winner = hs[members[best]];
    winner.confidence = conf[best];
    HypothesisCluster cluster;
    cluster.representative_id = winner.id;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& m = hs[members[k]];
      cluster.member_ids.push_back(m.id);
      if (k == best) continue;
      winner.alternative_paths.push_back(m.reasoning_path);
      winner.alternative_paths.insert(winner.alternative_paths.end(), m.alternative_paths.begin(),
                                      m.alternative_paths.end());
    }
    std::sort(cluster.member_ids.begin(), cluster.member_ids.end());
    out.clusters.push_back(std::move(cluster));
    kept.emplace_back(members[best], std::move(winner));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, h] : kept) out.survivors.push_back(std::move(h));
  return out;
}

Verification verify(const std::vector<VulnerabilityHypothesis>& v_raw, const FactSet& facts,
                    const DependencyGraph& graph, ModelGateway& model, const VerifierConfig& config) {
  Verification out;
  std::vector<VulnerabilityHypothesis> feasible;
  for (const auto& h : v_raw) {
    auto j = aggregate_context(h, facts, graph, model);
    out.warnings.insert(out.warnings.end(), j.warnings.begin(), j.warnings.end());
    if (j.keep) {
      feasible.push_back(h);
    } else {
      out.verdicts.push_back({h.id, VerdictStage::Aggregation, "dropped", j.rationale});
    }
  }

  auto d = dedup(feasible, model, config.epsilon, config.min_samples);
  out.warnings.insert(out.warnings.end(), d.warnings.begin(), d.warnings.end());
  for (const auto& c : d.clusters) {
    for (const auto& id : c.member_ids) {
      if (id != c.representative_id) {
        out.verdicts.push_back({id, VerdictStage::Dedup, "merged_into:" + c.representative_id,
                                "semantic duplicate of " + c.representative_id});
      }
    }
  }
  out.clusters = std::move(d.clusters);

  for (auto& h : d.survivors) {
    auto j = threat_filter(h, model);
    out.warnings.insert(out.warnings.end(), j.warnings.begin(), j.warnings.end());
    out.verdicts.push_back({h.id, VerdictStage::ThreatModel, j.keep ? "kept" : "dropped", j.rationale});
    if (j.keep) out.v_final.push_back(std::move(h));
  }
  return out;
}

}  // namespace warden
