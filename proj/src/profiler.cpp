#include "warden/profiler.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "warden/error.hpp"

namespace warden {

nlohmann::json to_json(const Batch& b) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [c, s] : b.scores) scores[c] = s;
  nlohmann::json truncated = nlohmann::json::array();
  for (const auto& [k, _] : b.truncated_bodies) truncated.push_back(k);
  return {{"id", b.id},
          {"contracts", b.contracts},
          {"scores", scores},
          {"tags", b.tags},
          {"estimated_tokens", b.estimated_tokens},
          {"pruned", b.pruned_contracts},
          {"truncated_functions", truncated}};
}

std::vector<Batch> communities_to_batches(const std::vector<Community>& communities, const FactSet& facts) {
  std::vector<Batch> out;
  std::set<std::set<std::string>> seen;
  for (const auto& community : communities) {
    std::set<std::string> contracts;
    for (const auto& key : community.members) {
      const auto* f = facts.find_function(key);
      if (!f) throw UnknownFunction("community member " + key + " is not a known function");
      if (!facts.find_contract(f->contract)) throw UnknownContract("function " + key + " names unknown contract " + f->contract);
      contracts.insert(f->contract);
    }
    if (contracts.empty() || !seen.insert(contracts).second) continue;
    Batch b;
    b.id = static_cast<int>(out.size());
    b.contracts.assign(contracts.begin(), contracts.end());
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

void check_weights(double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
    throw ConfigError("alpha and beta must be non-negative with a positive sum");
  }
}

std::map<std::string, double> function_scores(const DependencyGraph& sub, double alpha, double beta) {
  std::map<std::string, double> out;
  if (sub.empty()) return out;
  auto table = centrality_scores(sub);
  for (const auto& key : sub.nodes()) out[key] = alpha * table.betweenness.at(key) + beta * table.pagerank.at(key);
  return out;
}

void order_by_score(Batch& batch) {
  std::sort(batch.contracts.begin(), batch.contracts.end(), [&](const std::string& a, const std::string& b) {
    double sa = batch.scores.at(a), sb = batch.scores.at(b);
    return sa != sb ? sa > sb : a < b;
  });
}

}  // namespace

std::map<std::string, double> score_contracts(const Batch& batch, const DependencyGraph& graph, double alpha, double beta) {
  if (batch.contracts.empty()) throw EmptyBatch("batch " + std::to_string(batch.id) + " has no contracts");
  check_weights(alpha, beta);
  auto sub = graph.induced_by_contracts(batch.contracts);
  auto fs = function_scores(sub, alpha, beta);
  std::map<std::string, double> sum;
  std::map<std::string, int> count;
  for (const auto& c : batch.contracts) {
    sum[c] = 0.0;
    count[c] = 0;
  }
  for (const auto& [key, s] : fs) {
    const auto& c = sub.node_meta().at(key).contract;
    sum[c] += s;
    ++count[c];
  }
  for (auto& [c, s] : sum) {
    if (count[c] > 0) s /= count[c];
  }
  return sum;
}

void rank(Batch& batch, const DependencyGraph& graph, double alpha, double beta) {
  batch.scores = score_contracts(batch, graph, alpha, beta);
  order_by_score(batch);
}

std::int64_t estimate_batch_tokens(const Batch& batch, const FactSet& facts) {
  std::size_t chars = 0;
  for (const auto& c : batch.contracts) {
    for (const auto* f : facts.functions_of(c)) {
      auto it = batch.truncated_bodies.find(f->key());
      chars += it == batch.truncated_bodies.end() ? f->body_text.size() : it->second.size();
    }
  }
  return estimate_tokens(chars);
}

const std::vector<std::string>& default_tag_vocabulary() {
  static const std::vector<std::string> tags{"Swap",    "Lending", "Governance", "Tokenomics",     "Oracle",
                                             "Staking", "Vault",   "Liquidity",  "Access-Control", "Misc"};
  return tags;
}

void ProfilerConfig::validate() const {
  check_weights(alpha, beta);
  if (token_limit <= 0) throw ConfigError("token limit must be positive");
  if (louvain_restarts < 1) throw ConfigError("louvain_restarts must be at least 1");
  if (tag_vocabulary.empty()) throw ConfigError("tag vocabulary must not be empty");
}

namespace {

std::string render_signatures(const Batch& batch, const FactSet& facts) {
  std::ostringstream os;
  for (const auto& c : batch.contracts) {
    os << "contract " << c << "\n";
    for (const auto* f : facts.functions_of(c)) os << "  " << to_string(f->visibility) << " " << f->signature << "\n";
  }
  return os.str();
}

std::vector<std::string> parse_tags(const std::string& reply, const std::vector<std::string>& vocabulary) {
  std::vector<std::string> out;
  for (const auto& raw : parse_string_list(reply, {"tags"})) {
    auto folded = fold_name(raw);
    for (const auto& tag : vocabulary) {
      if (fold_name(tag) == folded && std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(tag);
    }
  }
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return std::find(vocabulary.begin(), vocabulary.end(), a) < std::find(vocabulary.begin(), vocabulary.end(), b);
  });
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Batch> refine_batches(std::vector<Batch> batches, const DependencyGraph& graph, const FactSet& facts,
                                  ModelGateway& model, const ProfilerConfig& config) {
  const std::string system =
      "You classify groups of smart contracts by business purpose. Answer with a JSON object "
      "{\"tags\": [...]} using only tags from the allowed list.";
  for (auto& b : batches) {
    std::string user = "Allowed tags: " + join(config.tag_vocabulary, ", ") + "\n\nContracts in this group:\n" +
                       render_signatures(b, facts);
    try {
      b.tags = parse_tags(model.complete({"tag", system, user}).text, config.tag_vocabulary);
    } catch (const GatewayUnreachable&) {
      throw;
    } catch (const ModelError& e) {
      throw ModelError("tagging batch " + std::to_string(b.id) + ": " + e.what());
    }
  }

  DisjointSets sets(batches.size());
  std::map<std::string, std::size_t> first_with_tag;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    for (const auto& t : batches[i].tags) {
      auto [it, inserted] = first_with_tag.emplace(t, i);
      if (!inserted) sets.unite(it->second, i);
    }
  }

  std::vector<Batch> out;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    auto root = sets.find(i);
    auto it = slot.find(root);
    if (it == slot.end()) {
      slot.emplace(root, out.size());
      out.push_back(batches[i]);
      continue;
    }
    Batch& into = out[it->second];
    std::set<std::string> contracts(into.contracts.begin(), into.contracts.end());
    contracts.insert(batches[i].contracts.begin(), batches[i].contracts.end());
    into.contracts.assign(contracts.begin(), contracts.end());
    for (const auto& t : batches[i].tags) {
      if (std::find(into.tags.begin(), into.tags.end(), t) == into.tags.end()) into.tags.push_back(t);
    }
    for (const auto& p : batches[i].pruned_contracts) {
      if (std::find(into.pruned_contracts.begin(), into.pruned_contracts.end(), p) == into.pruned_contracts.end()) {
        into.pruned_contracts.push_back(p);
      }
    }
    into.truncated_bodies.insert(batches[i].truncated_bodies.begin(), batches[i].truncated_bodies.end());
  }
  const auto& vocab = config.tag_vocabulary;
  for (auto& b : out) {
    std::sort(b.tags.begin(), b.tags.end(), [&](const auto& x, const auto& y) {
      return std::find(vocab.begin(), vocab.end(), x) < std::find(vocab.begin(), vocab.end(), y);
    });
    rank(b, graph, config.alpha, config.beta);
    b.estimated_tokens = estimate_batch_tokens(b, facts);
  }
  return out;
}

namespace {

std::int64_t contract_tokens(const Batch& batch, const FactSet& facts, const std::string& contract) {
  Batch one;
  one.contracts = {contract};
  one.truncated_bodies = batch.truncated_bodies;
  return estimate_batch_tokens(one, facts);
}

std::optional<std::string> ask_removal(ModelGateway& model, const Batch& batch, const FactSet& facts,
                                       const std::vector<std::string>& candidates) {
  std::ostringstream user;
  user << "The audit context exceeds its token budget. Pick exactly one contract to drop, preferring "
          "standard library or template code whose removal loses the least protocol-specific logic.\n\n"
          "Candidates (name, estimated tokens, importance score):\n";
  for (const auto& c : candidates) {
    user << "- " << c << ", " << contract_tokens(batch, facts, c) << ", " << batch.scores.at(c) << "\n";
  }
  user << "\nAll contracts in the batch: " << join(batch.contracts, ", ") << "\n";
  const std::string system = "You reduce audit context size. Reply with JSON {\"remove\": \"<ContractName>\"}.";
  auto reply = model.complete({"prune", system, user.str()}).text;
  std::string pick;
  if (auto j = extract_json(reply); j && j->is_object() && j->contains("remove") && (*j)["remove"].is_string()) {
    pick = (*j)["remove"].get<std::string>();
  } else {
    pick = trim(strip_code_fence(reply));
  }
  if (std::find(candidates.begin(), candidates.end(), pick) != candidates.end()) return pick;
  return std::nullopt;
}

std::string header_only(const std::string& body) {
  auto brace = body.find('{');
  std::string head = trim(brace == std::string::npos ? body : body.substr(0, brace));
  return head + " { /* body omitted */ }";
}

}  // namespace

PruneResult prune_to_token_limit(Batch batch, const FactSet& facts, const DependencyGraph& graph, std::int64_t limit,
                                 ModelGateway* model, double alpha, double beta) {
  if (limit <= 0) throw ConfigError("token limit must be positive");
  PruneResult result;
  if (batch.scores.size() != batch.contracts.size()) rank(batch, graph, alpha, beta);
  batch.estimated_tokens = estimate_batch_tokens(batch, facts);

  while (batch.estimated_tokens > limit && batch.contracts.size() > 1) {
    std::vector<std::string> templates, others;
    for (std::size_t i = 1; i < batch.contracts.size(); ++i) {
      const auto& c = batch.contracts[i];
      if (contract_tokens(batch, facts, c) == 0) continue;
      const auto* cf = facts.find_contract(c);
      (cf && cf->is_template ? templates : others).push_back(c);
    }
    const auto* anchor = facts.find_contract(batch.contracts.front());
    if (anchor && anchor->is_template && contract_tokens(batch, facts, anchor->name) > 0) {
      templates.insert(templates.begin(), anchor->name);
    }
    std::vector<std::string> candidates = templates;
    if (candidates.empty()) {
      std::size_t half = std::max<std::size_t>(1, (others.size() + 1) / 2);
      candidates.assign(others.end() - static_cast<std::ptrdiff_t>(std::min(half, others.size())), others.end());
    }
    if (candidates.empty()) break;

    std::optional<std::string> pick;
    if (model) {
      pick = ask_removal(*model, batch, facts, candidates);
      if (!pick) result.warnings.push_back({"prune", "model reply named no valid candidate; removing lowest-ranked"});
    }
    std::string victim = pick.value_or(candidates.back());
    batch.contracts.erase(std::find(batch.contracts.begin(), batch.contracts.end(), victim));
    batch.pruned_contracts.push_back(victim);
    rank(batch, graph, alpha, beta);
    batch.estimated_tokens = estimate_batch_tokens(batch, facts);
  }

  if (batch.estimated_tokens > limit) {
    auto fs = function_scores(graph.induced_by_contracts(batch.contracts), alpha, beta);
    std::vector<const FunctionFact*> fns;
    for (const auto& c : batch.contracts) {
      for (const auto* f : facts.functions_of(c)) fns.push_back(f);
    }
    std::stable_sort(fns.begin(), fns.end(), [&](const auto* a, const auto* b) {
      double sa = fs.contains(a->key()) ? fs.at(a->key()) : 0.0;
      double sb = fs.contains(b->key()) ? fs.at(b->key()) : 0.0;
      return sa != sb ? sa < sb : a->key() < b->key();
    });
    for (const auto* f : fns) {
      if (batch.estimated_tokens <= limit) break;
      auto head = header_only(f->body_text);
      if (head.size() >= f->body_text.size()) continue;
      batch.truncated_bodies[f->key()] = head;
      batch.estimated_tokens = estimate_batch_tokens(batch, facts);
    }
    if (batch.estimated_tokens > limit) {
      throw UnprunableBatch("batch " + std::to_string(batch.id) + " needs " + std::to_string(batch.estimated_tokens) +
                            " tokens after truncation, limit is " + std::to_string(limit));
    }
    result.warnings.push_back({"prune", "batch " + std::to_string(batch.id) + ": truncated " +
                                            std::to_string(batch.truncated_bodies.size()) + " function bodies"});
  }
  result.batch = std::move(batch);
  return result;
}

nlohmann::json to_json(const BatchPlan& plan) {
  nlohmann::json batches = nlohmann::json::array();
  for (const auto& b : plan.batches) batches.push_back(to_json(b));
  nlohmann::json communities = nlohmann::json::array();
  for (const auto& c : plan.communities) communities.push_back({{"id", c.id}, {"members", c.members}});
  nlohmann::json warnings = plan.warnings;
  return {{"batches", batches}, {"communities", communities}, {"warnings", warnings}};
}

BatchPlan plan_batches(const FactSet& facts, const ProfilerConfig& config, ModelGateway* model) {
  config.validate();
  BatchPlan plan;
  auto graph = std::make_shared<DependencyGraph>(build_graph(facts));
  plan.graph = graph;

  std::vector<Batch> batches;
  if (!graph->empty()) {
    plan.communities = detect_communities(*graph, {config.seed, config.louvain_restarts});
    batches = communities_to_batches(plan.communities, facts);
    for (auto& b : batches) rank(b, *graph, config.alpha, config.beta);
    if (model && config.refine) batches = refine_batches(std::move(batches), *graph, facts, *model, config);
  }

  std::set<std::string> covered;
  for (const auto& b : batches) covered.insert(b.contracts.begin(), b.contracts.end());
  Batch rest;
  for (const auto& c : facts.contract_names()) {
    if (!covered.contains(c)) rest.contracts.push_back(c);
  }
  if (!rest.contracts.empty()) {
    rank(rest, *graph, config.alpha, config.beta);
    batches.push_back(std::move(rest));
    plan.warnings.push_back({"profile", "contracts without functions grouped into a separate batch"});
  }

  for (std::size_t i = 0; i < batches.size(); ++i) {
    batches[i].id = static_cast<int>(i);
    auto pruned = prune_to_token_limit(std::move(batches[i]), facts, *graph, config.token_limit, model, config.alpha,
                                       config.beta);
    plan.batches.push_back(std::move(pruned.batch));
    plan.warnings.insert(plan.warnings.end(), pruned.warnings.begin(), pruned.warnings.end());
  }
  return plan;
}

}  // namespace warden
