#include <algorithm>
#include <map>
#include <sstream>

#include "warden/auditor.hpp"
#include "warden/error.hpp"

namespace warden {

VulnerabilityHypothesis chain(const VulnerabilityHypothesis& a, const VulnerabilityHypothesis& b,
                              const std::vector<std::string>& satisfied) {
  VulnerabilityHypothesis h;
  h.entry_point = a.entry_point;
  h.reasoning_path = a.reasoning_path;
  h.reasoning_path.insert(h.reasoning_path.end(), b.reasoning_path.begin(), b.reasoning_path.end());
  auto keep = [&](const std::string& c) {
    return std::find(satisfied.begin(), satisfied.end(), c) == satisfied.end() &&
           std::find(h.constraints.begin(), h.constraints.end(), c) == h.constraints.end();
  };
  for (const auto& c : a.constraints) {
    if (keep(c)) h.constraints.push_back(c);
  }
  for (const auto& c : b.constraints) {
    if (keep(c)) h.constraints.push_back(c);
  }
  h.category = a.category == b.category ? a.category : a.category + " + " + b.category;
  h.severity = max_severity(a.severity, b.severity);
  h.origin = "chained";
  h.parents = {a.id, b.id};
  h.batch_id = a.batch_id;
  h.id = content_id(h);
  return h;
}

namespace {

std::string describe(const VulnerabilityHypothesis& h) {
  std::ostringstream os;
  os << "id: " << h.id << "\nentry: " << h.entry_point.function << ":" << h.entry_point.line
     << "\ncategory: " << h.category << "\npreconditions:\n";
  for (const auto& c : h.constraints) os << "- " << c << "\n";
  os << "steps:\n";
  for (std::size_t i = 0; i < h.reasoning_path.size(); ++i) os << (i + 1) << ". " << h.reasoning_path[i] << "\n";
  return os.str();
}

struct LinkVerdict {
  bool link = false;
  std::vector<std::string> satisfied;
};

}  // namespace

Staged<std::vector<VulnerabilityHypothesis>> synthesize_chains(std::vector<VulnerabilityHypothesis> hs,
                                                               ModelGateway& model, std::size_t max_pairs,
                                                               SynthesisStats* stats) {
  Staged<std::vector<VulnerabilityHypothesis>> out;
  SynthesisStats local;
  std::map<std::pair<std::string, std::string>, LinkVerdict> cache;
  const std::string system =
      "You decide whether two vulnerability hypotheses compose into a single exploit, meaning the state left "
      "behind by the first one satisfies the preconditions of the second. Reply with JSON "
      "{\"link\": true|false, \"satisfied\": [\"preconditions of the second hypothesis that the first establishes\"]}.";

  auto evaluate = [&](const VulnerabilityHypothesis& a, const VulnerabilityHypothesis& b) {
    LinkVerdict v;
    std::string user = "Transition: " + a.reasoning_path.back() + " -> " + b.reasoning_path.front() +
                       "\n\n## First hypothesis\n" + describe(a) + "\n## Second hypothesis\n" + describe(b);
    try {
      auto reply = model.complete({"link", system, user}).text;
      v.link = parse_verdict(reply, {"link", "linked"}) == true;
      if (v.link) {
        for (const auto& s : parse_string_list(reply, {"satisfied"})) {
          if (std::find(b.constraints.begin(), b.constraints.end(), s) != b.constraints.end()) v.satisfied.push_back(s);
        }
      }
    } catch (const GatewayUnreachable&) {
      throw;
    } catch (const ModelError& e) {
      out.warnings.push_back({"link", a.id + " -> " + b.id + ": " + e.what() + "; treated as no link"});
    }
    return v;
  };

  bool merged = true;
  while (merged && !local.budget_exhausted) {
    merged = false;
    std::sort(hs.begin(), hs.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    for (std::size_t i = 0; i < hs.size() && !merged && !local.budget_exhausted; ++i) {
      for (std::size_t j = 0; j < hs.size(); ++j) {
        if (i == j || hs[i].reasoning_path.empty() || hs[j].reasoning_path.empty()) continue;
        auto key = std::make_pair(hs[i].id, hs[j].id);
        auto it = cache.find(key);
        if (it == cache.end()) {
          if (local.pairs_evaluated >= max_pairs) {
            local.budget_exhausted = true;
            out.warnings.push_back({"link", "pair budget of " + std::to_string(max_pairs) + " evaluations exhausted"});
            break;
          }
          ++local.pairs_evaluated;
          it = cache.emplace(key, evaluate(hs[i], hs[j])).first;
        }
        if (!it->second.link) continue;
        auto c = chain(hs[i], hs[j], it->second.satisfied);
        std::string base = c.id;
        for (int n = 2; std::any_of(hs.begin(), hs.end(), [&](const auto& x) { return x.id == c.id; }); ++n) {
          c.id = base + "-" + std::to_string(n);
        }
        hs.erase(hs.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
        hs.erase(hs.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
        hs.push_back(std::move(c));
        ++local.merges;
        merged = true;
        break;
      }
    }
  }
  std::sort(hs.begin(), hs.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  out.value = std::move(hs);
  if (stats) *stats = local;
  return out;
}

}  // namespace warden
