#include <doctest.h>

#include <numeric>
#include <random>

#include "helpers.hpp"
#include "warden/auditor.hpp"

using namespace warden;
using namespace testing_support;

namespace {

std::string start_step(int i) { return "h" + std::to_string(i) + "-start"; }
std::string end_step(int i) { return "h" + std::to_string(i) + "-end"; }

std::vector<VulnerabilityHypothesis> nodes(int n) {
  std::vector<VulnerabilityHypothesis> hs;
  for (int i = 0; i < n; ++i) {
    VulnerabilityHypothesis h;
    h.entry_point = {"C.f" + std::to_string(i) + "()", i + 1};
    h.category = "Cat" + std::to_string(i);
    h.reasoning_path = {start_step(i), end_step(i)};
    h.constraints = {"pre" + std::to_string(i)};
    h.origin = "base";
    hs.push_back(h);
  }
  assign_unique_ids(hs);
  return hs;
}

std::unique_ptr<ModelGateway> link_model(const std::vector<std::vector<bool>>& link) {
  nlohmann::json rules = nlohmann::json::array();
  for (std::size_t i = 0; i < link.size(); ++i)
    for (std::size_t j = 0; j < link.size(); ++j)
      if (link[i][j]) {
        rules.push_back({{"stage", "link"},
                         {"matcher", "Transition: " + end_step(static_cast<int>(i)) + " -> " +
                                         start_step(static_cast<int>(j)) + "\n"},
                         {"reply", nlohmann::json{{"link", true}, {"satisfied", {"pre" + std::to_string(j)}}}.dump()}});
      }
  rules.push_back({{"stage", "link"}, {"reply", R"({"link": false})"}});
  return scripted({{"strict", true}, {"rules", rules}});
}

int node_of(const std::string& step) { return std::stoi(step.substr(1, step.find('-') - 1)); }

std::vector<int> path_of(const VulnerabilityHypothesis& h) {
  std::vector<int> out;
  for (std::size_t k = 0; k < h.reasoning_path.size(); k += 2) out.push_back(node_of(h.reasoning_path[k]));
  return out;
}

}  // namespace

TEST_CASE("chaining joins paths and drops satisfied preconditions") {
  auto hs = nodes(2);
  hs[0].severity = Severity::Low;
  hs[1].severity = Severity::Critical;
  hs[1].constraints = {"pre1", "other"};
  auto c = chain(hs[0], hs[1], {"pre1"});
  CHECK(c.reasoning_path == std::vector<std::string>{"h0-start", "h0-end", "h1-start", "h1-end"});
  CHECK(c.constraints == std::vector<std::string>{"pre0", "other"});
  CHECK(c.severity == Severity::Critical);
  CHECK(c.category == "Cat0 + Cat1");
  CHECK(c.origin == "chained");
  CHECK(c.parents == std::vector<std::string>{hs[0].id, hs[1].id});
  CHECK(c.entry_point == hs[0].entry_point);
  CHECK(c.id == content_id(c));
}

TEST_CASE("chain-shaped link matrices yield exactly the maximal paths") {
  std::mt19937 rng(99);
  for (int round = 0; round < 60; ++round) {
    int n = 1 + round % 8;
    auto link = oracle::random_chain_matrix(n, rng);
    auto model = link_model(link);
    SynthesisStats stats;
    auto out = synthesize_chains(nodes(n), *model, 10000, &stats);
    std::set<std::vector<int>> got;
    for (const auto& h : out.value) got.insert(path_of(h));
    auto expected = oracle::maximal_paths(link);
    CAPTURE(round);
    CHECK(got == expected);
    CHECK(stats.merges == static_cast<std::size_t>(n) - expected.size());
    CHECK(stats.merges <= static_cast<std::size_t>(std::max(0, n - 1)));
    CHECK_FALSE(stats.budget_exhausted);
  }
}

TEST_CASE("arbitrary link matrices reach a fixpoint that keeps every step once") {
  std::mt19937 rng(123);
  std::bernoulli_distribution present(0.3);
  for (int round = 0; round < 60; ++round) {
    int n = 1 + round % 8;
    std::vector<std::vector<bool>> link(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) link[i][j] = present(rng);
    auto model = link_model(link);
    SynthesisStats stats;
    auto out = synthesize_chains(nodes(n), *model, 100000, &stats);
    CHECK(stats.merges <= static_cast<std::size_t>(n - 1));
    CHECK(out.value.size() == static_cast<std::size_t>(n) - stats.merges);
    std::vector<int> seen;
    for (const auto& h : out.value) {
      auto p = path_of(h);
      seen.insert(seen.end(), p.begin(), p.end());
    }
    std::sort(seen.begin(), seen.end());
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    CHECK(seen == all);
    for (const auto& a : out.value)
      for (const auto& b : out.value) {
        if (&a == &b) continue;
        CHECK_FALSE(link[path_of(a).back()][path_of(b).front()]);
      }
    auto again = synthesize_chains(out.value, *model, 100000);
    CHECK(again.value == out.value);
  }
}

TEST_CASE("pair budget stops synthesis with a warning") {
  std::vector<std::vector<bool>> none(6, std::vector<bool>(6, false));
  auto model = link_model(none);
  SynthesisStats stats;
  auto out = synthesize_chains(nodes(6), *model, 7, &stats);
  CHECK(stats.pairs_evaluated == 7);
  CHECK(stats.budget_exhausted);
  CHECK(out.value.size() == 6);
  CHECK(out.warnings.size() == 1);
  CHECK(model->ledger().size() == 7);
}

TEST_CASE("each ordered pair is asked at most once") {
  std::vector<std::vector<bool>> none(5, std::vector<bool>(5, false));
  auto model = link_model(none);
  SynthesisStats stats;
  synthesize_chains(nodes(5), *model, 1000, &stats);
  CHECK(stats.pairs_evaluated == 20);
  CHECK(model->ledger().size() == 20);
}
