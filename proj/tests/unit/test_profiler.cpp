#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "warden/error.hpp"
#include "warden/profiler.hpp"

using namespace warden;
using namespace testing_support;

namespace {

Batch whole_project(const FactSet& facts) {
  Batch b;
  b.contracts = facts.contract_names();
  return b;
}

std::set<std::string> covered(const std::vector<Batch>& batches) {
  std::set<std::string> out;
  for (const auto& b : batches) {
    out.insert(b.contracts.begin(), b.contracts.end());
    out.insert(b.pruned_contracts.begin(), b.pruned_contracts.end());
  }
  return out;
}

std::int64_t whole_tokens(const FactSet& facts) { return estimate_batch_tokens(whole_project(facts), facts); }

}  // namespace

TEST_CASE("hub contract ranks first across the weight grid") {
  auto facts = load_project(fixture("hubspoke")).facts;
  auto g = build_graph(facts);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      if (i == 0 && j == 0) continue;
      auto b = whole_project(facts);
      rank(b, g, i * 0.25, j * 0.25);
      CAPTURE(i);
      CAPTURE(j);
      CHECK(b.contracts.front() == "Hub");
    }
}

TEST_CASE("contract score is the mean of function scores") {
  auto facts = load_project(fixture("graph3")).facts;
  auto g = build_graph(facts);
  auto b = whole_project(facts);
  auto scores = score_contracts(b, g, 0.3, 0.7);
  auto table = centrality_scores(g);
  for (const auto& c : facts.contract_names()) {
    double sum = 0.0;
    int count = 0;
    for (const auto* f : facts.functions_of(c)) {
      sum += 0.3 * table.betweenness.at(f->key()) + 0.7 * table.pagerank.at(f->key());
      ++count;
    }
    CHECK(scores.at(c) == doctest::Approx(sum / count));
  }
}

TEST_CASE("scoring uses the batch-induced subgraph") {
  auto facts = load_project(fixture("graph3")).facts;
  auto g = build_graph(facts);
  Batch b;
  b.contracts = {"Vault"};
  auto scores = score_contracts(b, g, 1.0, 0.0);
  auto sub = centrality_scores(g.induced_by_contracts({"Vault"}));
  double sum = 0.0;
  for (const auto& [k, v] : sub.betweenness) sum += v;
  CHECK(scores.at("Vault") == doctest::Approx(sum / 3.0));
}

TEST_CASE("invalid weights and empty batches are rejected") {
  auto facts = load_project(fixture("graph3")).facts;
  auto g = build_graph(facts);
  auto b = whole_project(facts);
  CHECK_THROWS_AS(rank(b, g, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(rank(b, g, -0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(rank(b, g, 0.5, std::nan("")), ConfigError);
  Batch empty;
  CHECK_THROWS_AS(score_contracts(empty, g, 0.5, 0.5), EmptyBatch);
}

TEST_CASE("communities mapping to the same contracts collapse") {
  auto facts = load_project(fixture("graph3")).facts;
  std::vector<Community> communities{{0, {"Token.mint(address,uint256)"}},
                                     {1, {"Token._credit(address,uint256)"}},
                                     {2, {"Vault.deposit(uint256)", "Router.route(uint256)"}}};
  auto batches = communities_to_batches(communities, facts);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].contracts == std::vector<std::string>{"Token"});
  CHECK(batches[1].contracts == std::vector<std::string>{"Router", "Vault"});
  CHECK_THROWS_AS(communities_to_batches({{0, {"Ghost.f()"}}}, facts), UnknownFunction);
}

TEST_CASE("tag refinement merges exactly the transitive closure of shared tags") {
  const std::vector<std::string> vocab{"Swap", "Lending", "Vault", "Oracle", "Staking"};
  for (std::uint32_t seed = 0; seed < 15; ++seed) {
    std::mt19937 rng(seed);
    const int n = 8;
    auto facts = synthetic_project(n, 1, 40, 0.0, rng);
    auto g = build_graph(facts);
    std::vector<Batch> batches;
    std::vector<std::set<int>> tags(n);
    nlohmann::json rules = nlohmann::json::array();
    std::uniform_int_distribution<int> count(0, 2), pick(0, static_cast<int>(vocab.size()) - 1);
    for (int i = 0; i < n; ++i) {
      Batch b;
      b.id = i;
      b.contracts = {facts.contracts[i].name};
      batches.push_back(b);
      int k = count(rng);
      for (int t = 0; t < k; ++t) tags[i].insert(pick(rng));
      nlohmann::json names = nlohmann::json::array();
      for (int t : tags[i]) names.push_back(vocab[t]);
      names.push_back("NotATag");
      rules.push_back({{"stage", "tag"},
                       {"matcher", "contract " + facts.contracts[i].name + "\n"},
                       {"reply", nlohmann::json{{"tags", names}}.dump()}});
    }
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) reach[i][j] = true;
        for (int t : tags[i])
          if (tags[j].contains(t)) reach[i][j] = true;
      }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::set<std::set<std::string>> expected;
    for (int i = 0; i < n; ++i) {
      std::set<std::string> group;
      for (int j = 0; j < n; ++j)
        if (reach[i][j]) group.insert(facts.contracts[j].name);
      expected.insert(group);
    }

    auto model = scripted({{"strict", true}, {"rules", rules}});
    ProfilerConfig config;
    config.tag_vocabulary = vocab;
    auto refined = refine_batches(batches, g, facts, *model, config);
    std::set<std::set<std::string>> got;
    for (const auto& b : refined) {
      got.emplace(b.contracts.begin(), b.contracts.end());
      for (const auto& t : b.tags) CHECK(std::find(vocab.begin(), vocab.end(), t) != vocab.end());
    }
    CAPTURE(seed);
    CHECK(got == expected);
    CHECK(refined.size() == expected.size());
  }
}

TEST_CASE("pruning drops templates first") {
  auto facts = load_project(fixture("minivault")).facts;
  auto g = build_graph(facts);
  auto rest = whole_project(facts);
  std::erase(rest.contracts, "Ownable");
  auto limit = estimate_batch_tokens(rest, facts);
  REQUIRE(limit < whole_tokens(facts));
  auto result = prune_to_token_limit(whole_project(facts), facts, g, limit, nullptr);
  CHECK(result.batch.pruned_contracts == std::vector<std::string>{"Ownable"});
  CHECK(result.batch.estimated_tokens <= limit);
  CHECK(result.batch.truncated_bodies.empty());
}

TEST_CASE("pruning follows a valid model pick and falls back on an invalid one") {
  std::mt19937 rng(4);
  auto facts = synthetic_project(6, 2, 400, 0.15, rng);
  auto g = build_graph(facts);
  auto total = whole_tokens(facts);
  auto limit = total - 150;

  auto base = whole_project(facts);
  rank(base, g, 0.5, 0.5);
  std::vector<std::string> bottom(base.contracts.end() - 3, base.contracts.end());

  auto good = scripted(nlohmann::json::array({{{"stage", "prune"}, {"matcher", ""}, {"reply", nlohmann::json{{"remove", bottom.front()}}.dump()}}}));
  auto r1 = prune_to_token_limit(base, facts, g, limit, good.get());
  CHECK(r1.batch.pruned_contracts == std::vector<std::string>{bottom.front()});
  CHECK(r1.warnings.empty());

  auto bad = scripted(nlohmann::json::array({{{"stage", "prune"}, {"matcher", ""}, {"reply", nlohmann::json{{"remove", base.contracts.front()}}.dump()}}}));
  auto r2 = prune_to_token_limit(base, facts, g, limit, bad.get());
  CHECK(r2.batch.pruned_contracts == std::vector<std::string>{bottom.back()});
  CHECK(r2.warnings.size() == 1);

  auto r3 = prune_to_token_limit(base, facts, g, limit, nullptr);
  CHECK(r3.batch.pruned_contracts == std::vector<std::string>{bottom.back()});
}

TEST_CASE("the last contract standing is truncated, then refused") {
  auto facts = load_project(fixture("reentrancy")).facts;
  auto g = build_graph(facts);
  auto total = whole_tokens(facts);
  auto result = prune_to_token_limit(whole_project(facts), facts, g, total - 10, nullptr);
  CHECK(result.batch.pruned_contracts.empty());
  CHECK_FALSE(result.batch.truncated_bodies.empty());
  CHECK(result.batch.estimated_tokens <= total - 10);
  for (const auto& [key, head] : result.batch.truncated_bodies) {
    CHECK(head.ends_with("{ /* body omitted */ }"));
    CHECK(head.starts_with("function "));
  }
  CHECK_THROWS_AS(prune_to_token_limit(whole_project(facts), facts, g, 5, nullptr), UnprunableBatch);
}

TEST_CASE("plans cover every contract of every fixture") {
  for (const char* dir : {"graph3", "hubspoke", "reentrancy", "muldown", "minivault", "ioracle", "timestamp", "ablation"}) {
    CAPTURE(dir);
    auto facts = load_project(fixture(dir)).facts;
    auto plan = plan_batches(facts, {}, nullptr);
    auto names = facts.contract_names();
    CHECK(covered(plan.batches) == std::set<std::string>(names.begin(), names.end()));
    for (const auto& b : plan.batches) {
      CHECK(b.estimated_tokens <= 32000);
      CHECK(b.estimated_tokens == estimate_batch_tokens(b, facts));
    }
  }
}

TEST_CASE("contracts without functions land in a separate batch") {
  auto facts = load_project(fixture("minivault")).facts;
  auto plan = plan_batches(facts, {}, nullptr);
  REQUIRE_FALSE(plan.batches.empty());
  CHECK(plan.batches.back().contracts == std::vector<std::string>{"Constants"});
  bool warned = false;
  for (const auto& w : plan.warnings) warned |= w.source == "profile";
  CHECK(warned);
}

TEST_CASE("a large project is pruned under the limit without losing contracts") {
  std::mt19937 rng(21);
  auto facts = synthetic_project(30, 6, 900, 0.01, rng);
  REQUIRE(whole_tokens(facts) > 32000);
  ProfilerConfig config;
  config.token_limit = 4000;
  auto plan = plan_batches(facts, config, nullptr);
  auto names = facts.contract_names();
  CHECK(covered(plan.batches) == std::set<std::string>(names.begin(), names.end()));
  for (const auto& b : plan.batches) CHECK(b.estimated_tokens <= 4000);
}

TEST_CASE("plans are deterministic") {
  auto facts = load_project(fixture("graph3")).facts;
  auto a = plan_batches(facts, {}, nullptr);
  auto b = plan_batches(facts, {}, nullptr);
  CHECK(a.batches == b.batches);
  CHECK(a.communities == b.communities);
}
