#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "warden/error.hpp"
#include "warden/facts.hpp"

using namespace warden;
using testing_support::fixture;

namespace {

FactSet scan(const std::string& rel) { return load_project(fixture(rel)).facts; }

std::vector<std::string> keys(const FactSet& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs.functions) out.push_back(f.key());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("scanner finds every contract and function of the three-file fixture") {
  auto fs = scan("graph3");
  CHECK(fs.contract_names() == std::vector<std::string>{"Router", "Token", "Vault"});
  CHECK(keys(fs) == std::vector<std::string>{
                        "Router._record(uint256)", "Router.exit(uint256)", "Router.route(uint256)",
                        "Token._credit(address,uint256)", "Token.mint(address,uint256)",
                        "Token.transfer(address,uint256)", "Vault.deposit(uint256)", "Vault.sharePrice()",
                        "Vault.withdraw(uint256)"});
  const auto* credit = fs.find_function("Token._credit(address,uint256)");
  REQUIRE(credit);
  CHECK(credit->visibility == Visibility::Internal);
  CHECK(credit->source_span.start_line == 19);
  CHECK(credit->source_span.end_line == 21);
  CHECK(credit->body_text.find("balanceOf[to] += amount;") != std::string::npos);
}

TEST_CASE("scanner and hand-written facts agree on resolved calls and accesses") {
  auto scanned = scan("graph3");
  auto hand = load_fact_file(read_file(fixture("graph3.facts.json").string()));
  auto resolved = [](const FactSet& fs) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& c : fs.calls)
      if (c.resolved) out.emplace(c.caller, c.callee);
    return out;
  };
  auto accesses = [](const FactSet& fs) {
    std::set<std::tuple<std::string, std::string, AccessMode>> out;
    for (const auto& a : fs.state_accesses) out.emplace(a.function, a.variable, a.mode);
    return out;
  };
  CHECK(resolved(scanned) == resolved(hand));
  CHECK(accesses(scanned) == accesses(hand));
}

TEST_CASE("contract kinds, templates and modifiers") {
  auto fs = scan("minivault");
  REQUIRE(fs.find_contract("IERC20"));
  CHECK(fs.find_contract("IERC20")->kind == ContractKind::Interface);
  CHECK(fs.find_contract("ShareMath")->kind == ContractKind::Library);
  CHECK(fs.find_contract("Ownable")->kind == ContractKind::Abstract);
  CHECK(fs.find_contract("Ownable")->is_template);
  CHECK_FALSE(fs.find_contract("MiniVault")->is_template);
  CHECK(fs.functions_of("Constants").empty());
  const auto* set_fee = fs.find_function("MiniVault.setFee(uint256)");
  REQUIRE(set_fee);
  CHECK(set_fee->modifiers == std::vector<std::string>{"onlyOwner"});
}

TEST_CASE("calls through an interface stay unresolved") {
  auto fs = scan("ioracle");
  bool found = false;
  for (const auto& c : fs.calls) {
    if (c.caller == "Lender.borrow(uint256)" && c.callee.find("latestPrice") != std::string::npos) {
      found = true;
      CHECK_FALSE(c.resolved);
    }
  }
  CHECK(found);
}

TEST_CASE("library calls through using-for resolve to the library") {
  auto fs = scan("muldown");
  bool found = false;
  for (const auto& c : fs.calls) {
    if (c.caller == "Pool.compound(uint256)" && c.callee == "FixedPoint.mulDown(uint256,uint256)") found = c.resolved;
  }
  CHECK(found);
}

TEST_CASE("fact files round-trip") {
  for (const char* dir : {"graph3", "minivault", "reentrancy", "ioracle", "muldown", "timestamp"}) {
    CAPTURE(dir);
    auto fs = scan(dir);
    auto again = load_fact_file(dump_fact_file(fs));
    CHECK(again == fs);
    CHECK(dump_fact_file(again) == dump_fact_file(fs));
  }
}

TEST_CASE("fact file validation") {
  auto base = nlohmann::json::parse(read_file(fixture("graph3.facts.json").string()));
  SUBCASE("missing version") {
    auto j = base;
    j.erase("version");
    CHECK_THROWS_AS(load_fact_file(j.dump()), SchemaError);
  }
  SUBCASE("dangling call") {
    auto j = base;
    j["calls"].push_back({{"caller", "Nobody.x()"}, {"callee", "Token.mint(address,uint256)"}, {"resolved", true}});
    CHECK_THROWS_AS(load_fact_file(j.dump()), DanglingReference);
  }
  SUBCASE("duplicate function") {
    auto j = base;
    j["functions"].push_back(j["functions"][0]);
    CHECK_THROWS_AS(load_fact_file(j.dump()), SchemaError);
  }
  SUBCASE("wrong type") {
    auto j = base;
    j["contracts"][0]["line_count"] = "many";
    CHECK_THROWS_AS(load_fact_file(j.dump()), SchemaError);
  }
  SUBCASE("not json") { CHECK_THROWS_AS(load_fact_file("{"), SchemaError); }
}

TEST_CASE("merging fact sets") {
  auto a = scan("graph3");
  auto b = scan("reentrancy");
  CHECK(merge_fact_sets(a, a) == a);
  auto ab = merge_fact_sets(a, b);
  auto ba = merge_fact_sets(b, a);
  CHECK(keys(ab) == keys(ba));
  CHECK(ab.contract_names() == ba.contract_names());
  CHECK(ab.functions.size() == a.functions.size() + b.functions.size());

  auto clash = b;
  clash.contracts[0].name = "Token";
  for (auto& f : clash.functions) f.contract = "Token";
  for (auto& c : clash.calls) {
    c.caller.replace(0, c.caller.find('.'), "Token");
    if (c.resolved) c.callee.replace(0, c.callee.find('.'), "Token");
  }
  for (auto& s : clash.state_accesses) s.function.replace(0, s.function.find('.'), "Token");
  CHECK_THROWS_AS(merge_fact_sets(a, clash), ConflictingDefinition);
}

TEST_CASE("missing project directory") {
  CHECK_THROWS_AS(load_project(fixture("does-not-exist")), MissingDirectory);
}

TEST_CASE("comment and string blanking keeps layout") {
  std::string src = "a = 1; // call x()\n/* y()\n z() */ s = \"f()\";\n";
  auto out = blank_comments_and_strings(src);
  CHECK(out.size() == src.size());
  CHECK(std::count(out.begin(), out.end(), '\n') == std::count(src.begin(), src.end(), '\n'));
  CHECK(out.find("x()") == std::string::npos);
  CHECK(out.find("z()") == std::string::npos);
  CHECK(out.find("f()") == std::string::npos);
  CHECK(out.find("a = 1;") == 0);
}
