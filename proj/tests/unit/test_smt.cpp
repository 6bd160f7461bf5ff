#include <doctest.h>

#include "helpers.hpp"
#include "warden/auditor.hpp"
#include "warden/smt.hpp"

using namespace warden;
using namespace testing_support;

namespace {

class FakeSolver : public SolverRunner {
 public:
  std::vector<SolverResult> replies;
  std::vector<std::string> scripts;

  SolverResult run(const std::string& script, int) override {
    scripts.push_back(script);
    auto r = replies.at(std::min(scripts.size() - 1, replies.size() - 1));
    return r;
  }
};

std::string toy_script() {
  auto pack = nlohmann::json::parse(read_file(fixture("scenarios/muldown.json").string()));
  for (const auto& r : pack["rules"])
    if (r["stage"] == "transpile") {
      auto text = r["reply"].get<std::string>();
      auto start = text.find('\n') + 1;
      return text.substr(start, text.rfind("```") - start);
    }
  return {};
}

}  // namespace

TEST_CASE("solver output parsing") {
  auto sat = parse_solver_output("sat\n(\n  (define-fun x () Int 3)\n)\n");
  CHECK(sat.outcome == SolverOutcome::Sat);
  CHECK(sat.model_text.find("define-fun x") != std::string::npos);
  CHECK(parse_solver_output("unsat\n").outcome == SolverOutcome::Unsat);
  CHECK(parse_solver_output("unknown\n").outcome == SolverOutcome::Unknown);
  CHECK(parse_solver_output("timeout\n").outcome == SolverOutcome::Timeout);
  auto err = parse_solver_output("(error \"line 1: unknown constant y\")\nsat\n");
  CHECK(err.outcome == SolverOutcome::Unknown);
  CHECK(err.message.find("unknown constant") != std::string::npos);
  CHECK(parse_solver_output("").outcome == SolverOutcome::Unknown);
}

TEST_CASE("declared symbols and model values") {
  std::string script =
      "(declare-const a (_ BitVec 256))\n(declare-fun n () Int)\n(declare-fun f (Int) Int)\n"
      "(declare-const ok Bool)\n(define-fun g () Int 4)\n";
  auto syms = declared_symbols(script);
  REQUIRE(syms.size() == 3);
  CHECK(syms[0] == SmtSymbol{"a", "(_ BitVec 256)", 256});
  CHECK(syms[1] == SmtSymbol{"n", "Int", 0});
  CHECK(syms[2].name == "ok");

  auto values = parse_model_values(
      "(\n  (define-fun a () (_ BitVec 8) #xff)\n  (define-fun b () (_ BitVec 4) #b0101)\n"
      "  (define-fun n () Int (- 7))\n  (define-fun ok () Bool true)\n"
      "  (define-fun w () (_ BitVec 16) (_ bv300 16))\n"
      "  (define-fun derived () Int (+ n 1))\n  (define-fun h ((x Int)) Int x)\n)");
  CHECK(values == std::map<std::string, std::string>{{"a", "255"}, {"b", "5"}, {"n", "-7"}, {"ok", "true"}, {"w", "300"}});
}

TEST_CASE("realism constraints follow symbol roles") {
  std::vector<SmtSymbol> syms{{"userBalance", "(_ BitVec 256)", 256}, {"rounds", "(_ BitVec 256)", 256},
                              {"amount", "(_ BitVec 256)", 256},     {"small", "(_ BitVec 64)", 64},
                              {"account", "Int", 0},                 {"loopCount", "Int", 0}};
  auto c = default_realism_constraints(syms, {128, 50});
  CHECK(c == std::vector<std::string>{
                 "(bvsge userBalance (_ bv0 256))",
                 "(bvule rounds (_ bv50 256))",
                 "(bvule amount (_ bv340282366920938463463374607431768211456 256))",
                 "(>= account 0)",
                 "(<= account 340282366920938463463374607431768211456)",
                 "(>= loopCount 0)",
                 "(<= loopCount 50)",
             });
}

TEST_CASE("realism assertions go before check-sat") {
  auto out = attach_realism("(declare-const x Int)\n(check-sat)\n", {"(> x 1)"});
  CHECK(out == "(declare-const x Int)\n(assert (> x 1))\n(check-sat)\n(get-model)\n");
  auto bare = attach_realism("(declare-const x Int)", {"(> x 1)"});
  CHECK(bare == "(declare-const x Int)\n(assert (> x 1))\n(check-sat)\n(get-model)\n");
  auto kept = attach_realism("(check-sat)\n(get-model)\n", {});
  CHECK(kept == "(check-sat)\n(get-model)\n");
}

TEST_CASE("literals per sort") {
  CHECK(smt_literal({"a", "(_ BitVec 8)", 8}, "200") == "(_ bv200 8)");
  CHECK(smt_literal({"n", "Int", 0}, "-3") == "(- 3)");
  CHECK(smt_literal({"n", "Int", 0}, "12") == "12");
  CHECK(smt_literal({"b", "Bool", 0}, "true") == "true");
}

TEST_CASE("process runner drives z3 and enforces the deadline") {
  ProcessSolverRunner z3(WARDEN_Z3_PATH);
  auto sat = z3.run("(declare-const x Int)\n(assert (> x 41))\n(assert (< x 43))\n(check-sat)\n(get-model)\n", 10000);
  REQUIRE(sat.outcome == SolverOutcome::Sat);
  CHECK(parse_model_values(sat.model_text).at("x") == "42");
  CHECK(z3.run("(assert false)\n(check-sat)\n", 10000).outcome == SolverOutcome::Unsat);
  CHECK(z3.run("(assert (> y 0))\n(check-sat)\n", 10000).outcome == SolverOutcome::Unknown);

  ProcessSolverRunner sleeper("/bin/sh", {"-c", "sleep 20"});
  auto start = std::chrono::steady_clock::now();
  CHECK(sleeper.run("", 300).outcome == SolverOutcome::Timeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));

  ProcessSolverRunner missing("/nonexistent/solver");
  auto r = missing.run("(check-sat)", 1000);
  CHECK(r.outcome == SolverOutcome::Unknown);
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("re-substituting a model replays sat, a wrong one replays unsat") {
  ProcessSolverRunner z3(WARDEN_Z3_PATH);
  std::string script = "(declare-const x Int)\n(assert (> (* x x) 50))\n(assert (< x 10))\n(assert (> x 0))\n(check-sat)\n";
  CHECK(recheck_model(script, {{"x", "8"}}, z3, 10000).outcome == SolverOutcome::Sat);
  CHECK(recheck_model(script, {{"x", "3"}}, z3, 10000).outcome == SolverOutcome::Unsat);
}

TEST_CASE("every solution of the compounding toy is a brute-force drift witness") {
  auto expected = oracle::drift_search(1, 4096, 1100, 5, 1, 4);
  REQUIRE_FALSE(expected.empty());
  ProcessSolverRunner z3(WARDEN_Z3_PATH);
  std::string script = toy_script();
  REQUIRE_FALSE(script.empty());
  std::set<std::int64_t> found;
  for (int guard = 0; guard < 64; ++guard) {
    std::string blocked = script;
    std::string blocks;
    for (auto v : found) blocks += "(assert (not (= amount (_ bv" + std::to_string(v) + " 128))))\n";
    blocked.insert(blocked.find("(check-sat)"), blocks);
    auto r = z3.run(blocked, 30000);
    if (r.outcome == SolverOutcome::Unsat) break;
    REQUIRE(r.outcome == SolverOutcome::Sat);
    found.insert(std::stoll(parse_model_values(r.model_text).at("amount")));
  }
  CHECK(found == std::set<std::int64_t>(expected.begin(), expected.end()));
}

TEST_CASE("transpile and solve on the compounding fixture") {
  auto facts = load_project(fixture("muldown")).facts;
  auto model = scripted_file("scenarios/muldown.json");
  ProcessSolverRunner z3(WARDEN_Z3_PATH);
  auto p = transpile_and_solve(*facts.find_function("Pool.compound(uint256)"), *model, z3);
  REQUIRE(p.outcome == SolverOutcome::Sat);
  auto expected = oracle::drift_search(1, 4096, 1100, 5, 1, 4);
  auto amount = std::stoll(p.model_values.at("amount"));
  CHECK(std::find(expected.begin(), expected.end(), amount) != expected.end());
  CHECK(p.model_values.size() == 1);
  CHECK(recheck_model(p.script_text, p.model_values, z3, 10000).outcome == SolverOutcome::Sat);
}

TEST_CASE("a sat model that fails replay is downgraded") {
  auto facts = load_project(fixture("muldown")).facts;
  auto model = scripted_file("scenarios/muldown.json");
  FakeSolver solver;
  solver.replies = {{SolverOutcome::Sat, "((define-fun amount () (_ BitVec 128) (_ bv1 128)))", ""},
                    {SolverOutcome::Unsat, "", ""}};
  auto p = transpile_and_solve(*facts.find_function("Pool.compound(uint256)"), *model, solver);
  CHECK(p.outcome == SolverOutcome::Unknown);
  REQUIRE(solver.scripts.size() == 2);
  CHECK(solver.scripts[1].find("(assert (= amount (_ bv1 128)))") != std::string::npos);
}

TEST_CASE("unusable transpiler output is reported, not solved") {
  auto facts = load_project(fixture("muldown")).facts;
  auto model = scripted(nlohmann::json::array({{{"stage", "transpile"}, {"reply", "I cannot encode this."}}}));
  FakeSolver solver;
  solver.replies = {{SolverOutcome::Unknown, "", "(error \"bad\")"}};
  auto p = transpile_and_solve(*facts.find_function("Pool.compound(uint256)"), *model, solver);
  CHECK(p.outcome == SolverOutcome::Unknown);
  CHECK(p.model_values.empty());
}
