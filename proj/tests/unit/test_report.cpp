#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "helpers.hpp"
#include "warden/cli.hpp"

using namespace warden;
using namespace testing_support;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  ::setenv("WARDEN_Z3", WARDEN_Z3_PATH, 1);
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

VulnerabilityHypothesis hyp(const std::string& category) {
  VulnerabilityHypothesis h;
  h.entry_point = {"Bank.withdraw(uint256)", 18};
  h.category = category;
  h.severity = Severity::High;
  h.reasoning_path = {"call", "re-enter"};
  h.origin = "base";
  h.id = content_id(h);
  return h;
}

AuditReport sample_report() {
  AuditReport r;
  r.project_name = "sample";
  r.tool_version = "1.0";
  r.v_raw = {hyp("Reentrancy"), hyp("Reentrancy twin"), hyp("Spoofed")};
  r.verdicts = {{r.v_raw[0].id, VerdictStage::Dedup, "kept", ""},
                {r.v_raw[1].id, VerdictStage::Dedup, "merged_into:" + r.v_raw[0].id, ""},
                {r.v_raw[2].id, VerdictStage::ThreatModel, "dropped", "needs owner key"}};
  r.timing_ms["total"] = 12.5;
  classify(r, {r.v_raw[0]});
  return r;
}

}  // namespace

TEST_CASE("classification accounts for every raw hypothesis once") {
  auto r = sample_report();
  CHECK(r.findings.size() == 1);
  REQUIRE(r.filtered.size() == 1);
  CHECK(r.filtered[0].verdict.rationale == "needs owner key");
  REQUIRE(r.merged.size() == 1);
  CHECK(r.merged[0].merged_into == r.v_raw[0].id);
  CHECK(accounting_holds(r));

  auto lost = r;
  lost.filtered.clear();
  CHECK_FALSE(accounting_holds(lost));
  auto doubled = r;
  doubled.findings.push_back(r.v_raw[2]);
  CHECK_FALSE(accounting_holds(doubled));
}

TEST_CASE("report json carries accounting and hides timing on request") {
  auto r = sample_report();
  auto j = to_json(r, false);
  CHECK(j["accounting"]["raw"] == 3);
  CHECK(j["accounting"]["balanced"] == true);
  CHECK(j["filtered"][0]["dropped_at"] == std::string(to_string(VerdictStage::ThreatModel)));
  CHECK(j["findings"][0]["verdict_trail"].size() == 1);
  CHECK_FALSE(j.contains("timing_ms"));
  CHECK(to_json(r, true)["timing_ms"]["total"] == 12.5);
}

TEST_CASE("markdown report sections") {
  auto md = render_markdown(sample_report());
  for (const char* heading : {"# Audit report: sample", "## Findings", "## Filtered", "## Merged duplicates", "## Usage"})
    CHECK(md.find(heading) != std::string::npos);
  CHECK(md.find("needs owner key") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"audit"}).code == 2);
  CHECK(cli({"audit", "/nonexistent/project", "--scenario", fixture("scenarios/ablation.json").string()}).code == 2);
  CHECK(cli({"profile", fixture("graph3").string(), "--bogus"}).code == 2);
  CHECK(cli({"--version"}).code == 0);

  ::setenv("WARDEN_ENDPOINT_URL", "http://127.0.0.1:9/v1", 1);
  ::setenv("WARDEN_MAX_RETRIES", "0", 1);
  auto unreachable = cli({"audit", fixture("reentrancy").string()});
  ::unsetenv("WARDEN_ENDPOINT_URL");
  ::unsetenv("WARDEN_MAX_RETRIES");
  CHECK(unreachable.code == 3);
  CHECK(unreachable.err.find("gateway error") != std::string::npos);
}

TEST_CASE("kb validate and import") {
  auto good = cli({"kb", "validate", fixture("kb").string()});
  CHECK(good.code == 0);
  CHECK(good.out.find("entries valid") != std::string::npos);
  auto broken = cli({"kb", "validate", fixture("kb_broken").string()});
  CHECK(broken.code == 2);
  CHECK_FALSE(broken.err.empty());

  auto dir = temp_dir("import");
  auto imported = cli({"kb", "import", fixture("import_report.md").string(), "--out-dir", dir.string()});
  REQUIRE(imported.code == 0);
  auto path = trim(imported.out);
  CHECK(std::filesystem::path(path).extension() == ".xml");
  CHECK(std::filesystem::exists(path));
  CHECK(cli({"kb", "validate", dir.string()}).code == 0);
}

TEST_CASE("profile without the model covers every contract") {
  auto r = cli({"profile", fixture("minivault").string(), "--no-llm"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["project_name"] == "minivault");
  CHECK_FALSE(j["batches"].empty());
}

TEST_CASE("scripted audit writes a balanced report") {
  auto dir = temp_dir("audit");
  auto out = dir / "report.json";
  auto r = cli({"audit", fixture("ablation").string(), "--kb", fixture("kb").string(), "--scenario",
                fixture("scenarios/ablation.json").string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(read_file(out.string()));
  CHECK(j["accounting"]["balanced"] == true);
  CHECK(j["verifier"] == "enabled");
  CHECK(j["accounting"]["raw"] == j["accounting"]["findings"].get<int>() + j["accounting"]["dropped"].get<int>() +
                                      j["accounting"]["merged"].get<int>());
  CHECK(r.err.find("findings (") != std::string::npos);

  auto md = cli({"audit", fixture("ablation").string(), "--kb", fixture("kb").string(), "--scenario",
                 fixture("scenarios/ablation.json").string(), "--format", "md", "--skip-verifier"});
  REQUIRE(md.code == 0);
  CHECK(md.out.find("# Audit report: ablation") != std::string::npos);
}
