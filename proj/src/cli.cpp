#include "warden/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "warden/auditor.hpp"
#include "warden/error.hpp"
#include "warden/profiler.hpp"
#include "warden/verifier.hpp"

#ifndef WARDEN_VERSION
#define WARDEN_VERSION "0.0.0"
#endif

namespace warden {

namespace fs = std::filesystem;

std::string_view tool_version() { return WARDEN_VERSION; }

Extraction load_project(const fs::path& input) {
  if (fs::is_regular_file(input)) {
    Extraction e;
    e.facts = load_fact_file(read_file(input.string()));
    return e;
  }
  auto sources = read_project(input);
  return extract_facts(sources);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

AuditReport run_audit(const AuditInputs& in, const EffectiveConfig& config) {
  auto start = Clock::now();
  AuditReport report;
  report.project_name = in.project_name;
  report.tool_version = std::string(tool_version());
  report.config_fingerprint = config_fingerprint(config);
  report.verifier_enabled = !in.skip_verifier;

  auto t = Clock::now();
  auto plan = plan_batches(in.facts, config.profiler, &in.model);
  report.timing_ms["profile"] = elapsed_ms(t);
  report.batches = plan.batches;
  report.warnings = plan.warnings;

  t = Clock::now();
  AuditDeps deps{in.facts, *plan.graph, in.kb, in.model, in.search, in.solver};
  for (const auto& batch : plan.batches) {
    auto audit = audit_batch(batch, deps, config.auditor);
    report.v_raw.insert(report.v_raw.end(), audit.hypotheses.begin(), audit.hypotheses.end());
    report.smt_problems.insert(report.smt_problems.end(), audit.smt_problems.begin(), audit.smt_problems.end());
    report.warnings.insert(report.warnings.end(), audit.warnings.begin(), audit.warnings.end());
  }
  report.timing_ms["audit"] = elapsed_ms(t);

  t = Clock::now();
  if (in.skip_verifier) {
    classify(report, report.v_raw);
  } else {
    auto v = verify(report.v_raw, in.facts, *plan.graph, in.model, config.verifier);
    report.verdicts = std::move(v.verdicts);
    report.warnings.insert(report.warnings.end(), v.warnings.begin(), v.warnings.end());
    classify(report, v.v_final);
  }
  report.timing_ms["verify"] = elapsed_ms(t);
  report.timing_ms["total"] = elapsed_ms(start);
  report.usage = in.model.usage_report();
  return report;
}

namespace {

struct SharedFlags {
  std::string config_path;
  std::optional<std::string> token_limit, alpha, beta, epsilon, seed;
  std::string scenario;
  std::string out_path;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    app->add_option("--token-limit", token_limit, "Per-batch token limit");
    app->add_option("--alpha", alpha, "Betweenness weight in contract scores");
    app->add_option("--beta", beta, "PageRank weight in contract scores");
    app->add_option("--epsilon", epsilon, "Dedup cosine distance threshold");
    app->add_option("--seed", seed, "Community detection seed");
    app->add_option("--scenario", scenario, "Scripted model scenario pack (JSON)")->check(CLI::ExistingFile);
    app->add_option("--out", out_path, "Write output to this file instead of stdout");
  }

  EffectiveConfig load() const {
    std::vector<ConfigSetting> flags;
    if (token_limit) flags.emplace_back("profiler.token_limit", *token_limit);
    if (alpha) flags.emplace_back("profiler.alpha", *alpha);
    if (beta) flags.emplace_back("profiler.beta", *beta);
    if (epsilon) flags.emplace_back("verifier.epsilon", *epsilon);
    if (seed) flags.emplace_back("profiler.seed", *seed);
    std::optional<fs::path> ini;
    if (!config_path.empty()) ini = config_path;
    return load_config(ini, flags, [](const char* name) { return std::getenv(name); });
  }

  std::unique_ptr<ModelGateway> gateway(const EffectiveConfig& config) const {
    std::unique_ptr<ModelBackend> backend;
    if (!scenario.empty()) {
      backend = ScriptedBackend::from_json(read_file(scenario));
    } else {
      backend = std::make_unique<HttpBackend>(config.model);
    }
    return std::make_unique<ModelGateway>(std::move(backend), config.model);
  }
};

void emit(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
  if (path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
    return;
  }
  write_file_atomically(path, text);
  err << "wrote " << path << "\n";
}

std::string project_name_of(const fs::path& input) {
  auto p = fs::absolute(input).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return fs::is_regular_file(p) ? p.stem().string() : p.filename().string();
}

std::string slug(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "entry" : out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smart contract audit pipeline", "warden"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  SharedFlags profile_flags;
  std::string profile_input;
  bool no_llm = false;
  auto* profile = app.add_subcommand("profile", "Build batches for a project directory or fact file");
  profile->add_option("input", profile_input, "Project directory or fact file")->required();
  profile->add_flag("--no-llm", no_llm, "Skip model-based batch refinement");
  profile_flags.add_to(profile);

  SharedFlags audit_flags;
  std::string audit_input, kb_dir, search_stub, format = "json";
  bool skip_verifier = false;
  auto* audit = app.add_subcommand("audit", "Run the full audit pipeline");
  audit->add_option("input", audit_input, "Project directory or fact file")->required();
  audit->add_option("--kb", kb_dir, "Knowledge base directory");
  audit->add_option("--search-stub", search_stub, "Canned web search results (JSON)")->check(CLI::ExistingFile);
  audit->add_flag("--skip-verifier", skip_verifier, "Report raw hypotheses without verification");
  audit->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "md"}));
  audit_flags.add_to(audit);

  auto* kb = app.add_subcommand("kb", "Knowledge base maintenance");
  kb->require_subcommand(1);
  std::string validate_dir;
  auto* kb_validate = kb->add_subcommand("validate", "Check every entry file in a knowledge base directory");
  kb_validate->add_option("dir", validate_dir)->required();
  std::string import_md, import_out, import_category;
  auto* kb_import = kb->add_subcommand("import", "Convert a markdown report into an entry file");
  kb_import->add_option("markdown", import_md)->required()->check(CLI::ExistingFile);
  kb_import->add_option("--out-dir", import_out, "Knowledge base directory to write into")->required();
  kb_import->add_option("--category", import_category, "Category (defaults to the report title)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*profile) {
      auto config = profile_flags.load();
      auto extraction = load_project(profile_input);
      std::unique_ptr<ModelGateway> model;
      if (!no_llm) model = profile_flags.gateway(config);
      auto plan = plan_batches(extraction.facts, config.profiler, model.get());
      plan.warnings.insert(plan.warnings.begin(), extraction.warnings.begin(), extraction.warnings.end());
      auto j = to_json(plan);
      j["project_name"] = project_name_of(profile_input);
      j["config_fingerprint"] = config_fingerprint(config);
      emit(profile_flags.out_path, j.dump(2), out, err);
      return 0;
    }

    if (*audit) {
      auto config = audit_flags.load();
      auto extraction = load_project(audit_input);
      KnowledgeIndex index;
      std::vector<Warning> kb_warnings;
      if (!kb_dir.empty()) {
        auto loaded = load_kb(kb_dir);
        index = std::move(loaded.index);
        kb_warnings = std::move(loaded.warnings);
      }
      std::unique_ptr<SearchClient> search;
      if (!search_stub.empty()) {
        search = StubSearchClient::from_json(read_file(search_stub));
      } else {
        search = std::make_unique<NullSearchClient>();
      }
      ProcessSolverRunner solver(config.z3_path);
      auto model = audit_flags.gateway(config);
      AuditInputs in{project_name_of(audit_input), extraction.facts, index, *model, *search, solver, skip_verifier};
      auto report = run_audit(in, config);
      report.warnings.insert(report.warnings.begin(), kb_warnings.begin(), kb_warnings.end());
      report.warnings.insert(report.warnings.begin(), extraction.warnings.begin(), extraction.warnings.end());
      emit(audit_flags.out_path, format == "md" ? render_markdown(report) : to_json(report).dump(2), out, err);
      err << report.findings.size() << " findings (" << report.v_raw.size() << " raw, " << report.filtered.size()
          << " dropped, " << report.merged.size() << " merged)\n";
      return 0;
    }

    if (*kb_validate) {
      auto loaded = load_kb(validate_dir);
      for (const auto& w : loaded.warnings) {
        if (w.message.starts_with(w.source)) err << w.message << "\n";
        else err << w.source << ": " << w.message << "\n";
      }
      if (!loaded.warnings.empty()) return 2;
      out << loaded.index.entries().size() << " entries valid\n";
      return 0;
    }

    if (*kb_import) {
      auto entry = import_markdown_report(read_file(import_md), import_category);
      fs::create_directories(import_out);
      auto path = (fs::path(import_out) / (slug(entry.category) + ".xml")).string();
      write_file_atomically(path, render_entry_xml(entry));
      out << path << "\n";
      return 0;
    }
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const GatewayError& e) {
    err << "gateway error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace warden
