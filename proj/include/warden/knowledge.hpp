#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "warden/facts.hpp"
#include "warden/gateway.hpp"

namespace warden {

struct KnowledgeEntry {
  std::string category;
  std::string pattern;
  std::string exploit_instance;
  std::string reasoning_trace;
  std::string source_path;

  bool operator==(const KnowledgeEntry&) const = default;
};

nlohmann::json to_json(const KnowledgeEntry& e);

/// Entries keyed by category. Immutable after load.
class KnowledgeIndex {
 public:
  KnowledgeIndex() = default;
  explicit KnowledgeIndex(std::vector<KnowledgeEntry> entries);

  const KnowledgeEntry* find(std::string_view category) const;
  std::vector<std::string> categories() const;
  const std::vector<KnowledgeEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<KnowledgeEntry> entries_;  ///< sorted by category
};

struct KnowledgeLoad {
  KnowledgeIndex index;
  std::vector<Warning> warnings;
};

/// Parses one `<entry category="...">` document. Throws SchemaError.
KnowledgeEntry parse_entry_xml(const std::string& xml, const std::string& source_path);
std::string render_entry_xml(const KnowledgeEntry& entry);

/// Loads every `*.xml` below `root`; malformed files become warnings and a
/// repeated category keeps the file that sorts first.
KnowledgeLoad load_kb(const std::filesystem::path& root);

/// Converts a markdown report with `## Pattern`, `## Instance` and `## Trace`
/// sections. The category comes from `category` when given, else the H1.
KnowledgeEntry import_markdown_report(const std::string& markdown, const std::string& category = "");

/// Entries whose category the model picks for `functions`, in reply order,
/// at most `k`. Unknown names are dropped.
std::vector<KnowledgeEntry> relate(const std::vector<const FunctionFact*>& functions, const KnowledgeIndex& index,
                                   ModelGateway& model, std::size_t k = 3);

struct SearchResult {
  std::string title;
  std::string snippet;
  std::string url;
};

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  /// False for the null client; lineage checks are skipped entirely then.
  virtual bool available() const = 0;
  /// Throws SearchError on transport failure.
  virtual std::vector<SearchResult> search(const std::string& query) = 0;
};

class NullSearchClient : public SearchClient {
 public:
  bool available() const override { return false; }
  std::vector<SearchResult> search(const std::string&) override { return {}; }
};

/// Canned results from a JSON list of {query_substring, results[], error?}.
/// The first rule whose substring occurs in the query (case-insensitive)
/// answers; a rule with `error` raises SearchError instead.
class StubSearchClient : public SearchClient {
 public:
  static std::unique_ptr<StubSearchClient> from_json(std::string_view text);

  bool available() const override { return true; }
  std::vector<SearchResult> search(const std::string& query) override;

 private:
  struct Rule {
    std::string query_substring;
    std::vector<SearchResult> results;
    std::string error;
  };
  std::vector<Rule> rules_;
};

const std::vector<std::string>& default_primitives();

struct LiveNote {
  std::string query;
  std::string summary_markdown;

  bool operator==(const LiveNote&) const = default;
};

struct LineageResult {
  std::vector<LiveNote> notes;
  std::vector<Warning> warnings;
};

/// Asks the model whether `contract` derives from a known primitive and, for
/// each matched primitive, searches and summarizes the results.
LineageResult lineage_augment(const ContractFact& contract, const FactSet& facts, SearchClient& search,
                              ModelGateway& model, const std::vector<std::string>& primitives = default_primitives());

struct KnowledgeContext {
  std::vector<KnowledgeEntry> entries;
  std::vector<LiveNote> live_notes;
  std::int64_t total_tokens = 0;  ///< estimate_tokens(render_context(*this).size())
};

KnowledgeContext make_context(std::vector<KnowledgeEntry> entries, std::vector<LiveNote> notes);
std::string render_context(const KnowledgeContext& ctx);

}  // namespace warden
