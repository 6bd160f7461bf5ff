#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "warden/util.hpp"

namespace warden {

enum class ContractKind { Contract, Library, Interface, Abstract };
enum class Visibility { Public, External, Internal, Private };
enum class AccessMode { Read, Write };

std::string_view to_string(ContractKind k);
std::string_view to_string(Visibility v);
std::string_view to_string(AccessMode m);
ContractKind contract_kind_from(std::string_view s);
Visibility visibility_from(std::string_view s);
AccessMode access_mode_from(std::string_view s);

struct SourceSpan {
  int start_line = 0;
  int end_line = 0;

  bool operator==(const SourceSpan&) const = default;
};

struct ContractFact {
  std::string name;
  std::string source_path;
  ContractKind kind = ContractKind::Contract;
  bool is_template = false;
  int line_count = 0;

  bool operator==(const ContractFact&) const = default;
};

/// `signature` is the canonical `name(type1,type2)` form; the function key
/// is `Contract.signature`.
struct FunctionFact {
  std::string contract;
  std::string name;
  std::string signature;
  Visibility visibility = Visibility::Public;
  std::vector<std::string> modifiers;
  SourceSpan source_span;
  std::string body_text;

  std::string key() const { return contract + "." + signature; }
  bool operator==(const FunctionFact&) const = default;
};

struct CallFact {
  std::string caller;
  std::string callee;
  bool resolved = false;

  bool operator==(const CallFact&) const = default;
};

struct StateAccessFact {
  std::string function;
  std::string variable;  ///< `DeclaringContract.var`
  AccessMode mode = AccessMode::Read;

  bool operator==(const StateAccessFact&) const = default;
};

struct FactSet {
  std::vector<ContractFact> contracts;
  std::vector<FunctionFact> functions;
  std::vector<CallFact> calls;
  std::vector<StateAccessFact> state_accesses;

  const ContractFact* find_contract(std::string_view name) const;
  const FunctionFact* find_function(std::string_view key) const;
  std::vector<const FunctionFact*> functions_of(std::string_view contract) const;
  std::vector<std::string> contract_names() const;

  /// Throws DanglingReference or SchemaError when an invariant is broken.
  void validate() const;

  bool operator==(const FactSet&) const = default;
};

struct SourceFile {
  std::string path;
  std::string text;
};

/// Decides which contracts count as standard-library templates.
struct TemplatePolicy {
  std::vector<std::string> path_markers{"openzeppelin", "solmate", "node_modules"};
  std::vector<std::string> names{"ERC20", "ERC721", "Ownable", "ReentrancyGuard", "SafeMath"};

  bool matches(std::string_view source_path, std::string_view contract_name) const;
};

struct Extraction {
  FactSet facts;
  std::vector<Warning> warnings;
};

/// Lightweight scanner over Solidity sources. Per-file problems become
/// warnings; throws EmptyProject when nothing parseable remains.
Extraction extract_facts(std::span<const SourceFile> sources, const TemplatePolicy& policy = {});

/// Collects every `*.sol` file below `root` in sorted path order. Paths in the
/// result are relative to `root`.
std::vector<SourceFile> read_project(const std::filesystem::path& root);

/// Parses the version-1 fact-file JSON and re-validates every invariant.
FactSet load_fact_file(std::string_view bytes);
std::string dump_fact_file(const FactSet& facts);

nlohmann::json to_json(const FactSet& facts);

/// Union of two fact sets, first occurrence wins. Throws ConflictingDefinition
/// when the same function key carries different spans.
FactSet merge_fact_sets(const FactSet& a, const FactSet& b);

/// Replaces comments with spaces and blanks string-literal contents, keeping
/// every newline so offsets map to the same lines.
std::string blank_comments_and_strings(std::string_view source);

}  // namespace warden
