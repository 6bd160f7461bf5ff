#include "warden/facts.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "warden/error.hpp"

namespace warden {

std::string_view to_string(ContractKind k) {
  switch (k) {
    case ContractKind::Contract: return "contract";
    case ContractKind::Library: return "library";
    case ContractKind::Interface: return "interface";
    case ContractKind::Abstract: return "abstract";
  }
  return "contract";
}

std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::Public: return "public";
    case Visibility::External: return "external";
    case Visibility::Internal: return "internal";
    case Visibility::Private: return "private";
  }
  return "public";
}

std::string_view to_string(AccessMode m) { return m == AccessMode::Read ? "read" : "write"; }

ContractKind contract_kind_from(std::string_view s) {
  if (s == "contract") return ContractKind::Contract;
  if (s == "library") return ContractKind::Library;
  if (s == "interface") return ContractKind::Interface;
  if (s == "abstract") return ContractKind::Abstract;
  throw SchemaError("unknown contract kind '" + std::string(s) + "'");
}

Visibility visibility_from(std::string_view s) {
  if (s == "public") return Visibility::Public;
  if (s == "external") return Visibility::External;
  if (s == "internal") return Visibility::Internal;
  if (s == "private") return Visibility::Private;
  throw SchemaError("unknown visibility '" + std::string(s) + "'");
}

AccessMode access_mode_from(std::string_view s) {
  if (s == "read") return AccessMode::Read;
  if (s == "write") return AccessMode::Write;
  throw SchemaError("unknown access mode '" + std::string(s) + "'");
}

const ContractFact* FactSet::find_contract(std::string_view name) const {
  auto it = std::find_if(contracts.begin(), contracts.end(), [&](const auto& c) { return c.name == name; });
  return it == contracts.end() ? nullptr : &*it;
}

const FunctionFact* FactSet::find_function(std::string_view key) const {
  auto it = std::find_if(functions.begin(), functions.end(), [&](const auto& f) { return f.key() == key; });
  return it == functions.end() ? nullptr : &*it;
}

std::vector<const FunctionFact*> FactSet::functions_of(std::string_view contract) const {
  std::vector<const FunctionFact*> out;
  for (const auto& f : functions) {
    if (f.contract == contract) out.push_back(&f);
  }
  return out;
}

std::vector<std::string> FactSet::contract_names() const {
  std::vector<std::string> out;
  for (const auto& c : contracts) out.push_back(c.name);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void FactSet::validate() const {
  std::set<std::pair<std::string, std::string>> contract_ids;
  std::set<std::string> contract_names;
  for (const auto& c : contracts) {
    if (c.name.empty()) throw SchemaError("contract with empty name in " + c.source_path);
    if (c.line_count < 0) throw SchemaError("negative line_count for " + c.name);
    if (!contract_ids.emplace(c.source_path, c.name).second) {
      throw SchemaError("duplicate contract " + c.name + " in " + c.source_path);
    }
    contract_names.insert(c.name);
  }
  std::set<std::string> keys;
  for (const auto& f : functions) {
    if (!contract_names.contains(f.contract)) {
      throw DanglingReference("function " + f.key() + " names unknown contract " + f.contract);
    }
    if (f.source_span.start_line > f.source_span.end_line) {
      throw SchemaError("inverted source_span for " + f.key());
    }
    if (!keys.insert(f.key()).second) throw SchemaError("duplicate function key " + f.key());
  }
  for (const auto& c : calls) {
    if (!keys.contains(c.caller)) throw DanglingReference("call from unknown function " + c.caller);
    if (c.resolved && !keys.contains(c.callee)) {
      throw DanglingReference("resolved call to unknown function " + c.callee);
    }
  }
  for (const auto& a : state_accesses) {
    if (!keys.contains(a.function)) throw DanglingReference("state access from unknown function " + a.function);
    if (a.variable.empty()) throw SchemaError("state access with empty variable in " + a.function);
  }
}

bool TemplatePolicy::matches(std::string_view source_path, std::string_view contract_name) const {
  std::string path = to_lower(source_path);
  for (const auto& marker : path_markers) {
    if (path.find(to_lower(marker)) != std::string::npos) return true;
  }
  return std::find(names.begin(), names.end(), contract_name) != names.end();
}

std::vector<SourceFile> read_project(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw MissingDirectory("not a directory: " + root.string());
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".sol") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<SourceFile> out;
  for (const auto& p : paths) out.push_back({fs::relative(p, root).generic_string(), read_file(p.string())});
  return out;
}

nlohmann::json to_json(const FactSet& fs) {
  using nlohmann::json;
  json j;
  j["version"] = 1;
  j["contracts"] = json::array();
  for (const auto& c : fs.contracts) {
    j["contracts"].push_back({{"name", c.name},
                              {"source_path", c.source_path},
                              {"kind", to_string(c.kind)},
                              {"is_template", c.is_template},
                              {"line_count", c.line_count}});
  }
  j["functions"] = json::array();
  for (const auto& f : fs.functions) {
    j["functions"].push_back(
        {{"contract", f.contract},
         {"name", f.name},
         {"signature", f.signature},
         {"visibility", to_string(f.visibility)},
         {"modifiers", f.modifiers},
         {"source_span", {{"start_line", f.source_span.start_line}, {"end_line", f.source_span.end_line}}},
         {"body_text", f.body_text}});
  }
  j["calls"] = json::array();
  for (const auto& c : fs.calls) {
    j["calls"].push_back({{"caller", c.caller}, {"callee", c.callee}, {"resolved", c.resolved}});
  }
  j["state_accesses"] = json::array();
  for (const auto& a : fs.state_accesses) {
    j["state_accesses"].push_back({{"function", a.function}, {"variable", a.variable}, {"mode", to_string(a.mode)}});
  }
  return j;
}

std::string dump_fact_file(const FactSet& facts) { return to_json(facts).dump(2) + "\n"; }

namespace {

const nlohmann::json& field(const nlohmann::json& obj, const char* name, const char* where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw SchemaError(std::string("missing field '") + name + "' in " + where);
  }
  return obj.at(name);
}

template <typename T>
T get_as(const nlohmann::json& obj, const char* name, const char* where) {
  try {
    return field(obj, name, where).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("field '") + name + "' in " + where + " has the wrong type");
  }
}

const nlohmann::json& array_field(const nlohmann::json& j, const char* name) {
  const auto& a = field(j, name, "fact file");
  if (!a.is_array()) throw SchemaError(std::string("field '") + name + "' must be an array");
  return a;
}

}  // namespace

FactSet load_fact_file(std::string_view bytes) {
  auto j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SchemaError("fact file is not a JSON object");
  if (!j.contains("version")) throw SchemaError("missing field 'version' in fact file");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != 1) {
    throw SchemaError("unsupported fact file version " + j["version"].dump());
  }
  FactSet fs;
  for (const auto& c : array_field(j, "contracts")) {
    fs.contracts.push_back({get_as<std::string>(c, "name", "contract"),
                            get_as<std::string>(c, "source_path", "contract"),
                            contract_kind_from(get_as<std::string>(c, "kind", "contract")),
                            get_as<bool>(c, "is_template", "contract"), get_as<int>(c, "line_count", "contract")});
  }
  for (const auto& f : array_field(j, "functions")) {
    FunctionFact ff;
    ff.contract = get_as<std::string>(f, "contract", "function");
    ff.name = get_as<std::string>(f, "name", "function");
    ff.signature = get_as<std::string>(f, "signature", "function");
    ff.visibility = visibility_from(get_as<std::string>(f, "visibility", "function"));
    ff.modifiers = get_as<std::vector<std::string>>(f, "modifiers", "function");
    const auto& span = field(f, "source_span", "function");
    ff.source_span = {get_as<int>(span, "start_line", "source_span"), get_as<int>(span, "end_line", "source_span")};
    ff.body_text = get_as<std::string>(f, "body_text", "function");
    fs.functions.push_back(std::move(ff));
  }
  for (const auto& c : array_field(j, "calls")) {
    fs.calls.push_back({get_as<std::string>(c, "caller", "call"), get_as<std::string>(c, "callee", "call"),
                        get_as<bool>(c, "resolved", "call")});
  }
  for (const auto& a : array_field(j, "state_accesses")) {
    fs.state_accesses.push_back({get_as<std::string>(a, "function", "state_access"),
                                 get_as<std::string>(a, "variable", "state_access"),
                                 access_mode_from(get_as<std::string>(a, "mode", "state_access"))});
  }
  fs.validate();
  return fs;
}

FactSet merge_fact_sets(const FactSet& a, const FactSet& b) {
  FactSet out = a;
  std::map<std::string, const ContractFact*> contracts;
  for (const auto& c : out.contracts) contracts.emplace(c.name, &c);
  std::vector<ContractFact> new_contracts;
  for (const auto& c : b.contracts) {
    auto it = contracts.find(c.name);
    if (it == contracts.end()) {
      new_contracts.push_back(c);
      continue;
    }
    if (it->second->kind != c.kind || it->second->line_count != c.line_count) {
      throw ConflictingDefinition("contract " + c.name + " differs between fact sets");
    }
  }
  out.contracts.insert(out.contracts.end(), new_contracts.begin(), new_contracts.end());

  std::map<std::string, SourceSpan> spans;
  for (const auto& f : a.functions) spans.emplace(f.key(), f.source_span);
  for (const auto& f : b.functions) {
    auto [it, inserted] = spans.emplace(f.key(), f.source_span);
    if (inserted) {
      out.functions.push_back(f);
    } else if (!(it->second == f.source_span)) {
      throw ConflictingDefinition("function " + f.key() + " has conflicting source spans");
    }
  }

  auto append_unique = [](auto& dst, const auto& src) {
    for (const auto& x : src) {
      if (std::find(dst.begin(), dst.end(), x) == dst.end()) dst.push_back(x);
    }
  };
  append_unique(out.calls, b.calls);
  append_unique(out.state_accesses, b.state_accesses);
  out.validate();
  return out;
}

}  // namespace warden
