#include "warden/knowledge.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "warden/error.hpp"

namespace warden {

nlohmann::json to_json(const KnowledgeEntry& e) {
  return {{"category", e.category},
          {"pattern", e.pattern},
          {"exploit_instance", e.exploit_instance},
          {"reasoning_trace", e.reasoning_trace},
          {"source_path", e.source_path}};
}

KnowledgeIndex::KnowledgeIndex(std::vector<KnowledgeEntry> entries) : entries_(std::move(entries)) {
  std::stable_sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.category < b.category; });
  entries_.erase(std::unique(entries_.begin(), entries_.end(),
                             [](const auto& a, const auto& b) { return a.category == b.category; }),
                 entries_.end());
}

const KnowledgeEntry* KnowledgeIndex::find(std::string_view category) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), category,
                             [](const KnowledgeEntry& e, std::string_view c) { return e.category < c; });
  if (it != entries_.end() && it->category == category) return &*it;
  std::string folded = fold_name(category);
  for (const auto& e : entries_) {
    if (fold_name(e.category) == folded) return &e;
  }
  return nullptr;
}

std::vector<std::string> KnowledgeIndex::categories() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.category);
  return out;
}

KnowledgeEntry parse_entry_xml(const std::string& xml, const std::string& source_path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw SchemaError(source_path + ": " + e.message());
  }
  auto root = tree.get_child_optional("entry");
  if (!root) throw SchemaError(source_path + ": missing <entry> root element");
  KnowledgeEntry entry;
  entry.source_path = source_path;
  entry.category = trim(root->get("<xmlattr>.category", ""));
  if (entry.category.empty()) throw SchemaError(source_path + ": <entry> needs a non-empty category attribute");
  auto segment = [&](const char* name) {
    auto node = root->get_child_optional(name);
    if (!node) throw SchemaError(source_path + ": missing <" + std::string(name) + "> element");
    std::string text = trim(node->data());
    if (text.empty()) throw SchemaError(source_path + ": <" + std::string(name) + "> is empty");
    return text;
  };
  entry.pattern = segment("pattern");
  entry.exploit_instance = segment("exploit_instance");
  entry.reasoning_trace = segment("reasoning_trace");
  return entry;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_entry_xml(const KnowledgeEntry& e) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n"
     << "<entry category=\"" << xml_escape(e.category) << "\">\n"
     << "<pattern>" << xml_escape(e.pattern) << "</pattern>\n"
     << "<exploit_instance>" << xml_escape(e.exploit_instance) << "</exploit_instance>\n"
     << "<reasoning_trace>" << xml_escape(e.reasoning_trace) << "</reasoning_trace>\n"
     << "</entry>\n";
  return os.str();
}

KnowledgeLoad load_kb(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw MissingDirectory("knowledge base directory not found: " + root.string());
  std::vector<fs::path> paths;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (item.is_regular_file() && item.path().extension() == ".xml") paths.push_back(item.path());
  }
  std::sort(paths.begin(), paths.end());
  KnowledgeLoad out;
  std::vector<KnowledgeEntry> entries;
  std::set<std::string> seen;
  for (const auto& p : paths) {
    std::string rel = fs::relative(p, root).generic_string();
    try {
      auto e = parse_entry_xml(read_file(p.string()), rel);
      if (!seen.insert(e.category).second) {
        out.warnings.push_back({rel, "category '" + e.category + "' already defined; file ignored"});
        continue;
      }
      entries.push_back(std::move(e));
    } catch (const SchemaError& err) {
      out.warnings.push_back({rel, err.what()});
    }
  }
  out.index = KnowledgeIndex(std::move(entries));
  return out;
}

KnowledgeEntry import_markdown_report(const std::string& markdown, const std::string& category) {
  std::string title;
  std::map<std::string, std::string> sections;
  std::string* current = nullptr;
  bool in_fence = false;
  std::istringstream in(markdown);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("```", 0) == 0) in_fence = !in_fence;
    if (!in_fence && line.rfind("## ", 0) == 0) {
      std::string key = fold_name(line.substr(3));
      if (key == "exploitinstance") key = "instance";
      if (key == "reasoningtrace") key = "trace";
      current = (key == "pattern" || key == "instance" || key == "trace") ? &sections[key] : nullptr;
      continue;
    }
    if (!in_fence && line.rfind("# ", 0) == 0) {
      if (title.empty()) title = trim(line.substr(2));
      current = nullptr;
      continue;
    }
    if (current) *current += line + "\n";
  }
  KnowledgeEntry e;
  e.category = trim(category.empty() ? title : category);
  if (e.category.empty()) throw SchemaError("markdown report has no '# ' title and no category was given");
  auto take = [&](const char* key, const char* heading) {
    std::string text = trim(sections[key]);
    if (text.empty()) throw SchemaError(std::string("markdown report is missing a non-empty '## ") + heading + "' section");
    return text;
  };
  e.pattern = take("pattern", "Pattern");
  e.exploit_instance = take("instance", "Instance");
  e.reasoning_trace = take("trace", "Trace");
  return e;
}

std::vector<KnowledgeEntry> relate(const std::vector<const FunctionFact*>& functions, const KnowledgeIndex& index,
                                   ModelGateway& model, std::size_t k) {
  if (index.empty() || functions.empty() || k == 0) return {};
  std::ostringstream user;
  user << "Knowledge categories:\n";
  for (const auto& e : index.entries()) user << "- " << e.category << ": " << e.pattern << "\n";
  user << "\nCode under review:\n";
  for (const auto* f : functions) user << "// " << f->key() << "\n" << f->body_text << "\n\n";
  user << "Pick at most " << k << " categories, most relevant first.";
  const std::string system =
      "You match Solidity code to known vulnerability categories. Reply with JSON "
      "{\"categories\": [...]} using category names exactly as listed.";
  auto reply = model.complete({"relate", system, user.str()}).text;
  std::vector<KnowledgeEntry> out;
  for (const auto& name : parse_string_list(reply, {"categories"})) {
    const auto* e = index.find(trim(name));
    if (!e) continue;
    if (std::any_of(out.begin(), out.end(), [&](const auto& x) { return x.category == e->category; })) continue;
    out.push_back(*e);
    if (out.size() == k) break;
  }
  return out;
}

std::unique_ptr<StubSearchClient> StubSearchClient::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw InputError("search stub must be a JSON list");
  auto client = std::make_unique<StubSearchClient>();
  for (const auto& r : j) {
    Rule rule;
    rule.query_substring = r.value("query_substring", "");
    rule.error = r.value("error", "");
    for (const auto& res : r.value("results", nlohmann::json::array())) {
      rule.results.push_back({res.value("title", ""), res.value("snippet", ""), res.value("url", "")});
    }
    client->rules_.push_back(std::move(rule));
  }
  return client;
}

std::vector<SearchResult> StubSearchClient::search(const std::string& query) {
  for (const auto& r : rules_) {
    if (!icontains(query, r.query_substring)) continue;
    if (!r.error.empty()) throw SearchError(r.error);
    return r.results;
  }
  return {};
}

const std::vector<std::string>& default_primitives() {
  static const std::vector<std::string> p{"Compound", "Uniswap-V2", "Balancer", "Curve", "ERC-4626"};
  return p;
}

namespace {

std::vector<std::string> matched_primitives(const std::string& reply, const std::vector<std::string>& primitives) {
  std::vector<std::string> named = parse_string_list(reply, {"primitives"});
  auto j = extract_json(reply);
  bool structured = j && j->is_object() && j->contains("primitives");
  std::vector<std::string> out;
  for (const auto& p : primitives) {
    auto fp = fold_name(p);
    bool hit = structured ? std::any_of(named.begin(), named.end(), [&](const auto& n) { return fold_name(n) == fp; })
                          : fold_name(reply).find(fp) != std::string::npos;
    if (hit) out.push_back(p);
  }
  return out;
}

std::string raw_listing(const std::vector<SearchResult>& results) {
  std::ostringstream os;
  for (const auto& r : results) os << "- **" << r.title << "**: " << r.snippet << " (" << r.url << ")\n";
  return os.str();
}

}  // namespace

LineageResult lineage_augment(const ContractFact& contract, const FactSet& facts, SearchClient& search,
                              ModelGateway& model, const std::vector<std::string>& primitives) {
  LineageResult out;
  if (!search.available() || primitives.empty()) return out;

  std::ostringstream user;
  user << "Known primitives: " << join(primitives, ", ") << "\n\nContract " << contract.name << ":\n";
  for (const auto* f : facts.functions_of(contract.name)) user << f->body_text << "\n\n";
  user << "Is this contract a fork or close derivative of one of the primitives? Name the ones it derives from.";
  const std::string system =
      "You recognise forks of well-known DeFi protocols. Reply with JSON "
      "{\"derivative\": true|false, \"primitives\": [...]}.";
  std::string reply;
  try {
    reply = model.complete({"lineage", system, user.str()}).text;
  } catch (const GatewayUnreachable&) {
    throw;
  } catch (const ModelError& e) {
    out.warnings.push_back({"lineage", contract.name + ": " + e.what()});
    return out;
  }
  if (parse_verdict(reply, {"derivative", "is_derivative"}) != true) return out;

  for (const auto& primitive : matched_primitives(reply, primitives)) {
    std::string query = primitive + " fork known vulnerabilities";
    std::vector<SearchResult> results;
    try {
      results = search.search(query);
    } catch (const SearchError& e) {
      out.warnings.push_back({"search", query + ": " + e.what()});
      continue;
    }
    if (results.empty()) continue;
    std::string listing = raw_listing(results);
    std::string summary;
    try {
      summary = model
                    .complete({"search_summary",
                               "You condense security research notes into short markdown bullet points.",
                               "Contract " + contract.name + " derives from " + primitive +
                                   ". Summarize what these results imply for its audit:\n\n" + listing})
                    .text;
    } catch (const GatewayUnreachable&) {
      throw;
    } catch (const ModelError& e) {
      out.warnings.push_back({"search_summary", e.what()});
    }
    if (trim(summary).empty() || summary == ScriptedBackend::kRefusal) summary = listing;
    out.notes.push_back({query, trim(summary)});
  }
  return out;
}

KnowledgeContext make_context(std::vector<KnowledgeEntry> entries, std::vector<LiveNote> notes) {
  KnowledgeContext ctx{std::move(entries), std::move(notes), 0};
  ctx.total_tokens = estimate_tokens(render_context(ctx).size());
  return ctx;
}

std::string render_context(const KnowledgeContext& ctx) {
  std::ostringstream os;
  for (const auto& e : ctx.entries) {
    os << "### Known issue: " << e.category << "\nPattern: " << e.pattern << "\nExample exploit: " << e.exploit_instance
       << "\nHow it was found: " << e.reasoning_trace << "\n\n";
  }
  for (const auto& n : ctx.live_notes) os << "### Research notes (" << n.query << ")\n" << n.summary_markdown << "\n\n";
  return os.str();
}

}  // namespace warden
