// Lightweight Solidity fact extraction: a tokenizer plus a brace-matching
// declaration walker. It understands enough of the grammar to find contracts,
// functions, state variables, call sites and state-variable reads/writes.

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "warden/error.hpp"
#include "warden/facts.hpp"

namespace warden {

namespace {

enum class Tok { Ident, Number, Punct, String };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
  int line;
};

constexpr std::size_t npos = static_cast<std::size_t>(-1);

const std::array<std::string_view, 24> kMultiPunct = {
    "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=",  "/=",  "%=", "|=", "&=", "^=", "<<", ">>", "=>", "**", "->", ":="};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_ident_start = [](unsigned char c) { return std::isalpha(c) || c == '_' || c == '$'; };
  auto is_ident = [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '$'; };
  while (i < n) {
    unsigned char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_ident(text[i])) ++i;
      out.push_back({Tok::Ident, text.substr(start, i - start), start, line});
    } else if (std::isdigit(c)) {
      while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '.' || text[i] == '_')) ++i;
      out.push_back({Tok::Number, text.substr(start, i - start), start, line});
    } else if (c == '"' || c == '\'') {
      ++i;
      while (i < n && text[i] != static_cast<char>(c) && text[i] != '\n') ++i;
      if (i < n && text[i] == static_cast<char>(c)) ++i;
      out.push_back({Tok::String, text.substr(start, i - start), start, line});
    } else {
      std::size_t len = 1;
      for (auto p : kMultiPunct) {
        if (text.compare(i, p.size(), p) == 0) {
          len = p.size();
          break;
        }
      }
      i += len;
      out.push_back({Tok::Punct, text.substr(start, len), start, line});
    }
  }
  return out;
}

bool is_elementary_type(std::string_view t) {
  static const std::unordered_set<std::string_view> fixed = {"address", "bool", "string", "bytes", "byte",
                                                             "uint", "int", "fixed", "ufixed", "payable"};
  if (fixed.contains(t)) return true;
  auto digits_after = [&](std::string_view prefix) {
    if (!t.starts_with(prefix) || t.size() == prefix.size()) return false;
    return std::all_of(t.begin() + static_cast<long>(prefix.size()), t.end(),
                       [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
  };
  return digits_after("uint") || digits_after("int") || digits_after("bytes");
}

bool is_storage_location(std::string_view t) { return t == "memory" || t == "storage" || t == "calldata"; }

std::string canonical_type(std::string t) {
  if (t == "uint") return "uint256";
  if (t == "int") return "int256";
  if (t == "byte") return "bytes1";
  if (t.starts_with("uint[")) return "uint256" + t.substr(4);
  if (t.starts_with("int[")) return "int256" + t.substr(3);
  return t;
}

struct Param {
  std::string name;
  std::string type;
};

struct RawFunction {
  FunctionFact fact;
  std::vector<Param> params;
  std::size_t body_begin = npos;  // first token after '{'
  std::size_t body_end = npos;    // index of matching '}'
};

struct RawStateVar {
  std::string name;
  std::string type;
};

struct RawContract {
  ContractFact fact;
  std::vector<std::string> bases;
  std::vector<RawFunction> functions;
  std::vector<RawStateVar> vars;
  std::vector<std::string> using_libs;
  std::set<std::string> type_names;  // structs, enums, events, errors
  const std::vector<Token>* tokens = nullptr;
};

struct ParsedFile {
  std::vector<Token> tokens;
  std::vector<RawContract> contracts;
};

// Index of the bracket matching tokens[open], or npos when unbalanced.
std::size_t match_bracket(const std::vector<Token>& t, std::size_t open, std::size_t limit) {
  const std::string& o = t[open].text;
  const std::string c = o == "(" ? ")" : o == "[" ? "]" : "}";
  int depth = 0;
  for (std::size_t i = open; i < limit; ++i) {
    if (t[i].kind != Tok::Punct) continue;
    if (t[i].text == o) ++depth;
    else if (t[i].text == c && --depth == 0) return i;
  }
  return npos;
}

// Splits tokens [b, e) on top-level commas.
std::vector<std::pair<std::size_t, std::size_t>> split_commas(const std::vector<Token>& t, std::size_t b,
                                                              std::size_t e) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  int depth = 0;
  std::size_t start = b;
  for (std::size_t i = b; i < e; ++i) {
    const auto& s = t[i].text;
    if (t[i].kind == Tok::Punct) {
      if (s == "(" || s == "[" || s == "{") ++depth;
      else if (s == ")" || s == "]" || s == "}") --depth;
      else if (s == "," && depth == 0) {
        groups.emplace_back(start, i);
        start = i + 1;
      }
    }
  }
  if (start < e) groups.emplace_back(start, e);
  return groups;
}

std::vector<Param> parse_params(const std::vector<Token>& t, std::size_t open, std::size_t close) {
  std::vector<Param> params;
  for (auto [b, e] : split_commas(t, open + 1, close)) {
    std::vector<const Token*> toks;
    for (std::size_t i = b; i < e; ++i) {
      if (t[i].kind == Tok::Ident && is_storage_location(t[i].text)) continue;
      toks.push_back(&t[i]);
    }
    if (toks.empty()) continue;
    Param p;
    std::size_t type_end = toks.size();
    if (toks.size() > 1 && toks.back()->kind == Tok::Ident && toks[toks.size() - 2]->text != ".") {
      p.name = toks.back()->text;
      type_end = toks.size() - 1;
    }
    std::string type;
    for (std::size_t i = 0; i < type_end; ++i) {
      if (toks[i]->text == "payable" && i > 0) continue;  // address payable
      type += toks[i]->text;
    }
    p.type = canonical_type(type);
    params.push_back(std::move(p));
  }
  return params;
}

const std::unordered_set<std::string_view> kHeaderKeywords = {
    "public", "external", "internal", "private", "view", "pure", "payable", "virtual", "constant", "override",
    "returns"};

class FileParser {
 public:
  FileParser(const SourceFile& file, const TemplatePolicy& policy) : file_(file), policy_(policy) {}

  ParsedFile parse() {
    ParsedFile out;
    std::string cleaned = blank_comments_and_strings(file_.text);
    out.tokens = tokenize(cleaned);
    const auto& t = out.tokens;
    check_balanced(t);
    std::size_t i = 0;
    while (i < t.size()) {
      const auto& s = t[i].text;
      bool is_abstract = s == "abstract" && i + 1 < t.size() && t[i + 1].text == "contract";
      if (t[i].kind == Tok::Ident && (s == "contract" || s == "library" || s == "interface" || is_abstract)) {
        std::size_t kw = is_abstract ? i + 1 : i;
        std::size_t end = parse_contract(t, i, kw, out);
        i = end + 1;
      } else if (t[i].kind == Tok::Punct && t[i].text == "{") {
        // Free functions, top-level structs: skip the block.
        std::size_t close = match_bracket(t, i, t.size());
        i = close == npos ? t.size() : close + 1;
      } else {
        ++i;
      }
    }
    return out;
  }

 private:
  void check_balanced(const std::vector<Token>& t) const {
    std::vector<char> stack;
    for (const auto& tok : t) {
      if (tok.kind != Tok::Punct || tok.text.size() != 1) continue;
      char ch = tok.text[0];
      if (ch == '(' || ch == '[' || ch == '{') {
        stack.push_back(ch);
      } else if (ch == ')' || ch == ']' || ch == '}') {
        char want = ch == ')' ? '(' : ch == ']' ? '[' : '{';
        if (stack.empty() || stack.back() != want) {
          throw SchemaError("unbalanced '" + std::string(1, ch) + "' at line " + std::to_string(tok.line));
        }
        stack.pop_back();
      }
    }
    if (!stack.empty()) throw SchemaError("unclosed '" + std::string(1, stack.back()) + "' at end of file");
  }

  std::size_t parse_contract(const std::vector<Token>& t, std::size_t start, std::size_t kw, ParsedFile& out) {
    if (kw + 1 >= t.size() || t[kw + 1].kind != Tok::Ident) throw SchemaError("contract without a name");
    RawContract c;
    c.fact.name = t[kw + 1].text;
    c.fact.source_path = file_.path;
    const auto& k = t[kw].text;
    c.fact.kind = start != kw ? ContractKind::Abstract
                  : k == "library"   ? ContractKind::Library
                  : k == "interface" ? ContractKind::Interface
                                     : ContractKind::Contract;
    c.fact.is_template = policy_.matches(file_.path, c.fact.name);
    std::size_t i = kw + 2;
    if (i < t.size() && t[i].text == "is") {
      ++i;
      while (i < t.size() && t[i].text != "{") {
        if (t[i].kind == Tok::Ident && (i == 0 || t[i - 1].text != ".")) {
          // Qualified bases keep only their last component.
          std::size_t j = i;
          while (j + 2 < t.size() && t[j + 1].text == "." && t[j + 2].kind == Tok::Ident) j += 2;
          c.bases.push_back(t[j].text);
          i = j + 1;
          if (i < t.size() && t[i].text == "(") {
            std::size_t close = match_bracket(t, i, t.size());
            i = close == npos ? t.size() : close + 1;
          }
          continue;
        }
        ++i;
      }
    }
    if (i >= t.size() || t[i].text != "{") throw SchemaError("contract " + c.fact.name + " has no body");
    std::size_t close = match_bracket(t, i, t.size());
    if (close == npos) throw SchemaError("contract " + c.fact.name + " is not closed");
    c.fact.line_count = t[close].line - t[start].line + 1;
    parse_members(t, i + 1, close, c);
    out.contracts.push_back(std::move(c));
    return close;
  }

  void parse_members(const std::vector<Token>& t, std::size_t b, std::size_t e, RawContract& c) {
    std::size_t i = b;
    while (i < e) {
      const auto& s = t[i].text;
      if (t[i].kind == Tok::Ident &&
          (s == "function" || s == "constructor" || s == "fallback" || s == "receive" || s == "modifier")) {
        i = parse_function(t, i, e, c);
      } else if (t[i].kind == Tok::Ident && (s == "struct" || s == "enum")) {
        if (i + 1 < e) c.type_names.insert(t[i + 1].text);
        std::size_t j = i;
        while (j < e && t[j].text != "{") ++j;
        std::size_t close = j < e ? match_bracket(t, j, e + 1) : npos;
        i = close == npos ? e : close + 1;
      } else if (t[i].kind == Tok::Ident && (s == "event" || s == "error")) {
        if (i + 1 < e) c.type_names.insert(t[i + 1].text);
        i = skip_statement(t, i, e);
      } else if (t[i].kind == Tok::Ident && s == "using") {
        if (i + 1 < e && t[i + 1].kind == Tok::Ident) c.using_libs.push_back(t[i + 1].text);
        i = skip_statement(t, i, e);
      } else if (t[i].kind == Tok::Punct && s == ";") {
        ++i;
      } else {
        std::size_t end = skip_statement(t, i, e);
        std::size_t decl_end = end > i && t[end - 1].text == ";" ? end - 1 : end;
        parse_state_var(t, i, decl_end, c);
        i = end;
      }
    }
  }

  // Returns the index just past the terminating ';' at depth 0.
  static std::size_t skip_statement(const std::vector<Token>& t, std::size_t i, std::size_t e) {
    int depth = 0;
    for (; i < e; ++i) {
      const auto& s = t[i].text;
      if (t[i].kind != Tok::Punct) continue;
      if (s == "(" || s == "[" || s == "{") ++depth;
      else if (s == ")" || s == "]" || s == "}") --depth;
      else if (s == ";" && depth == 0) return i + 1;
    }
    return e;
  }

  static void parse_state_var(const std::vector<Token>& t, std::size_t b, std::size_t e, RawContract& c) {
    std::size_t decl_end = e;
    int depth = 0;
    for (std::size_t i = b; i < e; ++i) {
      const auto& s = t[i].text;
      if (t[i].kind != Tok::Punct) continue;
      if (s == "(" || s == "[" || s == "{") ++depth;
      else if (s == ")" || s == "]" || s == "}") --depth;
      else if (s == "=" && depth == 0) {
        decl_end = i;
        break;
      }
    }
    if (decl_end < b + 2) return;
    std::size_t name_idx = decl_end - 1;
    if (t[name_idx].kind != Tok::Ident) return;
    RawStateVar v;
    v.name = t[name_idx].text;
    v.type = t[b].text;
    c.vars.push_back(std::move(v));
  }

  std::size_t parse_function(const std::vector<Token>& t, std::size_t i, std::size_t e, RawContract& c) {
    const std::string& kw = t[i].text;
    std::size_t start = i;
    std::string name;
    std::size_t p = i + 1;
    if (kw == "function" || kw == "modifier") {
      if (p < e && t[p].kind == Tok::Ident) {
        name = t[p].text;
        ++p;
      } else {
        name = "fallback";
      }
    } else {
      name = kw;
    }
    std::vector<Param> params;
    if (p < e && t[p].text == "(") {
      std::size_t close = match_bracket(t, p, e);
      if (close == npos) throw SchemaError("unclosed parameter list for " + name);
      params = parse_params(t, p, close);
      p = close + 1;
    }
    std::optional<Visibility> vis;
    std::vector<std::string> modifiers;
    while (p < e && t[p].text != "{" && t[p].text != ";") {
      const auto& s = t[p].text;
      if (t[p].kind == Tok::Ident && kHeaderKeywords.contains(s)) {
        if (s == "public") vis = Visibility::Public;
        else if (s == "external") vis = Visibility::External;
        else if (s == "internal") vis = Visibility::Internal;
        else if (s == "private") vis = Visibility::Private;
        ++p;
        if ((s == "returns" || s == "override") && p < e && t[p].text == "(") {
          std::size_t close = match_bracket(t, p, e);
          p = close == npos ? e : close + 1;
        }
        continue;
      }
      if (t[p].kind == Tok::Ident) {
        std::size_t q = p;
        while (q + 2 < e && t[q + 1].text == "." && t[q + 2].kind == Tok::Ident) q += 2;
        modifiers.push_back(t[q].text);
        p = q + 1;
        if (p < e && t[p].text == "(") {
          std::size_t close = match_bracket(t, p, e);
          p = close == npos ? e : close + 1;
        }
        continue;
      }
      ++p;
    }
    std::size_t end_tok = p;
    RawFunction f;
    if (p < e && t[p].text == "{") {
      std::size_t close = match_bracket(t, p, e);
      if (close == npos) throw SchemaError("unclosed body for " + name);
      f.body_begin = p + 1;
      f.body_end = close;
      end_tok = close;
    }
    if (kw == "modifier") {
      c.type_names.insert(name);
      return end_tok + 1;
    }
    if (end_tok >= t.size()) end_tok = t.size() - 1;
    std::vector<std::string> types;
    for (const auto& prm : params) types.push_back(prm.type);
    f.params = std::move(params);
    f.fact.contract = c.fact.name;
    f.fact.name = name;
    f.fact.signature = name + "(" + join(types, ",") + ")";
    f.fact.visibility = vis.value_or(c.fact.kind == ContractKind::Interface ? Visibility::External
                                                                             : Visibility::Public);
    f.fact.modifiers = std::move(modifiers);
    f.fact.source_span = {t[start].line, t[end_tok].line};
    std::size_t from = t[start].offset;
    std::size_t to = t[end_tok].offset + t[end_tok].text.size();
    f.fact.body_text = file_.text.substr(from, to - from);
    c.functions.push_back(std::move(f));
    return end_tok + 1;
  }

  const SourceFile& file_;
  const TemplatePolicy& policy_;
};

const std::unordered_set<std::string_view> kNotCalls = {
    "if",        "for",    "while",     "do",        "return",      "returns", "require", "assert",
    "revert",    "emit",   "new",       "delete",    "catch",       "try",     "type",    "assembly",
    "unchecked", "mapping", "function", "modifier",  "keccak256",   "sha256",  "ripemd160",
    "ecrecover", "addmod", "mulmod",    "blockhash", "gasleft",     "selfdestruct", "suicide",
    "sha3",      "this",   "super",     "event",     "constructor", "payable"};

const std::unordered_set<std::string_view> kBuiltinReceivers = {"abi", "msg", "block", "tx", "bytes", "string",
                                                                 "type"};

const std::unordered_set<std::string_view> kAddressMembers = {"call", "delegatecall", "staticcall", "send",
                                                               "transfer"};

const std::unordered_set<std::string_view> kAssignOps = {"=",  "+=", "-=", "*=", "/=", "%=",
                                                         "|=", "&=", "^=", "<<=", ">>="};

// Cross-contract view used for call resolution.
class Resolver {
 public:
  explicit Resolver(std::vector<RawContract*> contracts) {
    for (auto* c : contracts) by_name_.emplace(c->fact.name, c);
    for (auto* c : contracts) {
      for (const auto& tn : c->type_names) type_names_.insert(tn);
    }
  }

  const RawContract* contract(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : it->second;
  }

  bool is_type_name(const std::string& s) const { return type_names_.contains(s); }

  // The contract followed by its bases, most-derived first.
  std::vector<const RawContract*> lineage(const RawContract* c) const {
    std::vector<const RawContract*> out;
    std::set<std::string> seen;
    std::vector<const RawContract*> queue{c};
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const RawContract* cur = queue[i];
      if (!seen.insert(cur->fact.name).second) continue;
      out.push_back(cur);
      for (auto it = cur->bases.rbegin(); it != cur->bases.rend(); ++it) {
        if (const auto* b = contract(*it)) queue.push_back(b);
      }
    }
    return out;
  }

  const RawFunction* find_in(const RawContract* c, std::string_view name, std::size_t arity) const {
    const RawFunction* best = nullptr;
    for (const auto& f : c->functions) {
      if (f.fact.name == name && f.params.size() == arity) {
        if (!best || f.fact.signature < best->fact.signature) best = &f;
      }
    }
    return best;
  }

  const RawFunction* find_in_lineage(const RawContract* c, std::string_view name, std::size_t arity,
                                     bool skip_self = false) const {
    for (const auto* x : lineage(c)) {
      if (skip_self && x == c) continue;
      if (const auto* f = find_in(x, name, arity)) return f;
    }
    return nullptr;
  }

  // Unique (name, arity) match across implemented (non-interface) contracts.
  const RawFunction* find_unique(std::string_view name, std::size_t arity) const {
    const RawFunction* hit = nullptr;
    for (const auto& [_, c] : by_name_) {
      if (c->fact.kind == ContractKind::Interface) continue;
      for (const auto& f : c->functions) {
        if (f.fact.name == name && f.params.size() == arity) {
          if (hit) return nullptr;
          hit = &f;
        }
      }
    }
    return hit;
  }

 private:
  std::map<std::string, const RawContract*> by_name_;
  std::set<std::string> type_names_;
};

std::string placeholder_callee(std::string_view type, std::string_view name, std::size_t arity) {
  std::string args;
  for (std::size_t i = 0; i < arity; ++i) args += i ? ",_" : "_";
  return std::string(type) + "." + std::string(name) + "(" + args + ")";
}

class BodyAnalyzer {
 public:
  BodyAnalyzer(const Resolver& r, const RawContract& c, const RawFunction& f)
      : r_(r), c_(c), f_(f), t_(*c.tokens) {}

  void run(std::vector<CallFact>& calls, std::vector<StateAccessFact>& accesses) {
    if (f_.body_begin == npos) return;
    collect_locals();
    collect_state_vars();
    const std::string caller = f_.fact.key();
    std::set<std::string> seen_calls;
    std::set<std::pair<std::string, AccessMode>> seen_access;
    for (std::size_t i = f_.body_begin; i < f_.body_end; ++i) {
      if (t_[i].kind != Tok::Ident) continue;
      if (auto call = call_at(i)) {
        if (seen_calls.insert(call->callee).second) {
          calls.push_back({caller, call->callee, call->resolved});
        }
        continue;
      }
      for (auto [var, mode] : access_at(i)) {
        if (seen_access.emplace(var, mode).second) accesses.push_back({caller, var, mode});
      }
    }
  }

 private:
  struct Resolved {
    std::string callee;
    bool resolved;
  };

  const Token& at(std::size_t i) const { return t_[i]; }
  bool punct(std::size_t i, std::string_view s) const {
    return i < t_.size() && t_[i].kind == Tok::Punct && t_[i].text == s;
  }

  void collect_locals() {
    for (const auto& p : f_.params) {
      if (!p.name.empty()) locals_[p.name] = p.type;
    }
    for (std::size_t k = f_.body_begin + 1; k < f_.body_end; ++k) {
      if (at(k).kind != Tok::Ident) continue;
      if (!(punct(k + 1, "=") || punct(k + 1, ";") || punct(k + 1, ",") || punct(k + 1, ")"))) continue;
      const Token& prev = at(k - 1);
      std::string type;
      if (prev.kind == Tok::Ident && is_storage_location(prev.text)) {
        std::size_t q = k - 2;
        while (q > f_.body_begin && (punct(q, "]") || punct(q, "["))) --q;
        type = at(q).kind == Tok::Ident ? at(q).text : "";
      } else if (prev.kind == Tok::Ident && is_elementary_type(prev.text)) {
        type = prev.text == "payable" ? "address" : prev.text;
      } else if (prev.kind == Tok::Ident && k >= 2 && (r_.contract(prev.text) || r_.is_type_name(prev.text)) &&
                 (punct(k - 2, ";") || punct(k - 2, "{") || punct(k - 2, "}") || punct(k - 2, "(") ||
                  punct(k - 2, ","))) {
        type = prev.text;
      } else if (punct(k - 1, "]")) {
        type = "array";
      } else {
        continue;
      }
      locals_[at(k).text] = type;
    }
  }

  void collect_state_vars() {
    for (const auto* x : r_.lineage(&c_)) {
      for (const auto& v : x->vars) {
        state_.try_emplace(v.name, StateVar{x->fact.name + "." + v.name, v.type});
      }
    }
  }

  std::optional<std::string> type_of_name(const std::string& n) const {
    if (auto it = locals_.find(n); it != locals_.end()) return it->second;
    if (auto it = state_.find(n); it != state_.end()) return it->second.type;
    return std::nullopt;
  }

  std::size_t arity_of(std::size_t open) const {
    std::size_t close = match_bracket(t_, open, f_.body_end);
    if (close == npos || close == open + 1) return 0;
    if (punct(open + 1, "{")) {
      std::size_t brace_close = match_bracket(t_, open + 1, close);
      if (brace_close != npos) return split_commas(t_, open + 2, brace_close).size();
    }
    return split_commas(t_, open + 1, close).size();
  }

  std::optional<Resolved> call_at(std::size_t i) {
    const std::string& name = at(i).text;
    std::size_t open = i + 1;
    if (punct(open, "{")) {  // call options: f{value: x}(...)
      std::size_t close = match_bracket(t_, open, f_.body_end);
      if (close == npos) return std::nullopt;
      open = close + 1;
    }
    if (!punct(open, "(")) return std::nullopt;
    if (kNotCalls.contains(name) || is_elementary_type(name) || r_.is_type_name(name)) return std::nullopt;
    if (i > f_.body_begin) {
      const auto& prev = at(i - 1).text;
      if (prev == "emit" || prev == "new" || prev == "revert" || prev == "function") return std::nullopt;
    }
    std::size_t arity = arity_of(open);

    if (!punct(i - 1, ".")) {
      if (r_.contract(name)) return std::nullopt;  // cast such as IOracle(addr)
      if (const auto* f = r_.find_in_lineage(&c_, name, arity)) return Resolved{f->fact.key(), true};
      if (const auto* f = r_.find_unique(name, arity)) return Resolved{f->fact.key(), true};
      return Resolved{placeholder_callee("?", name, arity), false};
    }

    // Member call: work out what the receiver is.
    std::size_t ri = i - 2;
    enum class Kind { Unknown, Contract, Address, Value, Self, Super } kind = Kind::Unknown;
    std::string type;
    if (at(ri).kind == Tok::Ident) {
      const std::string& r = at(ri).text;
      bool nested = ri > f_.body_begin && punct(ri - 1, ".");
      if (nested) {
        std::string head = ri >= 2 ? at(ri - 2).text : "";
        if ((head == "msg" && r == "sender") || (head == "tx" && r == "origin") ||
            (head == "block" && r == "coinbase")) {
          kind = Kind::Address;
        }
      } else if (kBuiltinReceivers.contains(r)) {
        return std::nullopt;
      } else if (r == "this") {
        kind = Kind::Self;
      } else if (r == "super") {
        kind = Kind::Super;
      } else if (r_.contract(r)) {
        kind = Kind::Contract;
        type = r;
      } else if (auto ty = type_of_name(r)) {
        type = *ty;
        if (r_.contract(type)) kind = Kind::Contract;
        else if (type == "address") kind = Kind::Address;
        else if (is_elementary_type(type) || type == "array" || r_.is_type_name(type)) kind = Kind::Value;
        else if (!type.empty()) kind = Kind::Contract;  // contract type declared outside the project
      }
    } else if (punct(ri, ")")) {
      // Walk back to the matching '(' to see whether this is a cast.
      int depth = 0;
      std::size_t q = ri;
      for (; q > f_.body_begin; --q) {
        if (punct(q, ")")) ++depth;
        else if (punct(q, "(") && --depth == 0) break;
      }
      if (q > f_.body_begin && at(q - 1).kind == Tok::Ident) {
        const std::string& cast = at(q - 1).text;
        if (r_.contract(cast)) {
          kind = Kind::Contract;
          type = cast;
        } else if (cast == "address" || cast == "payable") {
          kind = Kind::Address;
        } else if (!kNotCalls.contains(cast) && !cast.empty() && std::isupper(static_cast<unsigned char>(cast[0]))) {
          kind = Kind::Contract;  // interface cast to a type outside the project
          type = cast;
        }
      }
    }

    switch (kind) {
      case Kind::Self:
        if (const auto* f = r_.find_in_lineage(&c_, name, arity)) return Resolved{f->fact.key(), true};
        return Resolved{placeholder_callee(c_.fact.name, name, arity), false};
      case Kind::Super:
        if (const auto* f = r_.find_in_lineage(&c_, name, arity, true)) return Resolved{f->fact.key(), true};
        return Resolved{placeholder_callee("super", name, arity), false};
      case Kind::Contract: {
        const RawContract* target = r_.contract(type);
        if (target && target->fact.kind != ContractKind::Interface) {
          if (const auto* f = r_.find_in_lineage(target, name, arity)) return Resolved{f->fact.key(), true};
        }
        return Resolved{placeholder_callee(type, name, arity), false};
      }
      case Kind::Address:
        if (kAddressMembers.contains(name)) return Resolved{placeholder_callee("address", name, arity), false};
        return std::nullopt;
      case Kind::Value:
        if (auto lib = using_library_call(name, arity)) return lib;
        return std::nullopt;
      case Kind::Unknown:
        break;
    }
    if (name == "push" || name == "pop") return std::nullopt;
    if (kAddressMembers.contains(name) && name != "transfer") {
      return Resolved{placeholder_callee("address", name, arity), false};
    }
    if (auto lib = using_library_call(name, arity)) return lib;
    if (const auto* f = r_.find_unique(name, arity)) return Resolved{f->fact.key(), true};
    return Resolved{placeholder_callee("?", name, arity), false};
  }

  std::optional<Resolved> using_library_call(const std::string& name, std::size_t arity) const {
    for (const auto* x : r_.lineage(&c_)) {
      for (const auto& lib : x->using_libs) {
        if (const auto* l = r_.contract(lib)) {
          if (const auto* f = r_.find_in(l, name, arity + 1)) return Resolved{f->fact.key(), true};
        }
      }
    }
    return std::nullopt;
  }

  std::vector<std::pair<std::string, AccessMode>> access_at(std::size_t k) const {
    const std::string& n = at(k).text;
    auto it = state_.find(n);
    if (it == state_.end() || locals_.contains(n)) return {};
    if (k > f_.body_begin && punct(k - 1, ".")) return {};
    if (punct(k + 1, "(")) return {};
    const std::string& var = it->second.qualified;
    std::size_t j = k + 1;
    bool push_pop = false;
    while (j < f_.body_end) {
      if (punct(j, "[")) {
        std::size_t close = match_bracket(t_, j, f_.body_end);
        if (close == npos) break;
        j = close + 1;
      } else if (punct(j, ".") && j + 1 < f_.body_end && at(j + 1).kind == Tok::Ident) {
        if ((at(j + 1).text == "push" || at(j + 1).text == "pop") && punct(j + 2, "(")) {
          push_pop = true;
          break;
        }
        j += 2;
      } else {
        break;
      }
    }
    using enum AccessMode;
    if (push_pop) return {{var, Write}};
    if (k > f_.body_begin) {
      const auto& prev = at(k - 1).text;
      if (prev == "delete") return {{var, Write}};
      if (prev == "++" || prev == "--") return {{var, Read}, {var, Write}};
    }
    if (j < f_.body_end && at(j).kind == Tok::Punct) {
      const auto& op = at(j).text;
      if (op == "=") return {{var, Write}};
      if (kAssignOps.contains(op) || op == "++" || op == "--") return {{var, Read}, {var, Write}};
    }
    return {{var, Read}};
  }

  struct StateVar {
    std::string qualified;
    std::string type;
  };

  const Resolver& r_;
  const RawContract& c_;
  const RawFunction& f_;
  const std::vector<Token>& t_;
  std::map<std::string, std::string> locals_;
  std::map<std::string, StateVar> state_;
};

}  // namespace

std::string blank_comments_and_strings(std::string_view src) {
  std::string out(src);
  enum class St { Code, Line, Block, Str } st = St::Code;
  char quote = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = src[i];
    char next = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (st) {
      case St::Code:
        if (c == '/' && next == '/') {
          st = St::Line;
          out[i] = ' ';
        } else if (c == '/' && next == '*') {
          st = St::Block;
          out[i] = ' ';
          out[++i] = ' ';
        } else if (c == '"' || c == '\'') {
          st = St::Str;
          quote = c;
        }
        break;
      case St::Line:
        if (c == '\n') st = St::Code;
        else out[i] = ' ';
        break;
      case St::Block:
        if (c == '*' && next == '/') {
          out[i] = ' ';
          out[++i] = ' ';
          st = St::Code;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
      case St::Str:
        if (c == '\\' && next != '\0' && next != '\n') {
          out[i] = ' ';
          out[++i] = ' ';
        } else if (c == quote) {
          st = St::Code;
        } else if (c == '\n') {
          st = St::Code;  // unterminated literal; resync at the line break
        } else {
          out[i] = ' ';
        }
        break;
    }
  }
  return out;
}

Extraction extract_facts(std::span<const SourceFile> sources, const TemplatePolicy& policy) {
  if (sources.empty()) throw EmptyProject("no source files given");
  Extraction result;
  std::vector<ParsedFile> parsed;
  parsed.reserve(sources.size());
  for (const auto& src : sources) {
    try {
      parsed.push_back(FileParser(src, policy).parse());
    } catch (const SchemaError& e) {
      result.warnings.push_back({src.path, e.what()});
    }
  }

  std::vector<RawContract*> contracts;
  std::set<std::string> names;
  for (auto& pf : parsed) {
    for (auto& c : pf.contracts) {
      c.tokens = &pf.tokens;
      if (!names.insert(c.fact.name).second) {
        result.warnings.push_back({c.fact.source_path, "duplicate contract " + c.fact.name + " ignored"});
        continue;
      }
      contracts.push_back(&c);
    }
  }
  if (contracts.empty()) throw EmptyProject("no parseable contracts in " + std::to_string(sources.size()) + " file(s)");

  Resolver resolver(contracts);
  FactSet& fs = result.facts;
  for (auto* c : contracts) {
    fs.contracts.push_back(c->fact);
    std::set<std::string> keys;
    std::vector<RawFunction> kept;
    for (auto& f : c->functions) {
      if (!keys.insert(f.fact.key()).second) {
        result.warnings.push_back({c->fact.source_path, "duplicate function " + f.fact.key() + " ignored"});
        continue;
      }
      kept.push_back(std::move(f));
    }
    c->functions = std::move(kept);
    for (const auto& f : c->functions) fs.functions.push_back(f.fact);
  }
  for (auto* c : contracts) {
    for (const auto& f : c->functions) BodyAnalyzer(resolver, *c, f).run(fs.calls, fs.state_accesses);
  }
  fs.validate();
  return result;
}

}  // namespace warden
