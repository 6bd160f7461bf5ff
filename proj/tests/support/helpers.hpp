#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "warden/cli.hpp"
#include "warden/gateway.hpp"
#include "warden/graph.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(WARDEN_FIXTURES) / rel; }

inline std::string node_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "C.f%02d()", i);
  return buf;
}

inline warden::DependencyGraph make_graph(int n, const std::vector<oracle::Edge>& edges) {
  std::vector<std::string> nodes;
  std::map<std::string, warden::NodeMeta> meta;
  for (int i = 0; i < n; ++i) {
    nodes.push_back(node_name(i));
    meta.emplace(node_name(i), warden::NodeMeta{"C", warden::Visibility::Public});
  }
  std::vector<warden::DepEdge> out;
  for (const auto& e : edges) {
    out.push_back({node_name(e.from), node_name(e.to), e.call ? warden::EdgeKind::Call : warden::EdgeKind::Data,
                   e.call ? 1.0 : 0.8});
  }
  return warden::DependencyGraph(std::move(nodes), std::move(out), std::move(meta));
}

/// Random directed graph without duplicate (from, to, kind) triples.
inline std::vector<oracle::Edge> random_edges(int n, double density, std::mt19937& rng) {
  std::vector<oracle::Edge> edges;
  std::bernoulli_distribution present(density), is_call(0.6);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (present(rng)) edges.push_back({i, j, is_call(rng)});
    }
  return edges;
}

inline std::unique_ptr<warden::ModelGateway> scripted(const nlohmann::json& scenario, warden::ModelConfig config = {}) {
  return std::make_unique<warden::ModelGateway>(warden::ScriptedBackend::from_json(scenario.dump()), config);
}

inline std::unique_ptr<warden::ModelGateway> scripted_file(const std::string& rel, warden::ModelConfig config = {}) {
  return std::make_unique<warden::ModelGateway>(
      warden::ScriptedBackend::from_json(warden::read_file(fixture(rel).string())), config);
}

/// Project of `contracts` contracts named K00.. with `per_contract` functions
/// each; bodies carry `body_chars` of filler and calls are drawn at random.
inline warden::FactSet synthetic_project(int contracts, int per_contract, std::size_t body_chars, double call_density,
                                         std::mt19937& rng) {
  warden::FactSet fs;
  std::vector<std::string> keys;
  for (int c = 0; c < contracts; ++c) {
    char name[16];
    std::snprintf(name, sizeof name, "K%02d", c);
    int line = 1;
    for (int f = 0; f < per_contract; ++f) {
      char fname[16];
      std::snprintf(fname, sizeof fname, "g%02d", f);
      std::string body = "function " + std::string(fname) + "() public {\n";
      while (body.size() + 2 < body_chars) body += "        total = total + 1;\n";
      body += "}";
      int lines = static_cast<int>(std::count(body.begin(), body.end(), '\n'));
      fs.functions.push_back({name, fname, std::string(fname) + "()", warden::Visibility::Public, {},
                              {line, line + lines}, body});
      keys.push_back(fs.functions.back().key());
      line += lines + 2;
    }
    fs.contracts.push_back({name, std::string(name) + ".sol", warden::ContractKind::Contract, false, line});
  }
  std::bernoulli_distribution call(call_density);
  for (const auto& a : keys)
    for (const auto& b : keys)
      if (a != b && call(rng)) fs.calls.push_back({a, b, true});
  fs.validate();
  return fs;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("warden-" + tag + "-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
