#include "warden/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>
#include <tuple>

#include <Eigen/SparseCore>

#include "warden/error.hpp"

namespace warden {

std::string_view to_string(EdgeKind k) { return k == EdgeKind::Call ? "call" : "data"; }

namespace {

auto edge_order(const DepEdge& e) { return std::tie(e.from, e.to, e.kind); }

}  // namespace

DependencyGraph::DependencyGraph(std::vector<std::string> nodes, std::vector<DepEdge> edges,
                                 std::map<std::string, NodeMeta> meta)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), meta_(std::move(meta)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);
  std::sort(edges_.begin(), edges_.end(), [](const auto& a, const auto& b) { return edge_order(a) < edge_order(b); });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (!index_.contains(e.from) || !index_.contains(e.to)) {
      throw UnknownFunction("edge endpoint not in graph: " + e.from + " -> " + e.to);
    }
    if (!(e.weight > 0.0 && e.weight <= 1.0)) throw SchemaError("edge weight outside (0, 1]: " + e.from);
    if (i > 0 && edge_order(edges_[i - 1]) == edge_order(e)) {
      throw SchemaError("duplicate edge " + e.from + " -> " + e.to);
    }
  }
  call_out_.assign(nodes_.size(), {});
  call_in_.assign(nodes_.size(), {});
  for (const auto& e : edges_) {
    if (e.kind != EdgeKind::Call) continue;
    std::size_t u = index_.at(e.from);
    std::size_t v = index_.at(e.to);
    call_out_[u].push_back(v);
    call_in_[v].push_back(u);
  }
}

std::optional<std::size_t> DependencyGraph::index_of(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DependencyGraph DependencyGraph::induced(const std::set<std::string>& keep) const {
  std::vector<std::string> nodes;
  std::map<std::string, NodeMeta> meta;
  for (const auto& n : nodes_) {
    if (!keep.contains(n)) continue;
    nodes.push_back(n);
    if (auto it = meta_.find(n); it != meta_.end()) meta.emplace(n, it->second);
  }
  std::vector<DepEdge> edges;
  for (const auto& e : edges_) {
    if (keep.contains(e.from) && keep.contains(e.to)) edges.push_back(e);
  }
  return DependencyGraph(std::move(nodes), std::move(edges), std::move(meta));
}

DependencyGraph DependencyGraph::induced_by_contracts(const std::vector<std::string>& contracts) const {
  std::set<std::string> wanted(contracts.begin(), contracts.end());
  std::set<std::string> keep;
  for (const auto& [key, m] : meta_) {
    if (wanted.contains(m.contract)) keep.insert(key);
  }
  return induced(keep);
}

DependencyGraph build_graph(const FactSet& facts, const EdgeWeights& weights) {
  std::vector<std::string> nodes;
  std::map<std::string, NodeMeta> meta;
  for (const auto& f : facts.functions) {
    nodes.push_back(f.key());
    meta.emplace(f.key(), NodeMeta{f.contract, f.visibility});
  }
  std::set<std::tuple<std::string, std::string, EdgeKind>> seen;
  std::vector<DepEdge> edges;
  for (const auto& c : facts.calls) {
    if (!c.resolved) continue;
    if (seen.emplace(c.caller, c.callee, EdgeKind::Call).second) {
      edges.push_back({c.caller, c.callee, EdgeKind::Call, weights.call});
    }
  }
  std::map<std::string, std::pair<std::set<std::string>, std::set<std::string>>> by_var;  // writers, readers
  for (const auto& a : facts.state_accesses) {
    auto& [writers, readers] = by_var[a.variable];
    (a.mode == AccessMode::Write ? writers : readers).insert(a.function);
  }
  for (const auto& [var, wr] : by_var) {
    for (const auto& w : wr.first) {
      for (const auto& r : wr.second) {
        if (w == r) continue;
        if (seen.emplace(w, r, EdgeKind::Data).second) edges.push_back({w, r, EdgeKind::Data, weights.data});
      }
    }
  }
  return DependencyGraph(std::move(nodes), std::move(edges), std::move(meta));
}

namespace {

std::set<std::size_t> bfs(const DependencyGraph& g, std::size_t start, int depth, bool forward) {
  std::set<std::size_t> seen{start};
  std::vector<std::size_t> frontier{start};
  for (int d = 0; d < depth && !frontier.empty(); ++d) {
    std::vector<std::size_t> next;
    for (auto u : frontier) {
      for (auto v : forward ? g.callees(u) : g.callers(u)) {
        if (seen.insert(v).second) next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

std::size_t require_node(const DependencyGraph& g, const std::string& f) {
  auto idx = g.index_of(f);
  if (!idx) throw UnknownFunction("unknown function " + f);
  return *idx;
}

}  // namespace

std::set<std::string> extract_caller_callee(const DependencyGraph& graph, const std::string& f, int depth) {
  if (depth < 1) throw InputError("caller/callee depth must be positive");
  std::size_t i = require_node(graph, f);
  std::set<std::string> out;
  for (auto v : bfs(graph, i, depth, true)) out.insert(graph.nodes()[v]);
  for (auto v : bfs(graph, i, depth, false)) out.insert(graph.nodes()[v]);
  return out;
}

std::set<std::string> transitive_callers(const DependencyGraph& graph, const std::string& f) {
  std::size_t i = require_node(graph, f);
  std::set<std::string> out;
  for (auto v : bfs(graph, i, std::numeric_limits<int>::max(), false)) {
    if (v != i) out.insert(graph.nodes()[v]);
  }
  return out;
}

Eigen::VectorXd betweenness(const DependencyGraph& graph) {
  const std::size_t n = graph.size();
  // Strongest edge per ordered pair gives the shortest length.
  std::vector<std::map<std::size_t, double>> adj(n);
  for (const auto& e : graph.edges()) {
    std::size_t u = *graph.index_of(e.from);
    std::size_t v = *graph.index_of(e.to);
    if (u == v) continue;
    double len = 1.0 / e.weight;
    auto [it, inserted] = adj[u].emplace(v, len);
    if (!inserted) it->second = std::min(it->second, len);
  }

  Eigen::VectorXd bc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };

  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> dist(n, inf);
    std::vector<double> sigma(n, 0.0);
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<bool> done(n, false);
    std::vector<std::size_t> order;
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[s] = 0.0;
    sigma[s] = 1.0;
    pq.emplace(0.0, s);
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (done[u]) continue;
      done[u] = true;
      order.push_back(u);
      for (const auto& [v, len] : adj[u]) {
        if (done[v]) continue;
        double nd = d + len;
        if (dist[v] == inf || (nd < dist[v] && !same(nd, dist[v]))) {
          dist[v] = nd;
          sigma[v] = sigma[u];
          preds[v].assign(1, u);
          pq.emplace(nd, v);
        } else if (same(nd, dist[v])) {
          sigma[v] += sigma[u];
          preds[v].push_back(u);
        }
      }
    }
    std::vector<double> delta(n, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      std::size_t w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) bc[static_cast<Eigen::Index>(w)] += delta[w];
    }
  }
  return bc;
}

Eigen::VectorXd pagerank(const DependencyGraph& graph, const PageRankOptions& options) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (n == 0) return {};
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd out_weight = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph.edges()) {
    auto u = static_cast<Eigen::Index>(*graph.index_of(e.from));
    auto v = static_cast<Eigen::Index>(*graph.index_of(e.to));
    triplets.emplace_back(v, u, e.weight);  // column-stochastic after scaling
    out_weight[u] += e.weight;
  }
  Eigen::SparseMatrix<double> transition(n, n);
  transition.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
  Eigen::VectorXd inv_out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    if (out_weight[u] > 0.0) inv_out[u] = 1.0 / out_weight[u];
  }
  transition = transition * inv_out.asDiagonal();

  const double d = options.damping;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < options.max_iterations; ++it) {
    double dangling = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
      if (out_weight[u] == 0.0) dangling += x[u];
    }
    Eigen::VectorXd next = d * (transition * x);
    next.array() += (d * dangling + (1.0 - d)) / static_cast<double>(n);
    double change = (next - x).lpNorm<1>();
    x = std::move(next);
    if (change < options.tolerance) break;
  }
  return x / x.sum();
}

CentralityTable centrality_scores(const DependencyGraph& graph, const PageRankOptions& options) {
  if (graph.empty()) throw EmptyGraph("centrality of an empty graph");
  Eigen::VectorXd bc = betweenness(graph);
  Eigen::VectorXd pr = pagerank(graph, options);
  CentralityTable table;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    auto k = static_cast<Eigen::Index>(i);
    table.betweenness.emplace(graph.nodes()[i], bc[k]);
    table.pagerank.emplace(graph.nodes()[i], pr[k]);
  }
  return table;
}

std::string to_dot(const DependencyGraph& graph) {
  std::ostringstream out;
  out << "digraph dependencies {\n";
  std::map<std::string, std::vector<std::string>> by_contract;
  for (const auto& n : graph.nodes()) {
    auto it = graph.node_meta().find(n);
    by_contract[it == graph.node_meta().end() ? std::string() : it->second.contract].push_back(n);
  }
  int cluster = 0;
  for (const auto& [contract, members] : by_contract) {
    out << "  subgraph cluster_" << cluster++ << " {\n    label=\"" << contract << "\";\n";
    for (const auto& m : members) out << "    \"" << m << "\";\n";
    out << "  }\n";
  }
  for (const auto& e : graph.edges()) {
    out << "  \"" << e.from << "\" -> \"" << e.to << "\" [label=\"" << to_string(e.kind) << " " << e.weight << "\""
        << (e.kind == EdgeKind::Data ? ", style=dashed" : "") << "];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json to_json(const DependencyGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes()) {
    nlohmann::json node{{"key", n}};
    if (auto it = graph.node_meta().find(n); it != graph.node_meta().end()) {
      node["contract"] = it->second.contract;
      node["visibility"] = to_string(it->second.visibility);
    }
    nodes.push_back(std::move(node));
  }
  nlohmann::json adjacency = nlohmann::json::object();
  for (const auto& e : graph.edges()) {
    adjacency[e.from].push_back({{"to", e.to}, {"kind", to_string(e.kind)}, {"weight", e.weight}});
  }
  return {{"nodes", nodes}, {"adjacency", adjacency}};
}

}  // namespace warden
