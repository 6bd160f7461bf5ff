#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "warden/facts.hpp"

namespace warden {

enum class EdgeKind { Call, Data };
std::string_view to_string(EdgeKind k);

struct EdgeWeights {
  double call = 1.0;
  double data = 0.8;
};

struct DepEdge {
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::Call;
  double weight = 1.0;

  bool operator==(const DepEdge&) const = default;
};

struct NodeMeta {
  std::string contract;
  Visibility visibility = Visibility::Public;

  bool operator==(const NodeMeta&) const = default;
};

/// Directed, weighted function dependency graph. Immutable once built: nodes
/// are kept sorted and edges in canonical (from, to, kind) order.
class DependencyGraph {
 public:
  DependencyGraph() = default;
  DependencyGraph(std::vector<std::string> nodes, std::vector<DepEdge> edges, std::map<std::string, NodeMeta> meta);

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::vector<DepEdge>& edges() const noexcept { return edges_; }
  const std::map<std::string, NodeMeta>& node_meta() const noexcept { return meta_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  bool contains(const std::string& key) const { return index_.contains(key); }
  std::optional<std::size_t> index_of(const std::string& key) const;

  /// Indices of call-edge successors / predecessors of node `i`.
  const std::vector<std::size_t>& callees(std::size_t i) const { return call_out_[i]; }
  const std::vector<std::size_t>& callers(std::size_t i) const { return call_in_[i]; }

  /// Subgraph induced by `keep` (unknown keys are ignored).
  DependencyGraph induced(const std::set<std::string>& keep) const;
  /// Subgraph induced by every function owned by one of `contracts`.
  DependencyGraph induced_by_contracts(const std::vector<std::string>& contracts) const;

  bool operator==(const DependencyGraph& o) const { return nodes_ == o.nodes_ && edges_ == o.edges_ && meta_ == o.meta_; }

 private:
  std::vector<std::string> nodes_;
  std::vector<DepEdge> edges_;
  std::map<std::string, NodeMeta> meta_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> call_out_;
  std::vector<std::vector<std::size_t>> call_in_;
};

DependencyGraph build_graph(const FactSet& facts, const EdgeWeights& weights = {});

/// `f` plus every node within `depth` call-edge hops downstream or upstream.
std::set<std::string> extract_caller_callee(const DependencyGraph& graph, const std::string& f, int depth = 2);

/// Every node that reaches `f` through call edges, at any distance.
std::set<std::string> transitive_callers(const DependencyGraph& graph, const std::string& f);

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

/// Unnormalized directed betweenness with edge length 1/weight. Parallel
/// edges collapse to the strongest one; self-loops are ignored.
Eigen::VectorXd betweenness(const DependencyGraph& graph);

/// Weighted PageRank by power iteration with uniform teleport; dangling mass
/// is spread uniformly. Parallel edges add their weights.
Eigen::VectorXd pagerank(const DependencyGraph& graph, const PageRankOptions& options = {});

struct CentralityTable {
  std::map<std::string, double> betweenness;
  std::map<std::string, double> pagerank;
};

CentralityTable centrality_scores(const DependencyGraph& graph, const PageRankOptions& options = {});

std::string to_dot(const DependencyGraph& graph);
nlohmann::json to_json(const DependencyGraph& graph);

}  // namespace warden
