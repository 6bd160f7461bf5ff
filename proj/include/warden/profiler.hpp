#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "warden/facts.hpp"
#include "warden/gateway.hpp"
#include "warden/graph.hpp"

namespace warden {

struct Community {
  int id = 0;
  std::set<std::string> members;

  bool operator==(const Community&) const = default;
};

/// Undirected view used by Louvain: weights of (u,v) and (v,u) are summed and
/// self-loops dropped.
struct SymmetricGraph {
  std::vector<std::string> nodes;
  std::vector<std::map<std::size_t, double>> adj;
};

SymmetricGraph symmetrize(const DependencyGraph& graph);

/// Newman modularity of `labels` (one label per node) on `g`. Zero for a
/// graph without edges.
double modularity(const SymmetricGraph& g, const std::vector<int>& labels);
double modularity(const DependencyGraph& graph, const std::vector<Community>& communities);

struct LouvainOptions {
  std::uint64_t seed = 0;
  /// Independent runs with seeds derived from `seed`; the best partition wins.
  int restarts = 1;
};

/// Communities are numbered by their smallest member key.
std::vector<Community> detect_communities(const DependencyGraph& graph, const LouvainOptions& options = {});

struct Batch {
  int id = 0;
  std::vector<std::string> contracts;  ///< descending score, ties lexicographic
  std::map<std::string, double> scores;
  std::vector<std::string> tags;
  std::int64_t estimated_tokens = 0;
  std::vector<std::string> pruned_contracts;
  /// Function key -> header-only text for bodies cut by pruning.
  std::map<std::string, std::string> truncated_bodies;

  bool operator==(const Batch&) const = default;
};

nlohmann::json to_json(const Batch& b);

/// One batch per community holding its owning contracts; batches with equal
/// contract sets are collapsed. Scores are left empty.
std::vector<Batch> communities_to_batches(const std::vector<Community>& communities, const FactSet& facts);

/// Mean of alpha*Betw + beta*PR over each contract's functions inside the
/// subgraph induced by the batch.
std::map<std::string, double> score_contracts(const Batch& batch, const DependencyGraph& graph, double alpha, double beta);

/// Scores the batch and orders its contracts by the result.
void rank(Batch& batch, const DependencyGraph& graph, double alpha, double beta);

std::int64_t estimate_batch_tokens(const Batch& batch, const FactSet& facts);

const std::vector<std::string>& default_tag_vocabulary();

struct ProfilerConfig {
  double alpha = 0.5;
  double beta = 0.5;
  std::int64_t token_limit = 32000;
  std::uint64_t seed = 0;
  int louvain_restarts = 8;
  std::vector<std::string> tag_vocabulary = default_tag_vocabulary();
  bool refine = true;

  void validate() const;
};

/// Tags every batch through the model and merges batches that share a tag,
/// transitively. Tags outside the vocabulary are discarded.
std::vector<Batch> refine_batches(std::vector<Batch> batches, const DependencyGraph& graph, const FactSet& facts,
                                  ModelGateway& model, const ProfilerConfig& config);

struct PruneResult {
  Batch batch;
  std::vector<Warning> warnings;
};

/// Removes contracts (templates first) until the batch fits `limit`, then
/// truncates bodies of the last contract standing. `model` may be null, in
/// which case the lowest-ranked candidate is removed.
PruneResult prune_to_token_limit(Batch batch, const FactSet& facts, const DependencyGraph& graph, std::int64_t limit,
                                 ModelGateway* model, double alpha = 0.5, double beta = 0.5);

struct BatchPlan {
  std::vector<Batch> batches;
  std::shared_ptr<const DependencyGraph> graph;
  std::vector<Community> communities;
  std::vector<Warning> warnings;
};

nlohmann::json to_json(const BatchPlan& plan);

/// Full profiling pass. `model` may be null, which skips tag refinement and
/// uses the deterministic pruning fallback.
BatchPlan plan_batches(const FactSet& facts, const ProfilerConfig& config, ModelGateway* model);

}  // namespace warden
