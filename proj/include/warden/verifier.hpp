#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "warden/facts.hpp"
#include "warden/gateway.hpp"
#include "warden/graph.hpp"
#include "warden/hypothesis.hpp"

namespace warden {

enum class VerdictStage { Aggregation, Dedup, ThreatModel };
std::string_view to_string(VerdictStage s);

struct VerdictRecord {
  std::string hypothesis_id;
  VerdictStage stage = VerdictStage::Aggregation;
  std::string verdict;  ///< kept, dropped or merged_into:<id>
  std::string rationale;

  bool operator==(const VerdictRecord&) const = default;
};

nlohmann::json to_json(const VerdictRecord& r);

struct Judgement {
  bool keep = true;
  std::string rationale;
  std::vector<Warning> warnings;
};

/// Shows the model every transitive caller of the entry point with its
/// modifiers and drops the hypothesis only when the model names a guard that
/// closes the path. Fails open.
Judgement aggregate_context(const VulnerabilityHypothesis& h, const FactSet& facts, const DependencyGraph& graph,
                            ModelGateway& model);

/// Drops the hypothesis only when every exploit path needs a compromised
/// trusted party. Fails open.
Judgement threat_filter(const VulnerabilityHypothesis& h, ModelGateway& model);

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Density clustering over `n` points. Returns one label per point; -1 marks
/// noise. Clusters are numbered in order of their first core point.
template <typename Distance>
std::vector<int> dbscan(std::size_t n, double epsilon, int min_samples, Distance&& distance) {
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || distance(i, j) <= epsilon) neighbours[i].push_back(j);
    }
  }
  auto core = [&](std::size_t i) { return static_cast<int>(neighbours[i].size()) >= min_samples; };
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != -1 || !core(i)) continue;
    std::vector<std::size_t> frontier{i};
    label[i] = next;
    while (!frontier.empty()) {
      auto p = frontier.back();
      frontier.pop_back();
      if (!core(p)) continue;
      for (auto q : neighbours[p]) {
        if (label[q] != -1) continue;
        label[q] = next;
        frontier.push_back(q);
      }
    }
    ++next;
  }
  return label;
}

std::vector<int> dbscan_cosine(const std::vector<Eigen::VectorXd>& points, double epsilon, int min_samples);

struct HypothesisCluster {
  std::vector<std::string> member_ids;
  std::string representative_id;
};

struct DedupResult {
  std::vector<VulnerabilityHypothesis> survivors;
  std::vector<HypothesisCluster> clusters;
  std::vector<Warning> warnings;
};

/// Clusters hypotheses by the cosine distance of their embeddings and keeps
/// the most confident member of each cluster; the others' reasoning paths
/// become the winner's alternative paths.
DedupResult dedup(const std::vector<VulnerabilityHypothesis>& hs, ModelGateway& model, double epsilon = 0.15,
                  int min_samples = 1);

struct VerifierConfig {
  double epsilon = 0.15;
  int min_samples = 1;
};

struct Verification {
  std::vector<VulnerabilityHypothesis> v_final;
  std::vector<VerdictRecord> verdicts;
  std::vector<HypothesisCluster> clusters;
  std::vector<Warning> warnings;
};

/// Aggregation per hypothesis, then dedup over the survivors, then the
/// threat-model filter. Every input id receives exactly one verdict.
Verification verify(const std::vector<VulnerabilityHypothesis>& v_raw, const FactSet& facts,
                    const DependencyGraph& graph, ModelGateway& model, const VerifierConfig& config = {});

}  // namespace warden
