#include <algorithm>
#include <numeric>
#include <random>

#include "warden/error.hpp"
#include "warden/profiler.hpp"

namespace warden {

SymmetricGraph symmetrize(const DependencyGraph& graph) {
  SymmetricGraph g;
  g.nodes = graph.nodes();
  g.adj.resize(g.nodes.size());
  for (const auto& e : graph.edges()) {
    auto u = *graph.index_of(e.from);
    auto v = *graph.index_of(e.to);
    if (u == v) continue;
    g.adj[u][v] += e.weight;
    g.adj[v][u] += e.weight;
  }
  return g;
}

namespace {

// Weighted graph for one Louvain level. adj[i][i] holds twice the internal
// weight of the aggregated node, so degree(i) = sum of row i.
struct Level {
  std::vector<std::map<std::size_t, double>> adj;
  std::vector<double> degree;
  double two_m = 0.0;

  explicit Level(std::vector<std::map<std::size_t, double>> a) : adj(std::move(a)), degree(adj.size(), 0.0) {
    for (std::size_t i = 0; i < adj.size(); ++i) {
      for (const auto& [_, w] : adj[i]) degree[i] += w;
      two_m += degree[i];
    }
  }
};

double level_modularity(const Level& g, const std::vector<std::size_t>& comm) {
  if (g.two_m <= 0.0) return 0.0;
  std::vector<double> in(g.adj.size(), 0.0), tot(g.adj.size(), 0.0);
  for (std::size_t i = 0; i < g.adj.size(); ++i) {
    tot[comm[i]] += g.degree[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (comm[j] == comm[i]) in[comm[i]] += w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < in.size(); ++c) q += in[c] / g.two_m - (tot[c] / g.two_m) * (tot[c] / g.two_m);
  return q;
}

// One round of local moves. Returns true when any node changed community.
bool local_moves(const Level& g, std::vector<std::size_t>& comm, std::mt19937_64& rng) {
  const std::size_t n = g.adj.size();
  std::vector<double> tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) tot[comm[i]] += g.degree[i];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  bool moved_any = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i : order) {
      std::size_t own = comm[i];
      std::map<std::size_t, double> links;
      for (const auto& [j, w] : g.adj[i]) {
        if (j != i) links[comm[j]] += w;
      }
      tot[own] -= g.degree[i];
      auto gain = [&](std::size_t c) {
        auto it = links.find(c);
        double k_in = it == links.end() ? 0.0 : it->second;
        return k_in - tot[c] * g.degree[i] / g.two_m;
      };
      std::size_t best = own;
      double best_gain = gain(own);
      for (const auto& [c, _] : links) {
        double dq = gain(c);
        if (dq > best_gain + 1e-12) {
          best = c;
          best_gain = dq;
        }
      }
      tot[best] += g.degree[i];
      if (best != own) {
        comm[i] = best;
        moved = true;
        moved_any = true;
      }
    }
  }
  return moved_any;
}

void relabel(std::vector<std::size_t>& comm) {
  std::map<std::size_t, std::size_t> ids;
  for (auto& c : comm) c = ids.emplace(c, ids.size()).first->second;
}

std::vector<std::size_t> louvain_once(const SymmetricGraph& sg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Level level(sg.adj);
  std::vector<std::size_t> node_comm(sg.nodes.size());
  std::iota(node_comm.begin(), node_comm.end(), 0);
  if (level.two_m <= 0.0) return node_comm;

  while (true) {
    std::vector<std::size_t> comm(level.adj.size());
    std::iota(comm.begin(), comm.end(), 0);
    if (!local_moves(level, comm, rng)) break;
    relabel(comm);
    for (auto& c : node_comm) c = comm[c];
    std::size_t k = *std::max_element(comm.begin(), comm.end()) + 1;
    std::vector<std::map<std::size_t, double>> next(k);
    for (std::size_t i = 0; i < level.adj.size(); ++i) {
      for (const auto& [j, w] : level.adj[i]) next[comm[i]][comm[j]] += w;
    }
    if (k == level.adj.size()) break;
    level = Level(std::move(next));
  }
  return node_comm;
}

}  // namespace

double modularity(const SymmetricGraph& g, const std::vector<int>& labels) {
  if (labels.size() != g.nodes.size()) throw InputError("modularity: label count does not match node count");
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> comm(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) comm[i] = ids.emplace(labels[i], ids.size()).first->second;
  return level_modularity(Level(g.adj), comm);
}

double modularity(const DependencyGraph& graph, const std::vector<Community>& communities) {
  std::vector<int> labels(graph.size(), -1);
  for (const auto& c : communities) {
    for (const auto& m : c.members) {
      auto i = graph.index_of(m);
      if (!i) throw UnknownFunction("community member not in graph: " + m);
      labels[*i] = c.id;
    }
  }
  if (std::find(labels.begin(), labels.end(), -1) != labels.end()) {
    throw InputError("communities do not cover every graph node");
  }
  return modularity(symmetrize(graph), labels);
}

std::vector<Community> detect_communities(const DependencyGraph& graph, const LouvainOptions& options) {
  if (graph.empty()) throw EmptyGraph("cannot detect communities of an empty graph");
  auto sg = symmetrize(graph);
  Level base(sg.adj);

  std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32)};
  std::vector<std::uint32_t> seeds(static_cast<std::size_t>(std::max(1, options.restarts)) * 2);
  seq.generate(seeds.begin(), seeds.end());

  std::vector<std::size_t> best;
  double best_q = 0.0;
  for (std::size_t r = 0; r * 2 < seeds.size(); ++r) {
    std::uint64_t s = (std::uint64_t{seeds[2 * r]} << 32) | seeds[2 * r + 1];
    auto comm = louvain_once(sg, s);
    double q = level_modularity(base, comm);
    if (best.empty() || q > best_q + 1e-12) {
      best = std::move(comm);
      best_q = q;
    }
  }

  std::map<std::size_t, std::set<std::string>> groups;
  for (std::size_t i = 0; i < best.size(); ++i) groups[best[i]].insert(sg.nodes[i]);
  std::vector<Community> out;
  for (auto& [_, members] : groups) out.push_back({0, std::move(members)});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return *a.members.begin() < *b.members.begin(); });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

}  // namespace warden
