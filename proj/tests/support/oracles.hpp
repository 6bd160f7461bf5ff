#pragma once

// Brute-force reference implementations used to check the library. They
// favour the textbook definition over speed and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Edge {
  int from;
  int to;
  bool call;  // false: data edge
};

// Call edges have length 4 quarter-units (weight 1.0), data edges 5 (0.8).
inline std::int64_t quarter_length(const Edge& e) { return e.call ? 4 : 5; }

/// Hop distance over call edges via Floyd-Warshall; -1 when unreachable.
inline std::vector<std::vector<int>> call_hops(int n, const std::vector<Edge>& edges) {
  const int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : edges) {
    if (e.call && e.from != e.to) d[e.from][e.to] = 1;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  for (auto& row : d)
    for (auto& x : row)
      if (x >= inf) x = -1;
  return d;
}

/// Nodes within `depth` call hops of `f` in either direction, `f` included.
inline std::set<int> caller_callee(int n, const std::vector<Edge>& edges, int f, int depth) {
  auto d = call_hops(n, edges);
  std::set<int> out;
  for (int v = 0; v < n; ++v) {
    if ((d[f][v] >= 0 && d[f][v] <= depth) || (d[v][f] >= 0 && d[v][f] <= depth)) out.insert(v);
  }
  return out;
}

/// Betweenness from the definition: sum over ordered pairs (s, t) of the
/// fraction of shortest s-t paths through v. Integer lengths keep ties exact.
inline std::vector<double> betweenness(int n, const std::vector<Edge>& edges) {
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::vector<std::int64_t>> len(n, std::vector<std::int64_t>(n, inf));
  for (const auto& e : edges) {
    if (e.from == e.to) continue;
    len[e.from][e.to] = std::min(len[e.from][e.to], quarter_length(e));
  }
  auto dist = len;
  for (int i = 0; i < n; ++i) dist[i][i] = 0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (dist[i][k] < inf && dist[k][j] < inf) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);

  // sigma[s][t]: number of shortest s-t paths, by memoised recursion on the
  // last edge of the path.
  std::vector<std::vector<double>> sigma(n, std::vector<double>(n, -1.0));
  std::function<double(int, int)> count = [&](int s, int t) -> double {
    if (sigma[s][t] >= 0.0) return sigma[s][t];
    if (s == t) return sigma[s][t] = 1.0;
    if (dist[s][t] >= inf) return sigma[s][t] = 0.0;
    double c = 0.0;
    for (int u = 0; u < n; ++u) {
      if (u == t || len[u][t] >= inf || dist[s][u] >= inf) continue;
      if (dist[s][u] + len[u][t] == dist[s][t]) c += count(s, u);
    }
    return sigma[s][t] = c;
  };

  std::vector<double> bc(n, 0.0);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      if (s == t || dist[s][t] >= inf) continue;
      double total = count(s, t);
      for (int v = 0; v < n; ++v) {
        if (v == s || v == t || dist[s][v] >= inf || dist[v][t] >= inf) continue;
        if (dist[s][v] + dist[v][t] == dist[s][t]) bc[v] += count(s, v) * count(v, t) / total;
      }
    }
  return bc;
}

/// PageRank as the solution of the linear system
/// (I - d P) x = (1 - d)/n * 1, with dangling columns replaced by uniform
/// columns, then normalised to sum 1.
inline std::vector<double> pagerank(int n, const std::vector<Edge>& edges, double damping = 0.85) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) w(e.to, e.from) += e.call ? 1.0 : 0.8;
  Eigen::MatrixXd p(n, n);
  for (int j = 0; j < n; ++j) {
    double out = w.col(j).sum();
    if (out > 0.0) p.col(j) = w.col(j) / out;
    else p.col(j).setConstant(1.0 / n);
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - damping * p;
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n, (1.0 - damping) / n);
  Eigen::VectorXd x = a.fullPivLu().solve(b);
  x /= x.sum();
  return {x.data(), x.data() + n};
}

/// Symmetric weights as used for community detection: w(u,v) + w(v,u), no
/// self-loops.
inline std::vector<std::vector<double>> symmetric(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& e : edges) {
    if (e.from == e.to) continue;
    double w = e.call ? 1.0 : 0.8;
    a[e.from][e.to] += w;
    a[e.to][e.from] += w;
  }
  return a;
}

/// Newman modularity straight from the double sum over node pairs.
inline double modularity(const std::vector<std::vector<double>>& a, const std::vector<int>& label) {
  const int n = static_cast<int>(a.size());
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (label[i] == label[j]) q += a[i][j] - k[i] * k[j] / two_m;
  return q / two_m;
}

/// Maximum modularity over every set partition (restricted growth strings).
inline double best_modularity(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  std::vector<int> label(n, 0), high(n, 0);
  double best = -1.0;
  while (true) {
    best = std::max(best, modularity(a, label));
    int i = n - 1;
    while (i > 0 && label[i] == high[i - 1] + 1) --i;
    if (i == 0) break;
    ++label[i];
    high[i] = std::max(high[i - 1], label[i]);
    for (int j = i + 1; j < n; ++j) {
      label[j] = 0;
      high[j] = high[i];
    }
  }
  return best;
}

/// DBSCAN with min_samples = 1: every point is core, so clusters are the
/// connected components of the "distance <= eps" graph. Labels follow the
/// order in which components are first met.
inline std::vector<int> dbscan_components(const std::vector<std::vector<double>>& dist, double eps) {
  const int n = static_cast<int>(dist.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dist[i][j] <= eps) parent[find(i)] = find(j);
  std::map<int, int> name;
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) {
    auto [it, _] = name.emplace(find(i), static_cast<int>(name.size()));
    out[i] = it->second;
  }
  return out;
}

/// For a link matrix where each node has at most one successor and one
/// predecessor and there is no cycle, transitive chaining yields exactly the
/// maximal paths.
inline std::set<std::vector<int>> maximal_paths(const std::vector<std::vector<bool>>& link) {
  const int n = static_cast<int>(link.size());
  std::vector<int> next(n, -1);
  std::vector<bool> has_pred(n, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (link[i][j]) {
        next[i] = j;
        has_pred[j] = true;
      }
  std::set<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    if (has_pred[i]) continue;
    std::vector<int> path;
    for (int v = i; v != -1; v = next[v]) path.push_back(v);
    out.insert(path);
  }
  return out;
}

/// Random acyclic partial permutation: a random order split into runs.
inline std::vector<std::vector<bool>> random_chain_matrix(int n, std::mt19937& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<bool>> link(n, std::vector<bool>(n, false));
  std::bernoulli_distribution cut(0.35);
  for (int i = 0; i + 1 < n; ++i)
    if (!cut(rng)) link[order[i]][order[i + 1]] = true;
  return link;
}

/// Inputs in [lo, hi) where `rate` (per mille) compounded `rounds` times
/// with floor division loses at least `num/den` of the exact result.
inline std::vector<std::int64_t> drift_search(std::int64_t lo, std::int64_t hi, std::int64_t rate, int rounds,
                                              std::int64_t num, std::int64_t den) {
  std::vector<std::int64_t> out;
  for (std::int64_t x = lo; x < hi; ++x) {
    // exact = x * rate^rounds / 1000^rounds, compared without division.
    __int128 exact = x, scale = 1;
    std::int64_t v = x;
    for (int r = 0; r < rounds; ++r) {
      exact *= rate;
      scale *= 1000;
      v = v * rate / 1000;
    }
    __int128 approx = static_cast<__int128>(v) * scale;
    if ((exact - approx) * den >= exact * num) out.push_back(x);
  }
  return out;
}

}  // namespace oracle
