#pragma once

// Exact network-flow kernels for the transport layer: largest-remainder
// integerization of probability weights, successive-shortest-path min-cost
// flow (Dijkstra with potentials; costs are nonnegative integers, so every
// comparison is exact and termination is structural), and Dinic max-flow for
// bottleneck feasibility checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

namespace inflab {

inline constexpr std::int64_t kWeightScale = 1000000000;

// Edge costs are rounded to this resolution before entering the solver.
// With path lengths below ~10^3 nodes and costs below ~10^4 the scaled
// shortest-path distances stay well inside int64.
inline constexpr std::int64_t kCostScale = 1000000000000;

// Rounds nonnegative weights to integers summing exactly to `scale`.
// Floor everything, then hand out the remaining units to the largest
// fractional parts (ties broken by index for determinism).
inline std::vector<std::int64_t> integerize_weights(
    const std::vector<double>& w, std::int64_t scale = kWeightScale) {
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0)) throw std::invalid_argument("integerize: negative weight");
    total += x;
  }
  if (!(total > 0)) throw std::invalid_argument("integerize: zero total weight");
  size_t n = w.size();
  std::vector<std::int64_t> out(n);
  std::vector<std::pair<double, size_t>> frac(n);
  std::int64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    double t = w[i] / total * (double)scale;
    out[i] = (std::int64_t)std::floor(t);
    frac[i] = {t - (double)out[i], i};
    assigned += out[i];
  }
  std::int64_t left = scale - assigned;
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::int64_t k = 0; k < left; ++k) out[frac[(size_t)k].second] += 1;
  return out;
}

// Min-cost flow on a small bipartite transport graph. Node layout:
// 0 = source, 1..nl = left points, nl+1..nl+nr = right points, nl+nr+1 = sink.
class MinCostFlow {
 public:
  struct Edge {
    int to;
    std::int64_t cap;
    std::int64_t cost;
    int rev;
  };

  explicit MinCostFlow(int n) : graph_((size_t)n) {}

  void add_edge(int u, int v, std::int64_t cap, std::int64_t cost) {
    if (cost < 0 || cost > (std::int64_t)4e15)
      throw std::invalid_argument("flow: edge cost out of range");
    graph_[(size_t)u].push_back({v, cap, cost, (int)graph_[(size_t)v].size()});
    graph_[(size_t)v].push_back({u, 0, -cost, (int)graph_[(size_t)u].size() - 1});
  }

  // Sends as much flow as possible from s to t; returns (flow, total cost).
  // The total is accumulated in 128 bits and reported as a double.
  std::pair<std::int64_t, double> run(int s, int t) {
    int n = (int)graph_.size();
    const std::int64_t inf = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> pot((size_t)n, 0), dist((size_t)n);
    std::vector<int> pv_node((size_t)n), pv_edge((size_t)n);
    std::int64_t flow = 0;
    __int128 cost = 0;
    while (true) {
      std::fill(dist.begin(), dist.end(), inf);
      dist[(size_t)s] = 0;
      using Item = std::pair<std::int64_t, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      pq.push({0, s});
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[(size_t)u]) continue;
        for (int ei = 0; ei < (int)graph_[(size_t)u].size(); ++ei) {
          const Edge& e = graph_[(size_t)u][(size_t)ei];
          if (e.cap <= 0 || dist[(size_t)u] == inf) continue;
          std::int64_t nd = d + e.cost + pot[(size_t)u] - pot[(size_t)e.to];
          if (nd < dist[(size_t)e.to]) {
            dist[(size_t)e.to] = nd;
            pv_node[(size_t)e.to] = u;
            pv_edge[(size_t)e.to] = ei;
            pq.push({nd, e.to});
          }
        }
      }
      if (dist[(size_t)t] == inf) break;
      for (int v = 0; v < n; ++v)
        if (dist[(size_t)v] < inf) pot[(size_t)v] += dist[(size_t)v];
      std::int64_t push = std::numeric_limits<std::int64_t>::max();
      for (int v = t; v != s; v = pv_node[(size_t)v])
        push = std::min(push, graph_[(size_t)pv_node[(size_t)v]]
                                  [(size_t)pv_edge[(size_t)v]].cap);
      for (int v = t; v != s; v = pv_node[(size_t)v]) {
        Edge& e = graph_[(size_t)pv_node[(size_t)v]][(size_t)pv_edge[(size_t)v]];
        e.cap -= push;
        graph_[(size_t)e.to][(size_t)e.rev].cap += push;
        cost += (__int128)push * e.cost;
      }
      flow += push;
    }
    return {flow, (double)cost};
  }

  // Residual inspection after run(): flow on a forward edge is the capacity
  // sitting on its reverse twin.
  const std::vector<std::vector<Edge>>& graph() const { return graph_; }

 private:
  std::vector<std::vector<Edge>> graph_;
};

// Dinic max-flow, used only as a yes/no feasibility probe.
class MaxFlow {
 public:
  struct Edge {
    int to;
    std::int64_t cap;
    int rev;
  };

  explicit MaxFlow(int n) : graph_((size_t)n) {}

  void add_edge(int u, int v, std::int64_t cap) {
    graph_[(size_t)u].push_back({v, cap, (int)graph_[(size_t)v].size()});
    graph_[(size_t)v].push_back({u, 0, (int)graph_[(size_t)u].size() - 1});
  }

  std::int64_t run(int s, int t) {
    std::int64_t flow = 0;
    while (bfs(s, t)) {
      iter_.assign(graph_.size(), 0);
      while (std::int64_t f = dfs(s, t, std::numeric_limits<std::int64_t>::max()))
        flow += f;
    }
    return flow;
  }

  const std::vector<std::vector<Edge>>& graph() const { return graph_; }

 private:
  bool bfs(int s, int t) {
    level_.assign(graph_.size(), -1);
    std::queue<int> q;
    level_[(size_t)s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (const Edge& e : graph_[(size_t)u]) {
        if (e.cap > 0 && level_[(size_t)e.to] < 0) {
          level_[(size_t)e.to] = level_[(size_t)u] + 1;
          q.push(e.to);
        }
      }
    }
    return level_[(size_t)t] >= 0;
  }

  std::int64_t dfs(int u, int t, std::int64_t up) {
    if (u == t) return up;
    for (int& i = iter_[(size_t)u]; i < (int)graph_[(size_t)u].size(); ++i) {
      Edge& e = graph_[(size_t)u][(size_t)i];
      if (e.cap <= 0 || level_[(size_t)e.to] != level_[(size_t)u] + 1) continue;
      std::int64_t d = dfs(e.to, t, std::min(up, e.cap));
      if (d > 0) {
        e.cap -= d;
        graph_[(size_t)e.to][(size_t)e.rev].cap += d;
        return d;
      }
    }
    return 0;
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace inflab
