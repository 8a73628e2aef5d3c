#include "rrot/decoder.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace rrot {

int MatchingGraph::boundary_distance(int check) const {
  return std::min(distance[check][top()], distance[check][bottom()]);
}

int MatchingGraph::nearest_boundary(int check) const {
  return distance[check][top()] <= distance[check][bottom()] ? top() : bottom();
}

MatchingGraph build_graph(const SurfaceCode& code) {
  const int m = code.num_checks();
  const int nodes = m + 2;
  MatchingGraph g;
  g.num_checks = m;
  g.n = code.n;
  // Each qubit is an edge between the one or two X checks it touches.
  struct Edge {
    int to;
    int qubit;
  };
  std::vector<std::vector<Edge>> adj(nodes);
  for (int q = 0; q < code.n; ++q) {
    std::vector<int> ends;
    for (int f = 0; f < m; ++f)
      if (code.h_x[f][q]) ends.push_back(f);
    if (ends.size() == 1) ends.push_back(q / code.d == 0 ? m : m + 1);
    if (ends.size() != 2) throw std::logic_error("qubit not covered by one or two X checks");
    adj[ends[0]].push_back({ends[1], q});
    adj[ends[1]].push_back({ends[0], q});
  }
  for (auto& a : adj) std::sort(a.begin(), a.end(), [](const Edge& x, const Edge& y) { return x.qubit < y.qubit; });
  g.distance.assign(nodes, std::vector<int>(nodes, std::numeric_limits<int>::max()));
  g.path.assign(nodes, std::vector<std::vector<int>>(nodes));
  for (int src = 0; src < nodes; ++src) {
    std::vector<int> parent_node(nodes, -1), parent_qubit(nodes, -1);
    auto& dist = g.distance[src];
    dist[src] = 0;
    std::queue<int> bfs;
    bfs.push(src);
    while (!bfs.empty()) {
      int u = bfs.front();
      bfs.pop();
      for (const auto& e : adj[u]) {
        if (dist[e.to] != std::numeric_limits<int>::max()) continue;
        dist[e.to] = dist[u] + 1;
        parent_node[e.to] = u;
        parent_qubit[e.to] = e.qubit;
        bfs.push(e.to);
      }
    }
    for (int dst = 0; dst < nodes; ++dst) {
      auto& p = g.path[src][dst];
      for (int v = dst; v != src; v = parent_node[v]) p.push_back(parent_qubit[v]);
      std::sort(p.begin(), p.end());
    }
  }
  return g;
}

namespace {

void add_path(PauliZMask& mask, const std::vector<int>& qubits) {
  for (int q : qubits) mask[q] ^= 1;
}

PauliZMask exact_matching(const MatchingGraph& g, const std::vector<int>& defects) {
  const int k = static_cast<int>(defects.size());
  const std::uint32_t full = (1u << k) - 1;
  std::vector<int> cost(full + 1, std::numeric_limits<int>::max());
  // choice: partner index, or k for the boundary.
  std::vector<std::uint8_t> choice(full + 1, 0);
  cost[0] = 0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int i = __builtin_ctz(mask);
    const std::uint32_t rest = mask & ~(1u << i);
    int best = cost[rest] + g.boundary_distance(defects[i]);
    int pick = k;
    for (std::uint32_t r = rest; r; r &= r - 1) {
      const int j = __builtin_ctz(r);
      const int c = cost[rest & ~(1u << j)] + g.distance[defects[i]][defects[j]];
      if (c < best) {
        best = c;
        pick = j;
      }
    }
    cost[mask] = best;
    choice[mask] = static_cast<std::uint8_t>(pick);
  }
  PauliZMask out(g.n, 0);
  for (std::uint32_t mask = full; mask;) {
    const int i = __builtin_ctz(mask);
    const int j = choice[mask];
    if (j == k) {
      add_path(out, g.path[defects[i]][g.nearest_boundary(defects[i])]);
      mask &= ~(1u << i);
    } else {
      add_path(out, g.path[defects[i]][defects[j]]);
      mask &= ~((1u << i) | (1u << j));
    }
  }
  return out;
}

PauliZMask greedy_matching(const MatchingGraph& g, std::vector<int> defects) {
  PauliZMask out(g.n, 0);
  while (!defects.empty()) {
    int bi = 0, bj = -1, best = g.boundary_distance(defects[0]);
    for (std::size_t i = 0; i < defects.size(); ++i) {
      if (g.boundary_distance(defects[i]) < best) {
        best = g.boundary_distance(defects[i]);
        bi = static_cast<int>(i);
        bj = -1;
      }
      for (std::size_t j = i + 1; j < defects.size(); ++j)
        if (g.distance[defects[i]][defects[j]] < best) {
          best = g.distance[defects[i]][defects[j]];
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
    }
    if (bj < 0) {
      add_path(out, g.path[defects[bi]][g.nearest_boundary(defects[bi])]);
      defects.erase(defects.begin() + bi);
    } else {
      add_path(out, g.path[defects[bi]][defects[bj]]);
      defects.erase(defects.begin() + bj);
      defects.erase(defects.begin() + bi);
    }
  }
  return out;
}

}  // namespace

PauliZMask decode(const MatchingGraph& graph, const Syndrome& s, bool* greedy) {
  if (static_cast<int>(s.size()) != graph.num_checks) throw std::invalid_argument("syndrome length differs from check count");
  std::vector<int> defects;
  for (int i = 0; i < graph.num_checks; ++i)
    if (s[i]) defects.push_back(i);
  const bool fallback = static_cast<int>(defects.size()) > kExactDefectLimit;
  if (greedy) *greedy = fallback;
  return fallback ? greedy_matching(graph, defects) : exact_matching(graph, defects);
}

}  // namespace rrot
