#pragma once

// Bipartite matching of anomalous observations to dimension models.
//
// Exact matching solves the maximum-weight perfect matching as a min-cost
// max-flow problem (costs are negated weights) with successive shortest
// augmenting paths and Johnson potentials. Greedy matching repeatedly takes
// the heaviest remaining edge.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "isr/core.hpp"

namespace isr {

/// Square weight grid over the anomalous dimensions `dims`. Row u is the
/// observation currently recorded in dims[u]; column v is the model of
/// dims[v]; weight(u, v) is the membership probability of that observation
/// under that model.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::vector<DimIndex> dims, std::vector<double> weights)
      : dims_(std::move(dims)), weights_(std::move(weights)) {
    if (weights_.size() != dims_.size() * dims_.size())
      throw StructuralError("weight matrix must be square over its dimension list");
  }

  /// Convenience for tests: rows of equal length, dims 0..n-1.
  static WeightMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<DimIndex> dims(rows.size());
    std::vector<double> w;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw StructuralError("weight matrix must be square");
      dims[i] = i;
      w.insert(w.end(), rows[i].begin(), rows[i].end());
    }
    return WeightMatrix(std::move(dims), std::move(w));
  }

  std::size_t size() const { return dims_.size(); }
  const std::vector<DimIndex>& dims() const { return dims_; }
  double operator()(std::size_t u, std::size_t v) const { return weights_[u * size() + v]; }
  double& operator()(std::size_t u, std::size_t v) { return weights_[u * size() + v]; }

 private:
  std::vector<DimIndex> dims_;
  std::vector<double> weights_;
};

struct Matching {
  std::vector<DimIndex> dims;            // global dimension of each local index
  std::vector<std::size_t> assignment;   // local source -> local model
  double total_weight = 0.0;
};

enum class MatcherKind { exact, greedy };

namespace detail {

/// Successive-shortest-path min-cost flow on a small dense network.
template <typename Cost>
class MinCostFlow {
 public:
  struct Edge {
    std::size_t to;
    int cap;
    Cost cost;
  };

  explicit MinCostFlow(std::size_t nodes) : adj_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, int cap, Cost cost) {
    const std::size_t id = edges_.size();
    edges_.push_back({to, cap, cost});
    edges_.push_back({from, 0, -cost});
    adj_[from].push_back(id);
    adj_[to].push_back(id + 1);
    return id;
  }

  const Edge& edge(std::size_t id) const { return edges_[id]; }

  /// Pushes as much flow as possible from s to t at minimum cost. Returns the
  /// flow value. Potentials come from Bellman-Ford so negative edge costs are
  /// allowed as long as there is no negative cycle.
  int run(std::size_t s, std::size_t t) {
    const std::size_t n = adj_.size();
    constexpr Cost inf = std::numeric_limits<Cost>::max();
    std::vector<Cost> pot(n, inf);
    pot[s] = 0;
    for (std::size_t iter = 0; iter + 1 < n; ++iter) {
      bool changed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (pot[u] == inf) continue;
        for (std::size_t id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap > 0 && pot[u] + e.cost < pot[e.to]) {
            pot[e.to] = pot[u] + e.cost;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    for (auto& p : pot)
      if (p == inf) p = 0;

    int flow = 0;
    std::vector<Cost> dist(n);
    std::vector<std::size_t> via(n);
    std::vector<char> done(n);
    for (;;) {
      // dense Dijkstra on reduced costs; lowest node index wins ties
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(done.begin(), done.end(), 0);
      dist[s] = 0;
      for (;;) {
        std::size_t u = n;
        for (std::size_t i = 0; i < n; ++i)
          if (!done[i] && dist[i] != inf && (u == n || dist[i] < dist[u])) u = i;
        if (u == n) break;
        done[u] = 1;
        for (std::size_t id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap <= 0 || done[e.to]) continue;
          Cost reduced = e.cost + pot[u] - pot[e.to];
          if (reduced < 0) reduced = 0;  // rounding noise only
          if (dist[u] + reduced < dist[e.to]) {
            dist[e.to] = dist[u] + reduced;
            via[e.to] = id;
          }
        }
      }
      if (dist[t] == inf) break;
      for (std::size_t i = 0; i < n; ++i)
        if (dist[i] != inf) pot[i] += dist[i];
      int push = std::numeric_limits<int>::max();
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to)
        push = std::min(push, edges_[via[v]].cap);
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
      }
      flow += push;
    }
    return flow;
  }

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

inline void require_matchable(const WeightMatrix& m) {
  if (m.size() < 2) throw StructuralError("matching needs at least two dimensions");
}

}  // namespace detail

/// Maximum-weight perfect matching through min-cost max-flow.
inline Matching mcmf_match(const WeightMatrix& matrix) {
  detail::require_matchable(matrix);
  const std::size_t n = matrix.size();
  const std::size_t source = 2 * n;
  const std::size_t sink = 2 * n + 1;
  detail::MinCostFlow<double> net(2 * n + 2);
  for (std::size_t u = 0; u < n; ++u) net.add_edge(source, u, 1, 0.0);
  std::vector<std::size_t> pair_edge(n * n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) pair_edge[u * n + v] = net.add_edge(u, n + v, 1, -matrix(u, v));
  for (std::size_t v = 0; v < n; ++v) net.add_edge(n + v, sink, 1, 0.0);

  const int flow = net.run(source, sink);
  if (static_cast<std::size_t>(flow) != n)
    throw StructuralError("flow network failed to saturate");  // complete graph: unreachable

  Matching out{matrix.dims(), std::vector<std::size_t>(n), 0.0};
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (net.edge(pair_edge[u * n + v]).cap == 0) {
        out.assignment[u] = v;
        out.total_weight += matrix(u, v);
      }
    }
  }
  return out;
}

/// Takes the heaviest remaining edge until every source is matched. Ties go
/// to the lowest row, then the lowest column.
inline Matching greedy_match(const WeightMatrix& matrix) {
  detail::require_matchable(matrix);
  const std::size_t n = matrix.size();
  std::vector<char> row_used(n, 0), col_used(n, 0);
  Matching out{matrix.dims(), std::vector<std::size_t>(n), 0.0};
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best_u = n, best_v = n;
    for (std::size_t u = 0; u < n; ++u) {
      if (row_used[u]) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (col_used[v]) continue;
        if (best_u == n || matrix(u, v) > matrix(best_u, best_v)) {
          best_u = u;
          best_v = v;
        }
      }
    }
    row_used[best_u] = col_used[best_v] = 1;
    out.assignment[best_u] = best_v;
    out.total_weight += matrix(best_u, best_v);
  }
  return out;
}

inline Matching match(const WeightMatrix& matrix, MatcherKind kind) {
  return kind == MatcherKind::exact ? mcmf_match(matrix) : greedy_match(matrix);
}

/// Full-width mapping (identity outside the matched dimensions):
/// mapping[u] = v means the value currently recorded in u belongs to v.
inline std::vector<DimIndex> matching_to_mapping(const Matching& matching, std::size_t dim_count) {
  std::vector<DimIndex> mapping(dim_count);
  for (std::size_t d = 0; d < dim_count; ++d) mapping[d] = d;
  for (std::size_t u = 0; u < matching.assignment.size(); ++u) {
    const DimIndex src = matching.dims.at(u);
    const DimIndex dst = matching.dims.at(matching.assignment[u]);
    if (src >= dim_count || dst >= dim_count) throw StructuralError("matched dimension out of range");
    mapping[src] = dst;
  }
  return mapping;
}

inline std::vector<DimIndex> matching_to_mapping(const Matching& matching) {
  std::size_t width = 0;
  for (DimIndex d : matching.dims) width = std::max(width, d + 1);
  return matching_to_mapping(matching, width);
}

}  // namespace isr
