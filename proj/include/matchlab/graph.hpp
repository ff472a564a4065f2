#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace matchlab {

// Simple undirected graph. Edges are stored canonically (u < v), sorted and
// unique; the dense adjacency matrix is kept in sync with the edge list.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  Graph() = default;

  explicit Graph(int node_count, const std::vector<Edge>& edges = {}) : node_count_(node_count) {
    if (node_count < 0) throw DatasetError("Graph: negative node count");
    adjacency_.assign(static_cast<std::size_t>(node_count) * node_count, 0);
    features_.assign(node_count, 1.0);
    for (auto [u, v] : edges) add_edge(u, v);
    finalize();
  }

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& node_features() const { return features_; }

  bool has_edge(int u, int v) const { return adjacency_[static_cast<std::size_t>(u) * node_count_ + v] != 0; }

  int degree(int u) const {
    int d = 0;
    for (int v = 0; v < node_count_; ++v) d += has_edge(u, v) ? 1 : 0;
    return d;
  }

  std::vector<int> neighbors(int u) const {
    std::vector<int> out;
    for (int v = 0; v < node_count_; ++v)
      if (has_edge(u, v)) out.push_back(v);
    return out;
  }

  // Returns a copy with `extra` isolated nodes appended.
  Graph with_isolated_nodes(int extra) const { return Graph(node_count_ + extra, edges_); }

  // Relabels node u to perm[u].
  Graph relabeled(const std::vector<int>& perm) const {
    if (static_cast<int>(perm.size()) != node_count_) throw DatasetError("relabeled: permutation has wrong length");
    std::vector<Edge> e;
    e.reserve(edges_.size());
    for (auto [u, v] : edges_) e.emplace_back(perm[u], perm[v]);
    return Graph(node_count_, e);
  }

  // Node-induced subgraph on `nodes`, renumbered in the given order.
  Graph induced_subgraph(const std::vector<int>& nodes) const {
    std::vector<int> pos(node_count_, -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = static_cast<int>(i);
    std::vector<Edge> e;
    for (auto [u, v] : edges_)
      if (pos[u] >= 0 && pos[v] >= 0) e.emplace_back(pos[u], pos[v]);
    return Graph(static_cast<int>(nodes.size()), e);
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.node_count_ == b.node_count_ && a.edges_ == b.edges_;
  }

 private:
  void add_edge(int u, int v) {
    if (u < 0 || v < 0 || u >= node_count_ || v >= node_count_) throw DatasetError("Graph: edge endpoint out of range");
    if (u == v) throw DatasetError("Graph: self-loop");
    if (u > v) std::swap(u, v);
    edges_.emplace_back(u, v);
  }

  void finalize() {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (auto [u, v] : edges_) {
      adjacency_[static_cast<std::size_t>(u) * node_count_ + v] = 1;
      adjacency_[static_cast<std::size_t>(v) * node_count_ + u] = 1;
    }
  }

  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<char> adjacency_;
  std::vector<double> features_;
};

using GraphCollection = std::vector<Graph>;

// Query and corpus padded to a common node count N and a common edge-slot
// count. Padded nodes are isolated; padded edge slots carry no edge.
struct PaddedPair {
  Graph query;
  Graph corpus;
  int n = 0;
  int n_edges = 0;
  int query_real_nodes = 0;
  int corpus_real_nodes = 0;
  int query_real_edges = 0;
  int corpus_real_edges = 0;

  std::vector<bool> pad_node_mask(bool corpus_side) const {
    const int real = corpus_side ? corpus_real_nodes : query_real_nodes;
    std::vector<bool> m(n, false);
    for (int i = real; i < n; ++i) m[i] = true;
    return m;
  }

  std::vector<bool> pad_edge_mask(bool corpus_side) const {
    const int real = corpus_side ? corpus_real_edges : query_real_edges;
    std::vector<bool> m(n_edges, false);
    for (int i = real; i < n_edges; ++i) m[i] = true;
    return m;
  }
};

inline PaddedPair pad_pair(const Graph& query, const Graph& corpus) {
  PaddedPair p;
  p.n = std::max(query.node_count(), corpus.node_count());
  p.n_edges = std::max(query.edge_count(), corpus.edge_count());
  p.query = query.with_isolated_nodes(p.n - query.node_count());
  p.corpus = corpus.with_isolated_nodes(p.n - corpus.node_count());
  p.query_real_nodes = query.node_count();
  p.corpus_real_nodes = corpus.node_count();
  p.query_real_edges = query.edge_count();
  p.corpus_real_edges = corpus.edge_count();
  return p;
}

}  // namespace matchlab
