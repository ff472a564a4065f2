#pragma once

#include <algorithm>
#include <vector>

#include "graph.hpp"

namespace matchlab {

enum class IsoSemantics { monotone, induced };

namespace detail {

// VF2-style state-space search. Query nodes are matched in a fixed order in
// which every node (after the first of its component) has an already-matched
// neighbour, so candidates come from that neighbour's image's adjacency.
class SubgraphMatcher {
 public:
  SubgraphMatcher(const Graph& q, const Graph& c, IsoSemantics sem) : q_(q), c_(c), sem_(sem) {
    const int nq = q.node_count();
    q_adj_.resize(nq);
    for (int u = 0; u < nq; ++u) q_adj_[u] = q.neighbors(u);
    c_adj_.resize(c.node_count());
    for (int v = 0; v < c.node_count(); ++v) c_adj_[v] = c.neighbors(v);
    build_order();
    map_.assign(nq, -1);
    used_.assign(c.node_count(), false);
  }

  bool run() { return extend(0); }

 private:
  void build_order() {
    const int nq = q_.node_count();
    std::vector<bool> placed(nq, false);
    order_.clear();
    anchor_.clear();
    while (static_cast<int>(order_.size()) < nq) {
      // Seed each component with its highest-degree unplaced node.
      int seed = -1;
      for (int u = 0; u < nq; ++u)
        if (!placed[u] && (seed < 0 || q_adj_[u].size() > q_adj_[seed].size())) seed = u;
      placed[seed] = true;
      order_.push_back(seed);
      anchor_.push_back(-1);
      // Greedily take the unplaced node with most placed neighbours.
      for (;;) {
        int best = -1, best_links = 0, best_anchor = -1;
        for (int u = 0; u < nq; ++u) {
          if (placed[u]) continue;
          int links = 0, anc = -1;
          for (int w : q_adj_[u])
            if (placed[w]) {
              ++links;
              if (anc < 0) anc = w;
            }
          if (links > best_links || (links == best_links && links > 0 && q_adj_[u].size() > q_adj_[best].size())) {
            best = u;
            best_links = links;
            best_anchor = anc;
          }
        }
        if (best < 0) break;
        placed[best] = true;
        order_.push_back(best);
        anchor_.push_back(best_anchor);
      }
    }
  }

  bool feasible(int u, int v) const {
    if (c_adj_[v].size() < q_adj_[u].size()) return false;
    for (int w : q_adj_[u]) {
      const int fw = map_[w];
      if (fw >= 0 && !c_.has_edge(v, fw)) return false;
    }
    if (sem_ == IsoSemantics::induced) {
      for (int w = 0; w < q_.node_count(); ++w) {
        const int fw = map_[w];
        if (fw >= 0 && w != u && !q_.has_edge(u, w) && c_.has_edge(v, fw)) return false;
      }
    }
    return true;
  }

  bool try_candidate(std::size_t depth, int u, int v) {
    if (used_[v] || !feasible(u, v)) return false;
    map_[u] = v;
    used_[v] = true;
    if (extend(depth + 1)) return true;
    map_[u] = -1;
    used_[v] = false;
    return false;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size()) return true;
    const int u = order_[depth];
    const int anchor = anchor_[depth];
    if (anchor >= 0) {
      for (int v : c_adj_[map_[anchor]])
        if (try_candidate(depth, u, v)) return true;
    } else {
      for (int v = 0; v < c_.node_count(); ++v)
        if (try_candidate(depth, u, v)) return true;
    }
    return false;
  }

  const Graph& q_;
  const Graph& c_;
  IsoSemantics sem_;
  std::vector<std::vector<int>> q_adj_, c_adj_;
  std::vector<int> order_, anchor_;
  std::vector<int> map_;
  std::vector<bool> used_;
};

}  // namespace detail

// True iff an injective map V_q -> V_c carries every query edge onto a corpus
// edge. With IsoSemantics::induced, non-edges must also map to non-edges.
inline bool is_subgraph(const Graph& query, const Graph& corpus, IsoSemantics sem = IsoSemantics::monotone) {
  if (query.node_count() > corpus.node_count()) return false;
  if (query.edge_count() > corpus.edge_count()) return false;
  if (query.node_count() == 0) return true;
  return detail::SubgraphMatcher(query, corpus, sem).run();
}

}  // namespace matchlab
