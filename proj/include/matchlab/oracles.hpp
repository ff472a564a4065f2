#pragma once

// Exact combinatorial references: the QAP subgraph distance by enumeration of
// all node permutations and the hinge-cost LAP by the Hungarian method.

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "matrix.hpp"

namespace matchlab {

inline constexpr int kMaxQapNodes = 9;

// min over permutations P of sum [A_q - P A_c P^T]_+ over all ordered entries,
// so every uncovered undirected query edge contributes 2.
inline int exact_qap_distance(const Graph& query, const Graph& corpus) {
  const int n = std::max(query.node_count(), corpus.node_count());
  if (n > kMaxQapNodes) {
    throw SizeGuardError("exact_qap_distance: " + std::to_string(n) + " nodes exceeds the enumeration limit of " +
                         std::to_string(kMaxQapNodes) + "; use is_subgraph for larger graphs");
  }
  const Graph q = query.with_isolated_nodes(n - query.node_count());
  const Graph c = corpus.with_isolated_nodes(n - corpus.node_count());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = std::numeric_limits<int>::max();
  do {
    int cost = 0;
    for (auto [u, v] : q.edges()) {
      if (!c.has_edge(perm[u], perm[v])) cost += 2;
      if (cost >= best) break;
    }
    best = std::min(best, cost);
    if (best == 0) break;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

// Kuhn-Munkres with potentials, O(n^3), square cost matrix.
inline Assignment hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("hungarian: cost must be square, got " + cost.shape_string());
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment a;
  a.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) a.row_to_col[p[j] - 1] = j - 1;
  // Sum the chosen entries directly rather than trusting the dual value.
  for (int i = 0; i < n; ++i) a.cost += cost(i, a.row_to_col[i]);
  return a;
}

// C[u, v] = sum_i [Xq[u, i] - Xc[v, i]]_+
inline Matrix hinge_cost(const Matrix& xq, const Matrix& xc) {
  if (xq.cols() != xc.cols()) throw DimensionError("hinge_cost: width mismatch " + xq.shape_string() + " vs " + xc.shape_string());
  Matrix c(xq.rows(), xc.rows());
  for (std::size_t u = 0; u < xq.rows(); ++u)
    for (std::size_t v = 0; v < xc.rows(); ++v) {
      double s = 0.0;
      for (std::size_t i = 0; i < xq.cols(); ++i) s += std::max(0.0, xq(u, i) - xc(v, i));
      c(u, v) = s;
    }
  return c;
}

// min over hard permutations P of || [Xq - P Xc]_+ ||_{1,1}.
inline double exact_lap_distance(const Matrix& xq, const Matrix& xc) {
  if (!xq.same_shape(xc)) throw DimensionError("exact_lap_distance: shape mismatch " + xq.shape_string() + " vs " + xc.shape_string());
  if (xq.rows() == 0) return 0.0;
  return hungarian(hinge_cost(xq, xc)).cost;
}

}  // namespace matchlab
