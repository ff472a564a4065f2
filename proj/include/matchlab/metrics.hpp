#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace matchlab {

// AP of a ranked 0/1 relevance list:
//   (1 / #positives) * sum over relevant positions pos of (#relevant in 1..pos) / pos
inline double average_precision(const std::vector<int>& ranked_relevance) {
  std::size_t positives = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < ranked_relevance.size(); ++i) {
    if (ranked_relevance[i] == 0) continue;
    ++positives;
    acc += static_cast<double>(positives) / static_cast<double>(i + 1);
  }
  if (positives == 0) throw MetricError("average precision is undefined for a list with no relevant item");
  return acc / static_cast<double>(positives);
}

// Corpus indices sorted by ascending distance; ties go to the lower index.
inline std::vector<int> rank_ascending(const std::vector<double>& distances) {
  std::vector<int> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return distances[a] < distances[b]; });
  return order;
}

struct QueryResult {
  int query = -1;
  double ap = 0.0;
  std::vector<int> ranking;
};

struct RankingReport {
  std::vector<QueryResult> queries;  // queries with at least one relevant corpus graph
  std::vector<int> skipped;          // queries without any relevant corpus graph
  std::vector<std::string> warnings;
  double map = 0.0;

  bool defined() const { return !queries.empty(); }
};

// distances[i][c] belongs to query_ids[i]; relevance is indexed [query][corpus].
template <typename Relevance>
RankingReport rank_queries(const std::vector<int>& query_ids, const std::vector<std::vector<double>>& distances,
                           const Relevance& relevance) {
  RankingReport r;
  double total = 0.0;
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    const int q = query_ids[i];
    QueryResult qr;
    qr.query = q;
    qr.ranking = rank_ascending(distances[i]);
    std::vector<int> labels;
    labels.reserve(qr.ranking.size());
    for (int c : qr.ranking) labels.push_back(relevance[q][c] ? 1 : 0);
    if (std::find(labels.begin(), labels.end(), 1) == labels.end()) {
      r.skipped.push_back(q);
      r.warnings.push_back("query " + std::to_string(q) + " has no relevant corpus graph; excluded from MAP");
      continue;
    }
    qr.ap = average_precision(labels);
    total += qr.ap;
    r.queries.push_back(std::move(qr));
  }
  r.map = r.queries.empty() ? 0.0 : total / static_cast<double>(r.queries.size());
  return r;
}

}  // namespace matchlab
