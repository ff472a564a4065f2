#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "graph.hpp"
#include "isomorphism.hpp"
#include "parallel.hpp"

namespace matchlab {

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;

  friend bool operator==(const Splits&, const Splits&) = default;
};

struct RetrievalDataset {
  std::vector<Graph> queries;
  std::vector<Graph> corpus;
  std::vector<std::vector<std::uint8_t>> relevance;  // [query][corpus]
  Splits splits;
  IsoSemantics semantics = IsoSemantics::monotone;

  std::size_t positive_pairs() const {
    std::size_t n = 0;
    for (const auto& row : relevance)
      for (auto r : row) n += r;
    return n;
  }

  double positive_fraction() const {
    const std::size_t total = queries.size() * corpus.size();
    return total == 0 ? 0.0 : static_cast<double>(positive_pairs()) / static_cast<double>(total);
  }

  friend bool operator==(const RetrievalDataset&, const RetrievalDataset&) = default;
};

// 60:15:25 by count; val and test are floored so rounding favours train.
// Indices are assigned contiguously: train first, then val, then test.
inline Splits make_splits(int n_queries) {
  const int n_val = static_cast<int>(n_queries * 15 / 100);
  const int n_test = static_cast<int>(n_queries * 25 / 100);
  const int n_train = n_queries - n_val - n_test;
  Splits s;
  for (int i = 0; i < n_queries; ++i) {
    if (i < n_train)
      s.train.push_back(i);
    else if (i < n_train + n_val)
      s.val.push_back(i);
    else
      s.test.push_back(i);
  }
  return s;
}

inline std::vector<std::vector<std::uint8_t>> compute_relevance(const std::vector<Graph>& queries,
                                                                const std::vector<Graph>& corpus,
                                                                IsoSemantics sem) {
  std::vector<std::vector<std::uint8_t>> rel(queries.size(), std::vector<std::uint8_t>(corpus.size(), 0));
  parallel_for(queries.size(), [&](std::size_t q) {
    for (std::size_t c = 0; c < corpus.size(); ++c) rel[q][c] = is_subgraph(queries[q], corpus[c], sem) ? 1 : 0;
  });
  return rel;
}

// BFS from `start` collecting at most `target` nodes (neighbours visited in
// ascending id order). Returns the visit order.
inline std::vector<int> bfs_nodes(const Graph& g, int start, int target) {
  std::vector<int> order;
  std::vector<bool> seen(g.node_count(), false);
  std::deque<int> frontier{start};
  seen[start] = true;
  while (!frontier.empty() && static_cast<int>(order.size()) < target) {
    const int u = frontier.front();
    frontier.pop_front();
    order.push_back(u);
    for (int v : g.neighbors(u))
      if (!seen[v]) {
        seen[v] = true;
        frontier.push_back(v);
      }
  }
  return order;
}

struct SamplingOptions {
  int n_queries = 300;
  int n_corpus = 800;
  int max_query_nodes = 15;
  int max_corpus_nodes = 20;
  std::uint64_t seed = 1704;
  IsoSemantics semantics = IsoSemantics::monotone;
  int resample_budget_per_graph = 1000;
};

namespace detail {

inline Graph sample_one(const GraphCollection& source, int cap, std::mt19937_64& rng, int budget) {
  for (int attempt = 0; attempt < budget; ++attempt) {
    const int target = std::uniform_int_distribution<int>(3, std::max(3, cap))(rng);
    const int gi = std::uniform_int_distribution<int>(0, static_cast<int>(source.size()) - 1)(rng);
    const Graph& g = source[gi];
    if (g.node_count() < 3) continue;
    const int start = std::uniform_int_distribution<int>(0, g.node_count() - 1)(rng);
    const auto nodes = bfs_nodes(g, start, target);
    if (nodes.size() < 3) continue;
    return g.induced_subgraph(nodes);
  }
  throw SamplingError("resample budget exhausted: no source component with at least 3 nodes was found");
}

}  // namespace detail

// BFS sampling of query and corpus graphs from a source collection, followed
// by exact pairwise relevance. Deterministic for a fixed seed.
inline RetrievalDataset sample_query_corpus(const GraphCollection& source, const SamplingOptions& opt) {
  if (source.empty()) throw SamplingError("sample_query_corpus: empty source collection");
  if (opt.max_query_nodes < 1 || opt.max_corpus_nodes < 1) throw ConfigError("sample_query_corpus: size caps must be >= 1");
  if (opt.n_queries < 0 || opt.n_corpus < 0) throw ConfigError("sample_query_corpus: counts must be non-negative");
  std::mt19937_64 rng(opt.seed);
  RetrievalDataset ds;
  ds.semantics = opt.semantics;
  for (int i = 0; i < opt.n_queries; ++i)
    ds.queries.push_back(detail::sample_one(source, opt.max_query_nodes, rng, opt.resample_budget_per_graph));
  for (int i = 0; i < opt.n_corpus; ++i)
    ds.corpus.push_back(detail::sample_one(source, opt.max_corpus_nodes, rng, opt.resample_budget_per_graph));
  ds.relevance = compute_relevance(ds.queries, ds.corpus, opt.semantics);
  ds.splits = make_splits(opt.n_queries);
  return ds;
}

// Erdos-Renyi G(n, p) source collection.
inline GraphCollection synthetic_er(int n, double p, int count, std::uint64_t seed) {
  if (n < 1 || p < 0.0 || p > 1.0 || count < 1) throw ConfigError("synthetic_er: need n >= 1, 0 <= p <= 1, count >= 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  GraphCollection out;
  for (int g = 0; g < count; ++g) {
    std::vector<Graph::Edge> e;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (coin(rng)) e.emplace_back(u, v);
    out.emplace_back(n, e);
  }
  return out;
}

// ---- persistence ---------------------------------------------------------------

inline nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  return nlohmann::json{{"nodes", g.node_count()}, {"edges", edges}};
}

inline Graph graph_from_json(const nlohmann::json& j) {
  std::vector<Graph::Edge> e;
  for (const auto& p : j.at("edges")) e.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  return Graph(j.at("nodes").get<int>(), e);
}

inline std::string semantics_name(IsoSemantics s) { return s == IsoSemantics::induced ? "induced" : "monotone"; }

inline nlohmann::json dataset_to_json(const RetrievalDataset& ds) {
  nlohmann::json j;
  j["format"] = "matchlab-dataset/1";
  j["semantics"] = semantics_name(ds.semantics);
  j["queries"] = nlohmann::json::array();
  for (const auto& g : ds.queries) j["queries"].push_back(graph_to_json(g));
  j["corpus"] = nlohmann::json::array();
  for (const auto& g : ds.corpus) j["corpus"].push_back(graph_to_json(g));
  j["relevance"] = nlohmann::json::array();
  for (const auto& row : ds.relevance) {
    std::vector<int> r(row.begin(), row.end());
    j["relevance"].push_back(r);
  }
  j["splits"] = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  return j;
}

inline RetrievalDataset dataset_from_json(const nlohmann::json& j) {
  RetrievalDataset ds;
  try {
    const std::string sem = j.value("semantics", "monotone");
    if (sem != "monotone" && sem != "induced") throw DatasetError("dataset: unknown semantics '" + sem + "'");
    ds.semantics = sem == "induced" ? IsoSemantics::induced : IsoSemantics::monotone;
    for (const auto& g : j.at("queries")) ds.queries.push_back(graph_from_json(g));
    for (const auto& g : j.at("corpus")) ds.corpus.push_back(graph_from_json(g));
    for (const auto& row : j.at("relevance")) {
      std::vector<std::uint8_t> r;
      for (const auto& v : row) r.push_back(static_cast<std::uint8_t>(v.get<int>() != 0));
      ds.relevance.push_back(std::move(r));
    }
    ds.splits.train = j.at("splits").at("train").get<std::vector<int>>();
    ds.splits.val = j.at("splits").at("val").get<std::vector<int>>();
    ds.splits.test = j.at("splits").at("test").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("dataset JSON: ") + e.what());
  }
  if (ds.relevance.size() != ds.queries.size()) throw DatasetError("dataset: relevance row count != query count");
  for (const auto& row : ds.relevance)
    if (row.size() != ds.corpus.size()) throw DatasetError("dataset: relevance column count != corpus count");
  std::vector<int> seen(ds.queries.size(), 0);
  for (const auto* part : {&ds.splits.train, &ds.splits.val, &ds.splits.test})
    for (int q : *part) {
      if (q < 0 || q >= static_cast<int>(ds.queries.size())) throw DatasetError("dataset: split index out of range");
      if (seen[q]++) throw DatasetError("dataset: splits overlap at query " + std::to_string(q));
    }
  return ds;
}

inline void save_dataset(const RetrievalDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write dataset file " + path.string());
  out << dataset_to_json(ds).dump() << "\n";
}

inline RetrievalDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read dataset file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("dataset file " + path.string() + " is not valid JSON: " + e.what());
  }
  return dataset_from_json(j);
}

}  // namespace matchlab
