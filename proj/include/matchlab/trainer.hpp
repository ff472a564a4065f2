#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "parameters.hpp"

namespace matchlab {

inline double ranking_loss(double d_pos, double d_neg, double margin) { return std::max(0.0, margin + d_pos - d_neg); }

inline Tensor ranking_loss(const Tensor& d_pos, const Tensor& d_neg, double margin) {
  return relu(add_scalar(sub(d_pos, d_neg), margin));
}

struct TrainConfig {
  double margin = 0.5;
  int batch_size = 128;
  int max_epochs = 1000;
  int patience = 50;
  double min_delta = 1e-4;
  std::uint64_t seed = 1704;
  AdamConfig adam;
  unsigned threads = 0;  // 0: thread_count()

  void validate() const {
    if (!(margin > 0.0)) throw ConfigError("invalid configuration: margin must be > 0");
    if (batch_size < 1) throw ConfigError("invalid configuration: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("invalid configuration: max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("invalid configuration: patience must be >= 1");
    if (min_delta < 0.0) throw ConfigError("invalid configuration: min_delta must be >= 0");
    if (!(adam.lr > 0.0)) throw ConfigError("invalid configuration: lr must be > 0");
  }

  unsigned workers() const { return threads == 0 ? thread_count() : threads; }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"margin", c.margin},         {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs}, {"patience", c.patience},
                     {"min_delta", c.min_delta},   {"seed", c.seed},
                     {"lr", c.adam.lr},            {"weight_decay", c.adam.weight_decay},
                     {"beta1", c.adam.beta1},      {"beta2", c.adam.beta2},
                     {"eps", c.adam.eps}};
}

inline void merge_train_config(TrainConfig& c, const nlohmann::json& j) {
  try {
    if (j.contains("margin")) c.margin = j.at("margin").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("patience")) c.patience = j.at("patience").get<int>();
    if (j.contains("min_delta")) c.min_delta = j.at("min_delta").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lr")) c.adam.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) c.adam.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("beta1")) c.adam.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) c.adam.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) c.adam.eps = j.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

// ---- evaluation -----------------------------------------------------------------

struct EvalReport : RankingReport {
  std::size_t pairs = 0;
  double median_pair_latency_us = 0.0;
};

// Scores every corpus graph for each query (frozen parameters, corpus-parallel),
// ranks ascending by distance and computes AP / MAP.
inline EvalReport evaluate_map(const ParameterStore& params, const ModelConfig& cfg, const RetrievalDataset& ds,
                               const std::vector<int>& query_ids, unsigned threads = 0) {
  if (threads == 0) threads = thread_count();
  const std::size_t nc = ds.corpus.size();
  std::vector<std::vector<double>> dist(query_ids.size(), std::vector<double>(nc));
  std::vector<double> latency(query_ids.size() * nc);
  parallel_for(
      query_ids.size() * nc,
      [&](std::size_t k) {
        const std::size_t i = k / nc, c = k % nc;
        const auto t0 = std::chrono::steady_clock::now();
        dist[i][c] = score_pair_value(cfg, params, ds.queries[query_ids[i]], ds.corpus[c]);
        latency[k] = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
      },
      threads);
  EvalReport report;
  static_cast<RankingReport&>(report) = rank_queries(query_ids, dist, ds.relevance);
  report.pairs = latency.size();
  if (!latency.empty()) {
    std::nth_element(latency.begin(), latency.begin() + latency.size() / 2, latency.end());
    report.median_pair_latency_us = latency[latency.size() / 2];
  }
  return report;
}

// ---- training ---------------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean over batches of the summed triple loss
  std::optional<double> val_map;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::optional<double> best_val_map;
  bool early_stopped = false;
};

struct TrainResult {
  ParameterStore params;
  History history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

struct TriplePool {
  std::vector<std::pair<int, int>> positives;  // (query, relevant corpus)
  std::vector<std::vector<int>> negatives;     // per query id
};

inline TriplePool build_triple_pool(const RetrievalDataset& ds) {
  TriplePool pool;
  pool.negatives.resize(ds.queries.size());
  for (int q : ds.splits.train) {
    std::vector<int> pos;
    for (int c = 0; c < static_cast<int>(ds.corpus.size()); ++c) {
      if (ds.relevance[q][c])
        pos.push_back(c);
      else
        pool.negatives[q].push_back(c);
    }
    if (pos.empty() || pool.negatives[q].empty()) continue;
    for (int c : pos) pool.positives.emplace_back(q, c);
  }
  if (pool.positives.empty()) {
    throw DatasetError("no valid training triple: no train query has both a relevant and an irrelevant corpus graph");
  }
  return pool;
}

struct Triple {
  int query, pos, neg;
  std::uint64_t noise_seed;
};

struct TripleOutcome {
  double loss = 0.0;
  GradientMap grads;  // empty when the margin is already satisfied
};

inline TripleOutcome run_triple(const ModelConfig& cfg, const ParameterStore& params, const RetrievalDataset& ds,
                                const Triple& t, double margin) {
  Tape tape(&params);
  std::mt19937_64 noise(t.noise_seed);
  EncodeOptions opt;
  if (cfg.gumbel_scale > 0.0) opt.noise_rng = &noise;
  const Tensor d_pos = score_pair(cfg, pad_pair(ds.queries[t.query], ds.corpus[t.pos]), tape, opt);
  const Tensor d_neg = score_pair(cfg, pad_pair(ds.queries[t.query], ds.corpus[t.neg]), tape, opt);
  const Tensor loss = ranking_loss(d_pos, d_neg, margin);
  TripleOutcome out;
  out.loss = loss.scalar();
  if (out.loss > 0.0) out.grads = tape.backward(loss);
  return out;
}

}  // namespace detail

// Margin ranking-loss training with Adam and early stopping on validation MAP.
// Triples are drawn by picking a (query, relevant corpus) pair uniformly from
// the train split, then an irrelevant corpus graph uniformly for that query.
// An epoch is ceil(#train positive pairs / batch_size) batches. Returns the
// parameters of the best validation epoch (the last epoch when there is no
// usable validation split).
inline TrainResult train(const ModelConfig& cfg, const RetrievalDataset& ds, const TrainConfig& tc,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  tc.validate();
  const detail::TriplePool pool = detail::build_triple_pool(ds);
  const unsigned workers = tc.workers();
  ParameterStore params = init_parameters(cfg, tc.seed);
  std::mt19937_64 rng(tc.seed ^ 0x5DEECE66DULL);
  const std::size_t batches = (pool.positives.size() + tc.batch_size - 1) / tc.batch_size;

  TrainResult result;
  result.params = params;
  double best = -1.0;
  int stale = 0;
  std::vector<detail::TripleOutcome> outcomes(tc.batch_size);
  std::vector<detail::Triple> triples(tc.batch_size);

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    double loss_total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      for (auto& t : triples) {
        const auto& [q, pos] = pool.positives[std::uniform_int_distribution<std::size_t>(0, pool.positives.size() - 1)(rng)];
        const auto& negs = pool.negatives[q];
        t = {q, pos, negs[std::uniform_int_distribution<std::size_t>(0, negs.size() - 1)(rng)], rng()};
      }
      parallel_for(
          triples.size(), [&](std::size_t i) { outcomes[i] = detail::run_triple(cfg, params, ds, triples[i], tc.margin); },
          workers);
      GradientMap grads;
      for (const auto& name : params.names()) {
        const Matrix& w = params.get(name);
        grads[name] = Matrix(w.rows(), w.cols());
      }
      double batch_loss = 0.0;
      for (const auto& o : outcomes) {
        batch_loss += o.loss;
        for (const auto& [name, g] : o.grads) grads[name] += g;
      }
      adam_step(params, grads, tc.adam);
      loss_total += batch_loss;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_total / static_cast<double>(batches);
    if (!ds.splits.val.empty()) {
      const EvalReport val = evaluate_map(params, cfg, ds, ds.splits.val, workers);
      if (val.defined()) rec.val_map = val.map;
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_map) {
      if (*rec.val_map > best + tc.min_delta || !result.history.best_val_map) {
        best = *rec.val_map;
        stale = 0;
        result.params = params;
        result.history.best_epoch = epoch;
        result.history.best_val_map = best;
      } else if (++stale >= tc.patience) {
        result.history.early_stopped = true;
        break;
      }
    } else {
      result.params = params;
      result.history.best_epoch = epoch;
    }
  }
  return result;
}

// Trains each candidate seed for `probe_epochs`, keeps the seed with the best
// validation MAP, then trains that seed to completion.
inline TrainResult train_with_seed_selection(const ModelConfig& cfg, const RetrievalDataset& ds, const TrainConfig& tc,
                                             const std::vector<std::uint64_t>& seeds, int probe_epochs,
                                             std::uint64_t* chosen_seed = nullptr, const EpochCallback& on_epoch = {}) {
  if (seeds.empty()) throw ConfigError("seed selection needs at least one seed");
  std::uint64_t best_seed = seeds.front();
  double best_map = -1.0;
  for (std::uint64_t s : seeds) {
    TrainConfig probe = tc;
    probe.seed = s;
    probe.max_epochs = probe_epochs;
    probe.patience = probe_epochs + 1;
    const TrainResult r = train(cfg, ds, probe);
    const double m = r.history.best_val_map.value_or(-1.0);
    if (m > best_map) {
      best_map = m;
      best_seed = s;
    }
  }
  if (chosen_seed) *chosen_seed = best_seed;
  TrainConfig full = tc;
  full.seed = best_seed;
  return train(cfg, ds, full, on_epoch);
}

inline nlohmann::json history_to_json(const History& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs) {
    nlohmann::json je{{"epoch", e.epoch}, {"train_loss", e.train_loss}};
    je["val_map"] = e.val_map ? nlohmann::json(*e.val_map) : nlohmann::json(nullptr);
    epochs.push_back(je);
  }
  nlohmann::json j{{"epochs", epochs}, {"best_epoch", h.best_epoch}, {"early_stopped", h.early_stopped}};
  j["best_val_map"] = h.best_val_map ? nlohmann::json(*h.best_val_map) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json report_to_json(const RankingReport& r) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : r.queries) per_query.push_back({{"query", q.query}, {"ap", q.ap}, {"ranking", q.ranking}});
  return nlohmann::json{{"map", r.map}, {"per_query", per_query}, {"skipped", r.skipped}};
}

}  // namespace matchlab
