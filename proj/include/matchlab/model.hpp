#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "autodiff.hpp"
#include "config.hpp"
#include "distances.hpp"
#include "encoders.hpp"
#include "graph.hpp"
#include "parameters.hpp"

namespace matchlab {

struct ParameterSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::size_t fan_in;
};

// Every trainable tensor a configuration touches, in a fixed order. Biases
// that cannot change any ranking are omitted: the readout output bias under
// agg_hinge (it cancels in gq - gc) and the last bias of the MLP / NTN
// scorers (a constant shift of every distance).
inline std::vector<ParameterSpec> parameter_specs(const ModelConfig& cfg) {
  cfg.validate();
  using S = std::size_t;
  const S dh = cfg.dim_h, dm = cfg.dim_m, d = cfg.width();
  std::vector<ParameterSpec> p;
  auto lin = [&p](const std::string& prefix, const std::string& w, const std::string& b, S in, S out) {
    p.push_back({prefix + w, in, out, in});
    p.push_back({prefix + b, 1, out, in});
  };
  lin("embed.", "w", "b", 1, dh);
  const S msg_in = cfg.edge_level() ? 2 * dh + dm : 2 * dh + 1;
  lin("msg.", "w", "b", msg_in, dm);
  const S gru_in = (!cfg.edge_level() && cfg.early()) ? dm + dh : dm;
  p.push_back({"gru.w_ih", gru_in, 3 * dh, dh});
  p.push_back({"gru.w_hh", dh, 3 * dh, dh});
  p.push_back({"gru.b_ih", 1, 3 * dh, dh});
  p.push_back({"gru.b_hh", 1, 3 * dh, dh});
  if (cfg.edge_level() && cfg.early()) {
    lin("join.", "w1", "b1", 2 * dm, 2 * dm);
    lin("join.", "w2", "b2", 2 * dm, dm);
  }
  if (cfg.uses_alignment() && cfg.nonlinearity == Nonlinearity::neural) {
    lin("align.lrl.", "w1", "b1", d, d);
    lin("align.lrl.", "w2", "b2", d, static_cast<S>(cfg.lrl_width));
  }
  if (cfg.aggregated()) {
    lin("readout.gate.", "w", "b", d, 2 * d);
    if (cfg.distance == RelevanceDistance::agg_hinge)
      p.push_back({"readout.out.w", d, d, d});
    else
      lin("readout.out.", "w", "b", d, d);
  }
  if (cfg.distance == RelevanceDistance::agg_mlp) {
    lin("mlp.", "w1", "b1", 2 * d, d);
    p.push_back({"mlp.w2", d, 1, d});
  }
  if (cfg.distance == RelevanceDistance::agg_ntn) {
    const S L = cfg.ntn_slices;
    for (S l = 0; l < L; ++l) p.push_back({"ntn.w." + std::to_string(l), d, d, d});
    p.push_back({"ntn.v", L, 2 * d, 2 * d});
    p.push_back({"ntn.b", 1, L, 2 * d});
    lin("ntn.gamma.", "w1", "b1", L, 8);
    lin("ntn.gamma.", "w2", "b2", 8, 4);
    p.push_back({"ntn.gamma.w3", 4, 1, 4});
  }
  return p;
}

inline ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterStore store;
  for (const auto& s : parameter_specs(cfg)) store.add(s.name, uniform_init(s.rows, s.cols, s.fan_in, rng));
  return store;
}

// Distance for one (query, corpus) pair on `tape`. Lower means the corpus
// graph more plausibly contains the query.
inline Tensor score_pair(const ModelConfig& cfg, const PaddedPair& pair, Tape& tape, const EncodeOptions& opt = {}) {
  const EmbeddingState st = encode(cfg, pair, tape, opt);
  return relevance_distance(cfg, st, opt);
}

inline double score_pair_value(const ModelConfig& cfg, const ParameterStore& params, const Graph& query,
                               const Graph& corpus) {
  Tape tape(&params, false);
  return score_pair(cfg, pad_pair(query, corpus), tape).scalar();
}

}  // namespace matchlab
