#pragma once

// GNN embedding computation for the four stage x granularity combinations.
//
// Node level: h_{k+1}(u) = GRU(h_k(u); x_k(u)) where x_k(u) is the sum of
// symmetrized messages from neighbours, with the cross-graph difference
// h_k(u) - (Omega_k H_other)[u] appended for early interaction.
//
// Edge level, per layer k:
//   Omega_k from (M_q, M_c)                      (early only)
//   H_{k+1} = GRU(H_k; sum of msg(h_u, h_v, m_e) over incident edges)
//   M_{k+1} = join(msg(h'_u, h'_v, m_e), (Omega_k M_other)[e])   (early)
//   M_{k+1} = msg(h'_u, h'_v, m_e)                                (late)
// with m_0(e) = msg(h_0(u), h_0(v), 0).

#include <random>
#include <vector>

#include "autodiff.hpp"
#include "config.hpp"
#include "graph.hpp"
#include "interaction.hpp"

namespace matchlab {

struct EncodeOptions {
  // Replace every message-passing alignment by an all-zero matrix.
  bool zero_alignment = false;
  // Source of Gumbel noise for Sinkhorn when cfg.gumbel_scale > 0.
  std::mt19937_64* noise_rng = nullptr;
};

// Per-layer embeddings of both graphs. For edge granularity, mq/mc hold the
// padded (n_edges x dim_m) edge matrices; rows past the real edge count are 0.
struct EmbeddingState {
  std::vector<Tensor> hq, hc;
  std::vector<Tensor> mq, mc;
  std::vector<Alignment> layer_alignments;  // early stage: one per layer 0..K-1
  int n = 0;
  int n_edges = 0;
  int query_real_nodes = 0, corpus_real_nodes = 0;
  int query_real_edges = 0, corpus_real_edges = 0;

  const Tensor& final_q(Granularity g) const { return g == Granularity::edge ? mq.back() : hq.back(); }
  const Tensor& final_c(Granularity g) const { return g == Granularity::edge ? mc.back() : hc.back(); }
};

namespace detail {

struct SideTopology {
  int nodes = 0;
  std::vector<int> src, dst;  // canonical u < v per real edge
};

inline SideTopology topology(const Graph& g) {
  SideTopology t;
  t.nodes = g.node_count();
  for (auto [u, v] : g.edges()) {
    t.src.push_back(u);
    t.dst.push_back(v);
  }
  return t;
}

inline Tensor initial_embedding(Tape& tape, const Graph& g) {
  const auto& f = g.node_features();
  Matrix feats(f.size(), 1, std::vector<double>(f.begin(), f.end()));
  return linear(tape.constant(std::move(feats)), tape.param("embed.w"), tape.param("embed.b"));
}

// msg applied to (u, v) and (v, u) and summed; `edge_state` is appended to
// both orderings (a constant 1 column for node granularity).
inline Tensor symmetric_message(Tape& tape, const Tensor& h, const SideTopology& t, const Tensor& edge_state) {
  const Tensor hu = gather_rows(h, t.src);
  const Tensor hv = gather_rows(h, t.dst);
  const Tensor w = tape.param("msg.w"), b = tape.param("msg.b");
  const Tensor forward = linear(concat_cols({hu, hv, edge_state}), w, b);
  const Tensor backward = linear(concat_cols({hv, hu, edge_state}), w, b);
  return add(forward, backward);
}

inline Tensor aggregate_to_nodes(const Tensor& edge_messages, const SideTopology& t) {
  return add(scatter_add_rows(edge_messages, t.src, t.nodes), scatter_add_rows(edge_messages, t.dst, t.nodes));
}

// One GRU step with hidden state h and input x (torch.nn.GRUCell gate order r, z, n).
inline Tensor gru_step(Tape& tape, const Tensor& x, const Tensor& h) {
  const std::size_t d = h.cols();
  const Tensor gi = linear(x, tape.param("gru.w_ih"), tape.param("gru.b_ih"));
  const Tensor gh = linear(h, tape.param("gru.w_hh"), tape.param("gru.b_hh"));
  const Tensor r = sigmoid(add(slice_cols(gi, 0, d), slice_cols(gh, 0, d)));
  const Tensor z = sigmoid(add(slice_cols(gi, d, d), slice_cols(gh, d, d)));
  const Tensor n = tanh(add(slice_cols(gi, 2 * d, d), mul(r, slice_cols(gh, 2 * d, d))));
  return add(n, mul(z, sub(h, n)));
}

inline Tensor join(Tape& tape, const Tensor& own, const Tensor& cross) {
  const Tensor hidden = relu(linear(concat_cols({own, cross}), tape.param("join.w1"), tape.param("join.b1")));
  return linear(hidden, tape.param("join.w2"), tape.param("join.b2"));
}

inline std::vector<int> iota_index(int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

inline Alignment zero_alignment(Tape& tape, std::size_t rows, Structure s) {
  const Tensor z = tape.constant(Matrix(rows, rows));
  return Alignment{z, z, s};
}

inline Alignment layer_alignment(const ModelConfig& cfg, const Tensor& xq, const Tensor& xc, const EncodeOptions& opt) {
  if (opt.zero_alignment) return zero_alignment(*xq.tape(), xq.rows(), cfg.structure);
  return align(cfg, xq, xc, opt.noise_rng);
}

inline void encode_node_level(const ModelConfig& cfg, const PaddedPair& pair, Tape& tape, const EncodeOptions& opt,
                              EmbeddingState& st) {
  const SideTopology tq = topology(pair.query), tc = topology(pair.corpus);
  Tensor hq = initial_embedding(tape, pair.query);
  Tensor hc = initial_embedding(tape, pair.corpus);
  st.hq.push_back(hq);
  st.hc.push_back(hc);
  const Tensor unit_q = tape.constant(Matrix(tq.src.size(), 1, 1.0));
  const Tensor unit_c = tape.constant(Matrix(tc.src.size(), 1, 1.0));
  for (int k = 0; k < cfg.layers; ++k) {
    Tensor xq = aggregate_to_nodes(symmetric_message(tape, hq, tq, unit_q), tq);
    Tensor xc = aggregate_to_nodes(symmetric_message(tape, hc, tc, unit_c), tc);
    if (cfg.early()) {
      const Alignment a = layer_alignment(cfg, hq, hc, opt);
      st.layer_alignments.push_back(a);
      xq = concat_cols({xq, sub(hq, matmul(a.qc, hc))});
      xc = concat_cols({xc, sub(hc, matmul(a.cq, hq))});
    }
    hq = gru_step(tape, xq, hq);
    hc = gru_step(tape, xc, hc);
    st.hq.push_back(hq);
    st.hc.push_back(hc);
  }
}

inline void encode_edge_level(const ModelConfig& cfg, const PaddedPair& pair, Tape& tape, const EncodeOptions& opt,
                              EmbeddingState& st) {
  const SideTopology tq = topology(pair.query), tc = topology(pair.corpus);
  const std::size_t slots = static_cast<std::size_t>(st.n_edges);
  Tensor hq = initial_embedding(tape, pair.query);
  Tensor hc = initial_embedding(tape, pair.corpus);
  Tensor mq = symmetric_message(tape, hq, tq, tape.constant(Matrix(tq.src.size(), cfg.dim_m)));
  Tensor mc = symmetric_message(tape, hc, tc, tape.constant(Matrix(tc.src.size(), cfg.dim_m)));
  st.hq.push_back(hq);
  st.hc.push_back(hc);
  st.mq.push_back(pad_rows(mq, slots));
  st.mc.push_back(pad_rows(mc, slots));
  const std::vector<int> real_q = iota_index(static_cast<int>(tq.src.size()));
  const std::vector<int> real_c = iota_index(static_cast<int>(tc.src.size()));
  for (int k = 0; k < cfg.layers; ++k) {
    const Tensor padded_q = st.mq.back(), padded_c = st.mc.back();
    Alignment a;
    if (cfg.early()) {
      a = layer_alignment(cfg, padded_q, padded_c, opt);
      st.layer_alignments.push_back(a);
    }
    const Tensor hq_next = gru_step(tape, aggregate_to_nodes(symmetric_message(tape, hq, tq, mq), tq), hq);
    const Tensor hc_next = gru_step(tape, aggregate_to_nodes(symmetric_message(tape, hc, tc, mc), tc), hc);
    Tensor mq_next = symmetric_message(tape, hq_next, tq, mq);
    Tensor mc_next = symmetric_message(tape, hc_next, tc, mc);
    if (cfg.early()) {
      const Tensor cross_q = gather_rows(matmul(a.qc, padded_c), real_q);
      const Tensor cross_c = gather_rows(matmul(a.cq, padded_q), real_c);
      mq_next = join(tape, mq_next, cross_q);
      mc_next = join(tape, mc_next, cross_c);
    }
    hq = hq_next;
    hc = hc_next;
    mq = mq_next;
    mc = mc_next;
    st.hq.push_back(hq);
    st.hc.push_back(hc);
    st.mq.push_back(pad_rows(mq, slots));
    st.mc.push_back(pad_rows(mc, slots));
  }
}

}  // namespace detail

inline EmbeddingState encode(const ModelConfig& cfg, const PaddedPair& pair, Tape& tape, const EncodeOptions& opt = {}) {
  cfg.validate();
  EmbeddingState st;
  st.n = pair.n;
  st.n_edges = pair.n_edges;
  st.query_real_nodes = pair.query_real_nodes;
  st.corpus_real_nodes = pair.corpus_real_nodes;
  st.query_real_edges = pair.query_real_edges;
  st.corpus_real_edges = pair.corpus_real_edges;
  if (cfg.granularity == Granularity::node)
    detail::encode_node_level(cfg, pair, tape, opt, st);
  else
    detail::encode_edge_level(cfg, pair, tape, opt, st);
  return st;
}

}  // namespace matchlab
