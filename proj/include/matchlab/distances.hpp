#pragma once

#include <string>
#include <vector>

#include "autodiff.hpp"
#include "config.hpp"
#include "encoders.hpp"
#include "interaction.hpp"

namespace matchlab {

namespace detail {

// x W (+ b when the store holds `bias`). Output biases that the ranking
// objective cannot see are left out of the model's parameter set.
inline Tensor linear_maybe_bias(const Tensor& x, const std::string& weight, const std::string& bias) {
  Tape& tape = *x.tape();
  const Tensor y = matmul(x, tape.param(weight));
  if (tape.store() != nullptr && tape.store()->contains(bias)) return add_row(y, tape.param(bias));
  return y;
}

}  // namespace detail

// || [Xq - Omega_qc Xc]_+ ||_{1,1}
inline Tensor set_align_distance(const Tensor& xq, const Tensor& xc, const Tensor& omega_qc) {
  if (!xq.value().same_shape(xc.value())) {
    throw DimensionError("set_align_distance: shape mismatch " + xq.value().shape_string() + " vs " +
                         xc.value().shape_string());
  }
  if (omega_qc.rows() != xq.rows() || omega_qc.cols() != xc.rows()) {
    throw DimensionError("set_align_distance: alignment " + omega_qc.value().shape_string() +
                         " does not match embeddings " + xq.value().shape_string());
  }
  return sum(relu(sub(xq, matmul(omega_qc, xc))));
}

// Gated sum readout: per row, split x W_gate + b into (a, b); accumulate
// sigmoid(a) * b over rows; finish with a dim x dim linear layer.
inline Tensor readout(const Tensor& x, const std::string& prefix = "readout") {
  Tape& tape = *x.tape();
  const std::size_t d = x.cols();
  const Tensor proj = linear(x, tape.param(prefix + ".gate.w"), tape.param(prefix + ".gate.b"));
  const Tensor gated = mul(sigmoid(slice_cols(proj, 0, d)), slice_cols(proj, d, d));
  return detail::linear_maybe_bias(col_sum(gated), prefix + ".out.w", prefix + ".out.b");
}

// || [gq - gc]_+ ||_1
inline Tensor agg_hinge(const Tensor& gq, const Tensor& gc) { return sum(relu(sub(gq, gc))); }

// MLP(2d, d, 1) on [gq; gc].
inline Tensor agg_mlp(const Tensor& gq, const Tensor& gc, const std::string& prefix = "mlp") {
  Tape& tape = *gq.tape();
  const Tensor hidden = relu(linear(concat_cols({gq, gc}), tape.param(prefix + ".w1"), tape.param(prefix + ".b1")));
  return detail::linear_maybe_bias(hidden, prefix + ".w2", prefix + ".b2");
}

// The NTN bracket: component l is gq W_l gc^T + (V [gq; gc])_l + b_l.
inline Tensor ntn_features(const Tensor& gq, const Tensor& gc, int slices, const std::string& prefix = "ntn") {
  Tape& tape = *gq.tape();
  std::vector<Tensor> bilinear;
  bilinear.reserve(slices);
  for (int l = 0; l < slices; ++l) {
    bilinear.push_back(matmul(matmul(gq, tape.param(prefix + ".w." + std::to_string(l))), transpose(gc)));
  }
  const Tensor lin = matmul(concat_cols({gq, gc}), transpose(tape.param(prefix + ".v")));
  return add(add(concat_cols(bilinear), lin), tape.param(prefix + ".b"));
}

// gamma = MLP(L, 8, 4, 1)
inline Tensor ntn_gamma(const Tensor& features, const std::string& prefix = "ntn.gamma") {
  Tape& tape = *features.tape();
  Tensor h = relu(linear(features, tape.param(prefix + ".w1"), tape.param(prefix + ".b1")));
  h = relu(linear(h, tape.param(prefix + ".w2"), tape.param(prefix + ".b2")));
  return detail::linear_maybe_bias(h, prefix + ".w3", prefix + ".b3");
}

inline Tensor agg_ntn(const Tensor& gq, const Tensor& gc, int slices, const std::string& prefix = "ntn") {
  return ntn_gamma(ntn_features(gq, gc, slices, prefix), prefix + ".gamma");
}

// Relevance distance for an encoded pair. Aggregated heads read out only the
// real (unpadded) rows; set alignment uses the padded sets and a fresh
// alignment computed from the final-layer embeddings.
inline Tensor relevance_distance(const ModelConfig& cfg, const EmbeddingState& st, const EncodeOptions& opt = {}) {
  const Tensor& xq = st.final_q(cfg.granularity);
  const Tensor& xc = st.final_c(cfg.granularity);
  if (cfg.distance == RelevanceDistance::set_align) {
    const Alignment a = align(cfg, xq, xc, opt.noise_rng);
    return set_align_distance(xq, xc, a.qc);
  }
  const bool edge = cfg.edge_level();
  const int real_q = edge ? st.query_real_edges : st.query_real_nodes;
  const int real_c = edge ? st.corpus_real_edges : st.corpus_real_nodes;
  const Tensor gq = readout(gather_rows(xq, detail::iota_index(real_q)));
  const Tensor gc = readout(gather_rows(xc, detail::iota_index(real_c)));
  switch (cfg.distance) {
    case RelevanceDistance::agg_hinge:
      return agg_hinge(gq, gc);
    case RelevanceDistance::agg_mlp:
      return agg_mlp(gq, gc);
    case RelevanceDistance::agg_ntn:
      return agg_ntn(gq, gc, cfg.ntn_slices);
    case RelevanceDistance::set_align:
      break;
  }
  throw ConfigError("relevance_distance: unknown distance");
}

}  // namespace matchlab
