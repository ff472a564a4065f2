#pragma once

#include <cmath>
#include <random>
#include <string>

#include "autodiff.hpp"
#include "config.hpp"

namespace matchlab {

// Cross-graph alignment pair: qc maps query rows onto corpus rows, cq the
// other way round.
struct Alignment {
  Tensor qc;
  Tensor cq;
  Structure structure = Structure::non_injective;
};

// eta(Xq, Xc)[u, v] for the three interaction non-linearities. The neural
// variant reads "<prefix>.w1/.b1/.w2/.b2" from the tape's parameter store.
inline Tensor similarity(Nonlinearity kind, const Tensor& xq, const Tensor& xc, const std::string& prefix = "align.lrl") {
  if (xq.cols() != xc.cols()) {
    throw DimensionError("similarity: width mismatch " + xq.value().shape_string() + " vs " + xc.value().shape_string());
  }
  switch (kind) {
    case Nonlinearity::dot:
      return matmul(xq, transpose(xc));
    case Nonlinearity::hinge:
      return hinge_cross(xq, xc);
    case Nonlinearity::neural: {
      Tape& tape = *xq.tape();
      const Tensor w1 = tape.param(prefix + ".w1"), b1 = tape.param(prefix + ".b1");
      const Tensor w2 = tape.param(prefix + ".w2"), b2 = tape.param(prefix + ".b2");
      const Tensor lq = linear(relu(linear(xq, w1, b1)), w2, b2);
      const Tensor lc = linear(relu(linear(xc, w1, b1)), w2, b2);
      return matmul(lq, transpose(lc));
    }
  }
  throw ConfigError("similarity: unknown non-linearity");
}

// Row softmax of S/tau for qc; column softmax (returned transposed) for cq.
// Padding rows and columns take part in the normalization.
inline Alignment attention_align(const Tensor& s, double tau) {
  if (!(tau > 0.0)) throw ConfigError("attention_align: tau must be > 0");
  const Tensor logits = scale(s, 1.0 / tau);
  return Alignment{softmax_rows(logits), softmax_rows(transpose(logits)), Structure::non_injective};
}

// Log-domain Sinkhorn: Z0 = exp(S/tau), then `steps` rounds of column
// normalization followed by row normalization. qc = Z_T, cq = Z_T^T.
// `noise`, when given, is added to S before scaling (Gumbel-Sinkhorn).
inline Alignment sinkhorn_align(const Tensor& s, double tau, int steps, const Matrix* noise = nullptr) {
  if (!(tau > 0.0)) throw ConfigError("sinkhorn_align: tau must be > 0");
  if (steps < 1) throw ConfigError("sinkhorn_align: steps must be >= 1");
  if (s.rows() != s.cols()) throw DimensionError("sinkhorn_align: similarity must be square, got " + s.value().shape_string());
  Tensor logits = s;
  if (noise != nullptr) logits = add(logits, s.tape()->constant(*noise));
  Tensor log_z = scale(logits, 1.0 / tau);
  for (int t = 0; t < steps; ++t) {
    log_z = transpose(log_softmax_rows(transpose(log_z)));
    log_z = log_softmax_rows(log_z);
  }
  const Tensor z = exp(log_z);
  return Alignment{z, transpose(z), Structure::injective};
}

inline Matrix gumbel_noise(std::size_t rows, std::size_t cols, double scale_factor, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = -scale_factor * std::log(-std::log(unif(rng)));
  return m;
}

// omega(eta(Xq, Xc)) for the configured structure.
inline Alignment align(const ModelConfig& cfg, const Tensor& xq, const Tensor& xc, std::mt19937_64* noise_rng = nullptr) {
  const Tensor s = similarity(cfg.nonlinearity, xq, xc);
  if (cfg.structure == Structure::non_injective) return attention_align(s, cfg.tau);
  if (noise_rng != nullptr && cfg.gumbel_scale > 0.0) {
    const Matrix noise = gumbel_noise(s.rows(), s.cols(), cfg.gumbel_scale, *noise_rng);
    return sinkhorn_align(s, cfg.tau, cfg.sinkhorn_steps, &noise);
  }
  return sinkhorn_align(s, cfg.tau, cfg.sinkhorn_steps);
}

}  // namespace matchlab
