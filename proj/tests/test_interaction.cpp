#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "matchlab/interaction.hpp"
#include "matchlab/oracles.hpp"
#include "test_support.hpp"

using namespace matchlab;

namespace {

Matrix apply(const Tensor& t) { return t.value(); }

using mt::entropic_ot;
using mt::max_col_sum_err;
using mt::max_row_sum_err;

}  // namespace

TEST(Similarity, HingeIdentityIsZero) {
  std::mt19937_64 rng(1);
  Tape t;
  const Tensor h = t.constant(mt::random_matrix(4, 3, rng));
  const Matrix s = apply(similarity(Nonlinearity::hinge, h, h));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s(i, i), 0.0);
}

TEST(Similarity, HingeHandValue) {
  Tape t;
  const Matrix s = apply(similarity(Nonlinearity::hinge, t.constant(Matrix{{1, 2}}), t.constant(Matrix{{2, 1}})));
  EXPECT_DOUBLE_EQ(s(0, 0), -1.0);
}

TEST(Similarity, DotIdentity) {
  Tape t;
  const Tensor i2 = t.constant(Matrix::identity(2));
  EXPECT_EQ(apply(similarity(Nonlinearity::dot, i2, i2)), Matrix::identity(2));
}

TEST(Similarity, HingeNeverPositiveAndZeroIffDominated) {
  std::mt19937_64 rng(2);
  Tape t;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = mt::random_matrix(3, 4, rng), b = mt::random_matrix(3, 4, rng);
    const Matrix s = apply(similarity(Nonlinearity::hinge, t.constant(a), t.constant(b)));
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v) {
        bool dominated = true;
        for (std::size_t i = 0; i < 4; ++i) dominated = dominated && a(u, i) <= b(v, i);
        EXPECT_LE(s(u, v), 0.0);
        EXPECT_EQ(s(u, v) == 0.0, dominated);
      }
  }
  // a dominated case on purpose
  const Matrix s = apply(similarity(Nonlinearity::hinge, t.constant(Matrix{{0, 1}}), t.constant(Matrix{{0.5, 1}})));
  EXPECT_EQ(s(0, 0), 0.0);
}

TEST(Similarity, NeuralIsLrlBilinear) {
  std::mt19937_64 rng(3);
  ParameterStore p;
  p.add("align.lrl.w1", mt::random_matrix(4, 4, rng));
  p.add("align.lrl.b1", mt::random_matrix(1, 4, rng));
  p.add("align.lrl.w2", mt::random_matrix(4, 16, rng));
  p.add("align.lrl.b2", mt::random_matrix(1, 16, rng));
  const Matrix xq = mt::random_matrix(3, 4, rng), xc = mt::random_matrix(3, 4, rng);
  Tape t(&p);
  const Matrix s = apply(similarity(Nonlinearity::neural, t.constant(xq), t.constant(xc)));
  auto lrl = [&](const Matrix& x) {
    Matrix h(x.rows(), 4), o(x.rows(), 16);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t j = 0; j < 4; ++j) {
        double a = p.get("align.lrl.b1")(0, j);
        for (std::size_t i = 0; i < 4; ++i) a += x(r, i) * p.get("align.lrl.w1")(i, j);
        h(r, j) = std::max(0.0, a);
      }
      for (std::size_t j = 0; j < 16; ++j) {
        double a = p.get("align.lrl.b2")(0, j);
        for (std::size_t i = 0; i < 4; ++i) a += h(r, i) * p.get("align.lrl.w2")(i, j);
        o(r, j) = a;
      }
    }
    return o;
  };
  const Matrix lq = lrl(xq), lc = lrl(xc);
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 3; ++v) {
      double d = 0.0;
      for (std::size_t j = 0; j < 16; ++j) d += lq(u, j) * lc(v, j);
      EXPECT_NEAR(s(u, v), d, 1e-12);
    }
}

TEST(Similarity, WidthMismatch) {
  Tape t;
  EXPECT_THROW(similarity(Nonlinearity::dot, t.constant(Matrix(2, 3)), t.constant(Matrix(2, 4))), DimensionError);
}

TEST(Attention, AllEqualIsUniform) {
  Tape t;
  const Alignment a = attention_align(t.constant(Matrix(4, 4, 0.7)), 0.1);
  for (double x : a.qc.value().values()) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Attention, TwoColumnRow) {
  Tape t;
  const Matrix qc = attention_align(t.constant(Matrix{{1, 0}, {0, 0}}), 1.0).qc.value();
  EXPECT_NEAR(qc(0, 0), 0.7311, 1e-4);
  EXPECT_NEAR(qc(0, 1), 0.2689, 1e-4);
  EXPECT_NEAR(qc(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Attention, RowsSumToOneAndCqIsColumnSoftmax) {
  std::mt19937_64 rng(4);
  Tape t;
  const Matrix s = mt::random_matrix(5, 5, rng, -3, 3);
  const Alignment a = attention_align(t.constant(s), 0.5);
  EXPECT_LT(max_row_sum_err(a.qc.value()), 1e-6);
  EXPECT_LT(max_row_sum_err(a.cq.value()), 1e-6);
  for (std::size_t v = 0; v < 5; ++v) {
    double z = 0.0;
    for (std::size_t u = 0; u < 5; ++u) z += std::exp(s(u, v) / 0.5);
    for (std::size_t u = 0; u < 5; ++u) EXPECT_NEAR(a.cq.value()(v, u), std::exp(s(u, v) / 0.5) / z, 1e-12);
  }
  for (double x : a.qc.value().values()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Attention, LowTemperatureApproachesArgmax) {
  std::mt19937_64 rng(5);
  Tape t;
  Matrix s = mt::random_matrix(6, 6, rng, -0.5, 0.5);
  for (std::size_t i = 0; i < 6; ++i) s(i, i) = 1.0;
  const Matrix qc = attention_align(t.constant(s), 0.01).qc.value();
  EXPECT_LT(max_abs_diff(qc, Matrix::identity(6)), 1e-3);
}

TEST(Attention, BadTemperature) {
  Tape t;
  EXPECT_THROW(attention_align(t.constant(Matrix(2, 2)), 0.0), ConfigError);
  EXPECT_THROW(attention_align(t.constant(Matrix(2, 2)), -1.0), ConfigError);
}

TEST(Sinkhorn, ZeroSimilarityIsUniform) {
  Tape t;
  for (double tau : {0.05, 1.0})
    for (int steps : {1, 7}) {
      const Matrix z = sinkhorn_align(t.constant(Matrix(5, 5)), tau, steps).qc.value();
      for (double x : z.values()) EXPECT_NEAR(x, 0.2, 1e-15);
    }
}

TEST(Sinkhorn, TwoByTwoHingeStyleIsIdentity) {
  Tape t;
  const Matrix z = sinkhorn_align(t.constant(Matrix{{0, -10}, {-10, 0}}), 0.5, 20).qc.value();
  // trace cost of identity (0) beats the swap (-20): brute force over both permutations
  EXPECT_LT(max_abs_diff(z, Matrix::identity(2)), 1e-3);
}

// Entries uniform in [-0.25, 0.25], i.e. a logit spread of at most 5 at
// tau = 0.1. Wider spreads converge much more slowly (next test).
TEST(Sinkhorn, DoublyStochasticAfterTwentySteps) {
  std::mt19937_64 rng(6);
  Tape t;
  for (int trial = 0; trial < 50; ++trial) {
    const Alignment a = sinkhorn_align(t.constant(mt::random_matrix(8, 8, rng, -0.25, 0.25)), 0.1, 20);
    EXPECT_LT(max_row_sum_err(a.qc.value()), 1e-4);
    EXPECT_LT(max_col_sum_err(a.qc.value()), 1e-4);
    EXPECT_EQ(a.cq.value(), a.qc.value().transposed());
    for (double x : a.qc.value().values()) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

// Spread 20 at tau = 0.1: twenty rounds are not enough, but the column error
// keeps shrinking and closes given enough rounds.
TEST(Sinkhorn, WideSpreadNeedsMoreRounds) {
  std::mt19937_64 rng(6);
  Tape t;
  double worst20 = 0.0, worst2000 = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor s = t.constant(mt::random_matrix(8, 8, rng));
    worst20 = std::max(worst20, max_col_sum_err(sinkhorn_align(s, 0.1, 20).qc.value()));
    worst2000 = std::max(worst2000, max_col_sum_err(sinkhorn_align(s, 0.1, 2000).qc.value()));
  }
  EXPECT_GT(worst20, 1e-4);
  EXPECT_LT(worst2000, 1e-4);
}

TEST(Sinkhorn, DominantDiagonalIsIdentity) {
  std::mt19937_64 rng(7);
  Tape t;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix s = mt::random_matrix(8, 8, rng, -1.0, 0.0);
    for (std::size_t i = 0; i < 8; ++i) s(i, i) = 1.0;
    EXPECT_LT(max_abs_diff(sinkhorn_align(t.constant(s), 0.1, 20).qc.value(), Matrix::identity(8)), 1e-3);
  }
}

TEST(Sinkhorn, SuccessiveChangeDecreases) {
  std::mt19937_64 rng(8);
  Tape t;
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor s = t.constant(mt::random_matrix(8, 8, rng, -0.25, 0.25));
    Matrix prev = sinkhorn_align(s, 0.1, 1).qc.value();
    double prev_change = std::numeric_limits<double>::infinity();
    for (int steps = 2; steps <= 25; ++steps) {
      const Matrix cur = sinkhorn_align(s, 0.1, steps).qc.value();
      const double change = max_abs_diff(cur, prev);
      if (change < 1e-13) break;  // converged to rounding level
      ASSERT_LE(change, prev_change) << "trial " << trial << " T=" << steps;
      prev_change = change;
      prev = cur;
    }
  }
}

TEST(Sinkhorn, BadArguments) {
  Tape t;
  EXPECT_THROW(sinkhorn_align(t.constant(Matrix(2, 2)), 0.0, 5), ConfigError);
  EXPECT_THROW(sinkhorn_align(t.constant(Matrix(2, 2)), 0.1, 0), ConfigError);
  EXPECT_THROW(sinkhorn_align(t.constant(Matrix(2, 3)), 0.1, 5), DimensionError);
}

// With the hinge non-linearity, Sinkhorn on eta equals entropic OT on the
// hinge cost C[u,v] = sum_i [Hq[u,i] - Hc[v,i]]_+ with regularization tau.
TEST(Sinkhorn, HingeSinkhornIsEntropicOtOnHingeCost) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix hq = mt::random_matrix(3, 4, rng, 0, 1), hc = mt::random_matrix(3, 4, rng, 0, 1);
    Tape t;
    const Tensor eta = similarity(Nonlinearity::hinge, t.constant(hq), t.constant(hc));
    const Matrix ours = sinkhorn_align(eta, 0.1, 5000).qc.value();
    const Matrix ref = entropic_ot(hinge_cost(hq, hc), 0.1, 100000, 1e-15);
    EXPECT_LT(max_abs_diff(ours, ref), 1e-5) << "trial " << trial;
  }
}

TEST(Permutation, EquivariantBothStructures) {
  std::mt19937_64 rng(10);
  for (Structure st : {Structure::injective, Structure::non_injective}) {
    ModelConfig cfg;
    cfg.structure = st;
    cfg.nonlinearity = Nonlinearity::hinge;
    const Matrix hq = mt::random_matrix(5, 3, rng), hc = mt::random_matrix(5, 3, rng);
    const auto perm = mt::random_perm(5, rng);
    Matrix hq_p(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) hq_p(i, j) = hq(perm[i], j);
    Tape t;
    const Matrix a = align(cfg, t.constant(hq), t.constant(hc)).qc.value();
    const Matrix b = align(cfg, t.constant(hq_p), t.constant(hc)).qc.value();
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) EXPECT_NEAR(b(i, j), a(perm[i], j), 1e-12);
  }
}

TEST(Gumbel, NoiseChangesSinkhornOnlyWhenEnabled) {
  std::mt19937_64 rng(11), noise(12);
  ModelConfig cfg;
  const Matrix hq = mt::random_matrix(4, 3, rng), hc = mt::random_matrix(4, 3, rng);
  Tape t;
  const Matrix clean = align(cfg, t.constant(hq), t.constant(hc), &noise).qc.value();
  const Matrix again = align(cfg, t.constant(hq), t.constant(hc)).qc.value();
  EXPECT_EQ(clean, again);
  cfg.gumbel_scale = 0.5;
  const Matrix noisy = align(cfg, t.constant(hq), t.constant(hc), &noise).qc.value();
  EXPECT_GT(max_abs_diff(clean, noisy), 1e-6);
  EXPECT_LT(max_row_sum_err(noisy), 1e-9);
}
