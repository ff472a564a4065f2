#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "matchlab/distances.hpp"
#include "matchlab/isomorphism.hpp"
#include "matchlab/model.hpp"
#include "matchlab/oracles.hpp"
#include "test_support.hpp"

using namespace matchlab;

namespace {

Matrix permutation_matrix(const std::vector<int>& p) {
  Matrix m(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(i, p[i]) = 1.0;
  return m;
}

Matrix row_vec(std::vector<double> v) {
  Matrix m(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = v[i];
  return m;
}

double brute_force_lap(const Matrix& xq, const Matrix& xc) {
  std::vector<int> p(xq.rows());
  std::iota(p.begin(), p.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (std::size_t u = 0; u < xq.rows(); ++u)
      for (std::size_t i = 0; i < xq.cols(); ++i) s += std::max(0.0, xq(u, i) - xc(p[u], i));
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

ParameterStore readout_store(std::size_t d, std::mt19937_64& rng) {
  ParameterStore s;
  s.add("readout.gate.w", mt::random_matrix(d, 2 * d, rng));
  s.add("readout.gate.b", mt::random_matrix(1, 2 * d, rng));
  s.add("readout.out.w", mt::random_matrix(d, d, rng));
  s.add("readout.out.b", mt::random_matrix(1, d, rng));
  return s;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(SetAlign, IdentityOnEqualSetsIsZero) {
  std::mt19937_64 rng(1);
  const Matrix x = mt::random_matrix(4, 3, rng);
  Tape t;
  EXPECT_EQ(set_align_distance(t.constant(x), t.constant(x), t.constant(Matrix::identity(4))).scalar(), 0.0);
}

TEST(SetAlign, DominatedQueryIsZero) {
  std::mt19937_64 rng(2);
  const Matrix xc = mt::random_matrix(5, 3, rng);
  Matrix xq = xc;
  for (auto& v : xq.values()) v -= std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  Tape t;
  EXPECT_EQ(set_align_distance(t.constant(xq), t.constant(xc), t.constant(Matrix::identity(5))).scalar(), 0.0);
}

TEST(SetAlign, ScalarExample) {
  Tape t;
  EXPECT_DOUBLE_EQ(set_align_distance(t.constant(Matrix{{2}}), t.constant(Matrix{{1}}), t.constant(Matrix{{1}})).scalar(), 1.0);
}

TEST(SetAlign, ShapeErrors) {
  Tape t;
  EXPECT_THROW(set_align_distance(t.constant(Matrix(2, 3)), t.constant(Matrix(3, 3)), t.constant(Matrix(2, 3))),
               DimensionError);
  EXPECT_THROW(set_align_distance(t.constant(Matrix(2, 3)), t.constant(Matrix(2, 3)), t.constant(Matrix(3, 3))),
               DimensionError);
}

TEST(SetAlign, PermutationAlignmentBoundsLap) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    const Matrix xq = mt::random_matrix(n, 3, rng), xc = mt::random_matrix(n, 3, rng);
    const double lap = exact_lap_distance(xq, xc);
    Tape t;
    const double sa =
        set_align_distance(t.constant(xq), t.constant(xc), t.constant(permutation_matrix(mt::random_perm(n, rng)))).scalar();
    EXPECT_GE(sa, lap - 1e-12);
  }
}

TEST(Readout, ZeroInputZeroBiasGivesOutputBias) {
  ParameterStore s;
  s.add("readout.gate.w", Matrix(3, 6));
  s.add("readout.gate.b", Matrix(1, 6));
  s.add("readout.out.w", Matrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  s.add("readout.out.b", row_vec({0.5, -1, 2}));
  Tape t(&s, false);
  EXPECT_EQ(readout(t.constant(Matrix(4, 3))).value(), row_vec({0.5, -1, 2}));
}

TEST(Readout, RowPermutationInvariant) {
  std::mt19937_64 rng(4);
  const ParameterStore s = readout_store(5, rng);
  const Matrix x = mt::random_matrix(6, 5, rng);
  const auto p = mt::random_perm(6, rng);
  Matrix xs(6, 5);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) xs(i, j) = x(p[i], j);
  Tape t(&s, false);
  const Matrix a = readout(t.constant(x)).value(), b = readout(t.constant(xs)).value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Readout, SingleRowHandComposition) {
  std::mt19937_64 rng(5);
  const std::size_t d = 4;
  const ParameterStore s = readout_store(d, rng);
  const Matrix x = mt::random_matrix(1, d, rng);
  const Matrix& gw = s.get("readout.gate.w");
  const Matrix& gb = s.get("readout.gate.b");
  const Matrix& ow = s.get("readout.out.w");
  const Matrix& ob = s.get("readout.out.b");
  std::vector<double> z(2 * d), h(d);
  for (std::size_t j = 0; j < 2 * d; ++j) {
    z[j] = gb(0, j);
    for (std::size_t i = 0; i < d; ++i) z[j] += x(0, i) * gw(i, j);
  }
  for (std::size_t j = 0; j < d; ++j) h[j] = sigm(z[j]) * z[d + j];
  Tape t(&s, false);
  const Matrix g = readout(t.constant(x)).value();
  for (std::size_t j = 0; j < d; ++j) {
    double e = ob(0, j);
    for (std::size_t i = 0; i < d; ++i) e += h[i] * ow(i, j);
    EXPECT_NEAR(g(0, j), e, 1e-12);
  }
}

TEST(AggHinge, Examples) {
  Tape t;
  const Tensor a = t.constant(row_vec({3, 0})), b = t.constant(row_vec({1, 5}));
  EXPECT_DOUBLE_EQ(agg_hinge(a, a).scalar(), 0.0);
  EXPECT_DOUBLE_EQ(agg_hinge(a, b).scalar(), 2.0);
  EXPECT_DOUBLE_EQ(agg_hinge(b, a).scalar(), 5.0);
}

TEST(AggHinge, NonNegativeAndReflexive) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    Tape t;
    const Tensor a = t.constant(mt::random_matrix(1, 7, rng, -5, 5));
    const Tensor b = t.constant(mt::random_matrix(1, 7, rng, -5, 5));
    EXPECT_GE(agg_hinge(a, b).scalar(), 0.0);
    EXPECT_EQ(agg_hinge(a, a).scalar(), 0.0);
  }
}

TEST(AggMlp, ZeroWeightsGiveFinalBias) {
  ParameterStore s;
  s.add("mlp.w1", Matrix(6, 3));
  s.add("mlp.b1", Matrix(1, 3));
  s.add("mlp.w2", Matrix(3, 1));
  s.add("mlp.b2", Matrix{{0.7}});
  std::mt19937_64 rng(7);
  Tape t(&s, false);
  EXPECT_DOUBLE_EQ(agg_mlp(t.constant(mt::random_matrix(1, 3, rng)), t.constant(mt::random_matrix(1, 3, rng))).scalar(), 0.7);
}

TEST(AggMlp, AsymmetricAndFinite) {
  ModelConfig cfg;
  cfg.distance = RelevanceDistance::agg_mlp;
  cfg.granularity = Granularity::node;
  const ParameterStore s = init_parameters(cfg, 99);
  std::mt19937_64 rng(8);
  int differs = 0;
  for (int i = 0; i < 50; ++i) {
    Tape t(&s, false);
    const Tensor a = t.constant(mt::random_matrix(1, 10, rng, -10, 10));
    const Tensor b = t.constant(mt::random_matrix(1, 10, rng, -10, 10));
    const double ab = agg_mlp(a, b).scalar(), ba = agg_mlp(b, a).scalar();
    EXPECT_TRUE(std::isfinite(ab));
    if (std::abs(ab - ba) > 1e-9) ++differs;
  }
  EXPECT_GT(differs, 40);
}

TEST(AggNtn, ZeroWeightsScoreGammaOfBias) {
  const int L = 4;
  const std::size_t d = 3;
  std::mt19937_64 rng(9);
  ParameterStore s;
  for (int l = 0; l < L; ++l) s.add("ntn.w." + std::to_string(l), Matrix(d, d));
  s.add("ntn.v", Matrix(L, 2 * d));
  s.add("ntn.b", mt::random_matrix(1, L, rng));
  s.add("ntn.gamma.w1", mt::random_matrix(L, 8, rng));
  s.add("ntn.gamma.b1", mt::random_matrix(1, 8, rng));
  s.add("ntn.gamma.w2", mt::random_matrix(8, 4, rng));
  s.add("ntn.gamma.b2", mt::random_matrix(1, 4, rng));
  s.add("ntn.gamma.w3", mt::random_matrix(4, 1, rng));
  Tape t(&s, false);
  const double out = agg_ntn(t.constant(mt::random_matrix(1, d, rng)), t.constant(mt::random_matrix(1, d, rng)), L).scalar();
  Tape t2(&s, false);
  EXPECT_DOUBLE_EQ(out, ntn_gamma(t2.param("ntn.b")).scalar());
}

TEST(AggNtn, BilinearSlicesMatchTripleLoop) {
  const int L = 5;
  const std::size_t d = 4;
  std::mt19937_64 rng(10);
  ParameterStore s;
  for (int l = 0; l < L; ++l) s.add("ntn.w." + std::to_string(l), mt::random_matrix(d, d, rng));
  s.add("ntn.v", Matrix(L, 2 * d));
  s.add("ntn.b", Matrix(1, L));
  const Matrix gq = mt::random_matrix(1, d, rng), gc = mt::random_matrix(1, d, rng);
  Tape t(&s, false);
  const Matrix f = ntn_features(t.constant(gq), t.constant(gc), L).value();
  ASSERT_EQ(f.cols(), static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const Matrix& w = s.get("ntn.w." + std::to_string(l));
    double e = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) e += gq(0, i) * w(i, j) * gc(0, j);
    EXPECT_NEAR(f(0, l), e, 1e-12);
  }
}

TEST(AggNtn, ScalarBilinearReplicated) {
  const int L = 3;
  ParameterStore s;
  for (int l = 0; l < L; ++l) s.add("ntn.w." + std::to_string(l), Matrix{{1}});
  s.add("ntn.v", Matrix(L, 2));
  s.add("ntn.b", Matrix(1, L));
  Tape t(&s, false);
  EXPECT_EQ(ntn_features(t.constant(Matrix{{1.5}}), t.constant(Matrix{{-2}}), L).value(), row_vec({-3, -3, -3}));
}

TEST(Qap, Examples) {
  const Graph tri(3, {{0, 1}, {1, 2}, {0, 2}});
  const Graph path(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(exact_qap_distance(tri, tri), 0);
  EXPECT_EQ(exact_qap_distance(Graph(2, {{0, 1}}), tri), 0);
  EXPECT_EQ(exact_qap_distance(tri, path), 2);
  EXPECT_EQ(exact_qap_distance(path, tri), 0);
}

TEST(Qap, SizeGuard) {
  EXPECT_NO_THROW(exact_qap_distance(Graph(3), Graph(9)));
  try {
    exact_qap_distance(Graph(3), Graph(10));
    FAIL();
  } catch (const SizeGuardError& e) {
    EXPECT_NE(std::string(e.what()).find("is_subgraph"), std::string::npos);
  }
}

TEST(Qap, RelabelingInvariant) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 60; ++i) {
    const int nq = std::uniform_int_distribution<int>(2, 5)(rng), nc = std::uniform_int_distribution<int>(2, 6)(rng);
    const Graph q = mt::random_graph(nq, 0.5, rng), c = mt::random_graph(nc, 0.5, rng);
    const int d = exact_qap_distance(q, c);
    EXPECT_EQ(exact_qap_distance(q.relabeled(mt::random_perm(nq, rng)), c.relabeled(mt::random_perm(nc, rng))), d);
  }
}

TEST(Qap, ZeroIffSubgraph) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Graph q = mt::random_graph(std::uniform_int_distribution<int>(2, 5)(rng), 0.5, rng);
    const Graph c = mt::random_graph(std::uniform_int_distribution<int>(2, 7)(rng), 0.5, rng);
    const PaddedPair p = pad_pair(q, c);
    EXPECT_EQ(exact_qap_distance(q, c) == 0, is_subgraph(p.query, p.corpus));
  }
}

TEST(Lap, MatchesFactorialBruteForce) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    const Matrix xq = mt::random_matrix(5, 4, rng), xc = mt::random_matrix(5, 4, rng);
    EXPECT_NEAR(exact_lap_distance(xq, xc), brute_force_lap(xq, xc), 1e-9);
  }
}

TEST(Lap, ShuffledCopyIsZero) {
  std::mt19937_64 rng(15);
  const Matrix xc = mt::random_matrix(7, 3, rng);
  const auto p = mt::random_perm(7, rng);
  Matrix xq(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) xq(i, j) = xc(p[i], j);
  EXPECT_NEAR(exact_lap_distance(xq, xc), 0.0, 1e-15);
}

TEST(Lap, OneByOne) {
  EXPECT_DOUBLE_EQ(exact_lap_distance(Matrix{{2.5}}, Matrix{{1.0}}), 1.5);
  EXPECT_DOUBLE_EQ(exact_lap_distance(Matrix{{1.0}}, Matrix{{2.5}}), 0.0);
  EXPECT_THROW(exact_lap_distance(Matrix(2, 2), Matrix(3, 2)), DimensionError);
}

// Whole model (encoder + interaction + head) against finite differences, for
// every grid configuration at tiny sizes.
TEST(EndToEnd, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(16);
  for (ModelConfig cfg : enumerate_grid()) {
    cfg.layers = 2;
    ParameterStore params = init_parameters(cfg, 2024);
    const Graph q = mt::random_graph(std::uniform_int_distribution<int>(2, 4)(rng), 0.6, rng);
    const Graph c = mt::random_graph(std::uniform_int_distribution<int>(2, 4)(rng), 0.6, rng);
    const PaddedPair pair = pad_pair(q, c);
    Tape tape(&params);
    const GradientMap g = tape.backward(score_pair(cfg, pair, tape));
    auto value = [&] {
      Tape t(&params, false);
      return score_pair(cfg, pair, t).scalar();
    };
    const auto r = mt::finite_difference_check(params, value, g, 10, rng);
    EXPECT_EQ(r.checked, 10) << cfg.axes_label();
    EXPECT_LT(r.worst, 1e-4) << cfg.axes_label() << " " << r.worst_where;
  }
}
