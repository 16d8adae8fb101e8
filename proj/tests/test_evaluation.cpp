#include "graphhull/evaluation.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace graphhull;
using namespace graphhull::testing;

namespace {

// Fraction of correctly ordered (positive, negative) pairs, ties at 1/2.
double brute_force_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0, total = 0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      if (y[a] == 1 && y[b] == 0) {
        total += 1;
        good += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
      }
  return good / total;
}

struct TableScores {
  double nmi, ari;
};

// Dense contingency table with integer counts.
TableScores table_oracle(const std::vector<int>& u, const std::vector<int>& v) {
  const int ru = *std::max_element(u.begin(), u.end()) + 1, rv = *std::max_element(v.begin(), v.end()) + 1;
  std::vector<std::vector<long>> n(ru, std::vector<long>(rv, 0));
  for (std::size_t i = 0; i < u.size(); ++i) ++n[u[i]][v[i]];
  std::vector<long> a(ru, 0), b(rv, 0);
  for (int i = 0; i < ru; ++i)
    for (int j = 0; j < rv; ++j) {
      a[i] += n[i][j];
      b[j] += n[i][j];
    }
  const double N = static_cast<double>(u.size());
  double mi = 0, hu = 0, hv = 0;
  for (int i = 0; i < ru; ++i)
    for (int j = 0; j < rv; ++j)
      if (n[i][j] > 0) mi += n[i][j] / N * std::log(N * n[i][j] / (static_cast<double>(a[i]) * b[j]));
  for (long x : a)
    if (x > 0) hu -= x / N * std::log(x / N);
  for (long x : b)
    if (x > 0) hv -= x / N * std::log(x / N);
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (int i = 0; i < ru; ++i)
    for (int j = 0; j < rv; ++j) sum_ij += c2(static_cast<double>(n[i][j]));
  for (long x : a) sum_a += c2(static_cast<double>(x));
  for (long x : b) sum_b += c2(static_cast<double>(x));
  const double expected = sum_a * sum_b / c2(N);
  return {2 * mi / (hu + hv), (sum_ij - expected) / (0.5 * (sum_a + sum_b) - expected)};
}

}  // namespace

TEST(LinkScores, ZeroLogitIsHalfAndErrorsOutOfRange) {
  ModelState st;
  st.Z = Matrix::Zero(3, 2);
  st.g = Vector::Zero(3);
  st.s = 1;
  EXPECT_EQ(link_scores(st, {{0, 1}}), std::vector<double>{0.5});
  try {
    link_scores(st, {{0, 3}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 3)"), std::string::npos);
  }
}

TEST(LinkScores, MatchesRecomputationAndIsPermutationEquivariant) {
  Hyperparams hp;
  const ModelState st = assemble_state(random_params(10, hp, 2, 1.0), hp);
  std::vector<Edge> pairs;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) pairs.emplace_back(i, j);
  const auto scores = link_scores(st, pairs);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    double dot = 0;
    for (int d = 0; d < st.Z.cols(); ++d) dot += st.Z(i, d) * st.Z(j, d);
    EXPECT_NEAR(scores[p], 1.0 / (1.0 + std::exp(-(st.s * dot + st.g[i] + st.g[j]))), 1e-12);
  }
  auto reversed = pairs;
  std::reverse(reversed.begin(), reversed.end());
  auto back = link_scores(st, reversed);
  std::reverse(back.begin(), back.end());
  EXPECT_EQ(back, scores);
}

TEST(AucRoc, Examples) {
  EXPECT_DOUBLE_EQ(auc_roc({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}), 0.75);
  EXPECT_DOUBLE_EQ(auc_roc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(auc_roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}), 1.0);
  EXPECT_THROW(auc_roc({0.1, 0.2}, {1, 1}), Error);
  EXPECT_THROW(auc_roc({0.1, 0.2}, {1}), Error);
}

TEST(AucRoc, MatchesBruteForce) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 20) / 20.0;  // coarse grid forces ties
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auc_roc(s, y), brute_force_auc(s, y), 1e-12);
  }
}

TEST(AucPr, StepIntegration) {
  EXPECT_DOUBLE_EQ(auc_pr({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}), 1.0);
  // Ranking pos, neg, pos, neg: recall 1/2 at precision 1, recall 1 at precision 2/3.
  EXPECT_NEAR(auc_pr({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}), 0.5 * 1.0 + 0.5 * 2.0 / 3.0, 1e-15);
  // All tied: a single threshold with precision equal to the positive rate.
  EXPECT_NEAR(auc_pr({0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 0}), 0.25, 1e-15);
}

TEST(PartitionMetrics, IdenticalAndConstant) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(nmi(truth, truth), 1.0);
  EXPECT_DOUBLE_EQ(ari(truth, truth), 1.0);
  const std::vector<int> constant(6, 0);
  EXPECT_NEAR(nmi(constant, truth), 0.0, 1e-15);
  EXPECT_NEAR(ari(constant, truth), 0.0, 1e-15);
  EXPECT_THROW(nmi({0, 1}, {0}), Error);
  EXPECT_THROW(ari({0, 1}, {0}), Error);
}

TEST(PartitionMetrics, MatchContingencyTable) {
  const auto ref = table_oracle({0, 0, 1, 1}, {0, 0, 1, 2});
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 0, 1, 2}), ref.nmi, 1e-12);
  EXPECT_NEAR(ari({0, 0, 1, 1}, {0, 0, 1, 2}), ref.ari, 1e-12);
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng() % 60;
    std::vector<int> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = static_cast<int>(rng() % 4);
      v[i] = static_cast<int>(rng() % 3);
    }
    u[0] = 0, u[1] = 1, v[0] = 0, v[1] = 1;
    const auto r = table_oracle(u, v);
    EXPECT_NEAR(nmi(u, v), r.nmi, 1e-12);
    EXPECT_NEAR(ari(u, v), r.ari, 1e-12);
  }
}

TEST(PartitionMetrics, InvariantToRelabeling) {
  const std::vector<int> u{0, 0, 1, 2, 2, 1, 0, 3}, v{1, 1, 0, 0, 2, 2, 1, 0};
  std::vector<int> u2;
  for (int x : u) u2.push_back((x * 3 + 1) % 4 + 10);
  EXPECT_NEAR(nmi(u2, v), nmi(u, v), 1e-14);
  EXPECT_NEAR(ari(u2, v), ari(u, v), 1e-14);
  EXPECT_NEAR(nmi(v, u), nmi(u, v), 1e-14);
}

TEST(ReorderAdjacency, SortsByHullThenPrototype) {
  ModelState st;
  st.assignments = {1, 0, 1, 0, 0};
  st.Omega = Matrix::Zero(5, 2);
  st.Omega.col(0).setOnes();
  st.Omega(2, 0) = 0;
  st.Omega(2, 1) = 1;
  st.Z = Matrix::Zero(5, 2);
  const Graph g(5, {});
  const auto perm = reorder_adjacency(g, st);
  EXPECT_EQ(perm, (std::vector<int>{1, 3, 4, 0, 2}));

  st.assignments.assign(5, 0);
  st.Omega.setZero();
  st.Omega.col(0).setOnes();
  EXPECT_EQ(reorder_adjacency(g, st), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(ReorderAdjacency, IsABijection) {
  Hyperparams hp;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ModelState st = assemble_state(random_params(30, hp, seed, 2.0), hp);
    auto perm = reorder_adjacency(Graph(30, {}), st);
    std::sort(perm.begin(), perm.end());
    for (int i = 0; i < 30; ++i) EXPECT_EQ(perm[i], i);
  }
}

TEST(PcaProject, RotationOfCenteredPlanarPoints) {
  Rng rng(2);
  Matrix P = standard_normal(rng, 20, 2);
  P = P.rowwise() - P.colwise().mean();
  const auto proj = pca_project(P);
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      EXPECT_NEAR((proj.coords.row(a) - proj.coords.row(b)).norm(), (P.row(a) - P.row(b)).norm(), 1e-9);
}

TEST(PcaProject, CollinearPointsHaveOneDirection) {
  Matrix P(5, 3);
  for (int i = 0; i < 5; ++i) P.row(i) << i, 2.0 * i, -1.0 * i;
  EXPECT_NEAR(pca_project(P).explained_variance[1], 0.0, 1e-12);
}

TEST(PcaProject, VarianceMatchesCovarianceSpectrum) {
  Rng rng(9);
  const Matrix P = standard_normal(rng, 50, 8);
  const Matrix C = P.rowwise() - P.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C.transpose() * C / 49.0);
  const auto proj = pca_project(P);
  EXPECT_NEAR(proj.explained_variance[0], eig.eigenvalues()[7], 1e-9);
  EXPECT_NEAR(proj.explained_variance[1], eig.eigenvalues()[6], 1e-9);
  for (int c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    proj.components.col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(proj.components(arg, c), 0.0);
  }
}

TEST(CircularLayout, VerticesOriginAndDisk) {
  Matrix Omega(3, 4);
  Omega << 0, 1, 0, 0, 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1;
  const auto lay = circular_membership_layout(Omega);
  EXPECT_NEAR(lay.positions(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(lay.positions(0, 1), 1.0, 1e-15);
  EXPECT_LT(lay.positions.row(1).norm(), 1e-15);
  Hyperparams hp;
  const ModelState st = assemble_state(random_params(100, hp, 1, 3.0), hp);
  const auto rand = circular_membership_layout(st.Omega, st.assignments);
  for (int i = 0; i < 100; ++i) EXPECT_LE(rand.positions.row(i).norm(), 1.0 + 1e-12);
}
