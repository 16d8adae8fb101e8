#include "graphhull/parameterization.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace graphhull;
using graphhull::testing::random_params;

namespace {

Hyperparams hyper(int K, int D, double eps = 0.45) {
  Hyperparams hp;
  hp.K = K;
  hp.D = D;
  hp.epsilon = eps;
  return hp;
}

}  // namespace

TEST(Archetypes, ScalarMidpointOfBox) {
  const Hyperparams hp = hyper(1, 1);
  const Matrix A = build_archetypes(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Vector::Zero(1), hp);
  EXPECT_NEAR(A(0, 0), 0.9, 1e-15);
}

TEST(Archetypes, OrthonormalInputIsAFixedPoint) {
  Rng rng(3);
  Eigen::HouseholderQR<Matrix> qr(standard_normal(rng, 5, 3));
  Matrix Q = qr.householderQ() * Matrix::Identity(5, 3);
  const auto f = orthonormalize(Q, "V_raw");
  // Same columns up to sign, and the sign convention makes the result idempotent.
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(std::abs(f.Q.col(j).dot(Q.col(j))), 1.0, 1e-12);
  EXPECT_LT((orthonormalize(f.Q, "V_raw").Q - f.Q).norm(), 1e-12);
  EXPECT_LT((f.Q.transpose() * f.Q - Matrix::Identity(3, 3)).norm(), 1e-12);
  EXPECT_TRUE((f.R.diagonal().array() >= 0).all());
}

TEST(Archetypes, SingularValuesMatchBoxedSigma) {
  const Hyperparams hp = hyper(3, 4);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const Matrix U = standard_normal(rng, 3, 3), V = standard_normal(rng, 4, 3);
    const Vector raw = 2.0 * standard_normal(rng, 3, 1);
    const Matrix A = build_archetypes(U, V, raw, hp);
    Eigen::JacobiSVD<Matrix> svd(A);
    Vector expected = boxed_sigma(raw, hp);
    std::sort(expected.data(), expected.data() + expected.size(), std::greater<>());
    EXPECT_LT((svd.singularValues() - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(svd.singularValues()[0], hp.sigma_max);
    EXPECT_GE(svd.singularValues()[2], hp.sigma_min);
  }
}

TEST(Archetypes, RankDeficientBlockNamesTheBlock) {
  const Hyperparams hp = hyper(2, 3);
  Matrix V(3, 2);
  V << 1, 2, 1, 2, 1, 2;
  try {
    build_archetypes(Matrix::Identity(2, 2), V, Vector::Zero(2), hp);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("V_raw"), std::string::npos);
  }
}

TEST(LocalHulls, CollapseToAnchorWhenShrinkVanishes) {
  const Hyperparams hp = hyper(3, 3);
  const Matrix A = build_archetypes(Matrix::Identity(3, 3), Matrix::Identity(3, 3), Vector::Zero(3), hp);
  const auto hulls = build_local_hulls(A, Matrix::Constant(3, 2, -30.0), std::vector<Matrix>(3, Matrix::Zero(2, 2)), hp);
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 3; ++r) {
      EXPECT_NEAR(hulls.W_tilde[k](r, k), 1.0, 1e-12);
      EXPECT_LT((hulls.B[k].row(r) - A.row(k)).norm(), 1e-12);
    }
}

TEST(LocalHulls, SaturatedRowSplitsMassEvenly) {
  const Hyperparams hp = hyper(3, 3);
  const auto hulls = build_local_hulls(Matrix::Identity(3, 3), Matrix::Constant(3, 2, 30.0),
                                       std::vector<Matrix>(3, Matrix::Zero(2, 2)), hp);
  const Matrix& W = hulls.W_tilde[1];
  EXPECT_NEAR(W(0, 1), 0.55, 1e-12);
  EXPECT_NEAR(W(0, 0), 0.225, 1e-12);
  EXPECT_NEAR(W(0, 2), 0.225, 1e-12);
  EXPECT_EQ(W.row(2), Matrix::Identity(3, 3).row(1));
}

TEST(LocalHulls, RowsAreSimplexAndAnchorDominant) {
  const Hyperparams hp = hyper(4, 4);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ModelParams p = random_params(1, hp, seed, 3.0);
    const ModelState st = assemble_state(p, hp);
    for (int k = 0; k < 4; ++k) {
      const Matrix& W = st.W_tilde[k];
      for (int r = 0; r < 4; ++r) {
        double sum = 0;
        for (int c = 0; c < 4; ++c) {
          EXPECT_GE(W(r, c), 0.0);
          sum += W(r, c);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_GE(W(r, k), 1.0 - hp.epsilon - 1e-15);
      }
      EXPECT_LT((st.B[k] - W * st.A).norm(), 1e-14);
    }
  }
}

TEST(GumbelSoftmax, LowTemperatureConcentratesOnNoisyArgmax) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector logits = standard_normal(rng, 5, 1);
    const Vector noise = gumbel_noise(rng, 5, 1);
    const Vector y = gumbel_softmax(logits, 0.01, noise);
    Eigen::Index arg = 0, ymax = 0;
    Vector perturbed = logits + noise;
    const double top = perturbed.maxCoeff(&arg);
    perturbed[arg] = -INFINITY;
    // Mass above 0.99 needs a top-two gap of at least 0.01 * log(4 / 0.0101).
    if (top - perturbed.maxCoeff() < 0.07) continue;
    EXPECT_GT(y.maxCoeff(&ymax), 0.99);
    EXPECT_EQ(ymax, arg);
  }
}

TEST(GumbelSoftmax, UniformAtZero) {
  const Vector y = gumbel_softmax(Vector::Zero(4), 1.0, Vector::Zero(4));
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(y[k], 0.25, 1e-15);
  EXPECT_THROW(gumbel_softmax(Vector::Zero(4), 0.0, Vector::Zero(4)), Error);
  EXPECT_THROW(gumbel_softmax(Vector::Zero(4), -1.0, Vector::Zero(4)), Error);
}

TEST(GumbelSoftmax, ArgmaxFrequenciesMatchCategorical) {
  Vector logits(4);
  logits << 0.3, -1.0, 1.2, 0.0;
  // Closed-form categorical probabilities.
  Vector prob = logits.array().exp();
  prob /= prob.sum();
  const int draws = 10000;
  Vector counts = Vector::Zero(4);
  Rng rng = make_rng(2024, "test.gumbel");
  for (int n = 0; n < draws; ++n) {
    const Vector y = gumbel_softmax(logits, 1e-3, gumbel_noise(rng, 4, 1));
    Eigen::Index arg = 0;
    y.maxCoeff(&arg);
    counts[arg] += 1;
  }
  for (int k = 0; k < 4; ++k) {
    const double se = std::sqrt(prob[k] * (1 - prob[k]) / draws);
    EXPECT_LT(std::abs(counts[k] / draws - prob[k]), 3 * se) << "coordinate " << k;
  }
}

TEST(NodeEmbeddings, HardAssignmentSelectsVertexOrCentroid) {
  const Hyperparams hp = hyper(3, 4);
  const ModelParams p = random_params(2, hp, 9);
  ModelState st = assemble_state(p, hp);
  Matrix M = one_hot({2, 1}, 3);
  Matrix Omega(2, 3);
  Omega << 0, 1, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  const Matrix Z = node_embeddings(M, Omega, st.B);
  EXPECT_LT((Z.row(0) - st.B[2].row(1)).norm(), 1e-14);
  EXPECT_LT((Z.row(1) - st.B[1].colwise().mean()).norm(), 1e-14);
}

TEST(NodeEmbeddings, SoftMixtureStaysInsideGlobalHull) {
  const Hyperparams hp = hyper(3, 5);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed + 100);
    const ModelParams p = random_params(20, hp, seed, 1.5);
    const ModelState st = assemble_state(p, hp, AssignmentSpec::relaxed(0.7, gumbel_noise(rng, 20, 3)));
    // Barycentric coordinates w.r.t. A by least squares: A^T w = z.
    const Matrix At = st.A.transpose();
    const auto solver = At.colPivHouseholderQr();
    for (int i = 0; i < 20; ++i) {
      const Vector w = solver.solve(Vector(st.Z.row(i).transpose()));
      EXPECT_LT((At * w - st.Z.row(i).transpose()).norm(), 1e-10);
      EXPECT_GE(w.minCoeff(), -1e-8);
      EXPECT_NEAR(w.sum(), 1.0, 1e-8);
    }
  }
}

TEST(Harden, ArgmaxWithSmallestIndexTies) {
  Matrix M(3, 3);
  M << 0.1, 0.7, 0.2, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0;
  EXPECT_EQ(harden(M), (std::vector<int>{1, 0, 2}));
  const std::vector<int> c{2, 0, 1, 1};
  EXPECT_EQ(harden(one_hot(c, 3)), c);
}

TEST(AssembleState, InvariantsHoldForRandomParameters) {
  const Hyperparams hp = hyper(4, 6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const ModelParams p = random_params(15, hp, seed, 2.0);
    for (const auto& spec : {AssignmentSpec::hard(), AssignmentSpec::relaxed(0.5, gumbel_noise(rng, 15, 4))}) {
      const ModelState st = assemble_state(p, hp, spec);
      EXPECT_LT((st.Omega.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
      EXPECT_LT((st.M_soft.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
      EXPECT_GT(st.s, 0.0);
      EXPECT_EQ(harden(st.M_soft), st.assignments);
    }
  }
}

TEST(Hyperparams, ValidationAndIdentifiability) {
  Hyperparams hp = hyper(4, 3);
  try {
    hp.validate();
    FAIL() << "expected K > D to be rejected";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("K <= D"), std::string::npos);
  }
  hp = hyper(3, 3, 0.49);
  EXPECT_TRUE(hp.identifiable());
  hp.epsilon = 0.5;
  EXPECT_FALSE(hp.identifiable());
  hp.sigma_min = 0;
  EXPECT_THROW(hp.validate(), Error);
}

TEST(ModelParams, FlattenAssignRoundTrip) {
  const Hyperparams hp = hyper(3, 4);
  const ModelParams p = random_params(7, hp, 1);
  ModelParams q = ModelParams::zeros(7, 3, 4);
  q.assign(p.flatten());
  EXPECT_EQ(q.flatten(), p.flatten());
  EXPECT_EQ(p.size(), static_cast<std::size_t>(9 + 12 + 3 + 6 + 12 + 21 + 21 + 7 + 1));
}
