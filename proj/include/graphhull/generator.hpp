#ifndef GRAPHHULL_GENERATOR_HPP
#define GRAPHHULL_GENERATOR_HPP

#include "graphhull/common.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/parameterization.hpp"

#include <vector>

namespace graphhull {

struct GenerativeDraw {
  ModelState state;
  Vector pi;
  Graph graph;
  std::uint64_t seed = 0;
};

inline double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng), y = gb(rng);
  if (!(x + y > 0)) return 0.5;
  // Keep strictly inside (0, 1).
  return std::clamp(x / (x + y), 1e-300, 1.0 - 1e-16);
}

/// Orthonormal factor with the same sign convention as the fitted chart.
inline Matrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols, const char* name) {
  for (;;) {
    try {
      return orthonormalize(standard_normal(rng, rows, cols), name).Q;
    } catch (const Error&) {
      // Rank-deficient Gaussian draw: probability zero, redraw.
    }
  }
}

/// Forward draw of a full model state: boxed-SVD archetypes, anchor-dominant
/// local hulls, community proportions and assignments, barycentric weights,
/// degree biases and the global scale.
inline std::pair<ModelState, Vector> sample_state(const Hyperparams& hp, int n_nodes, std::uint64_t seed) {
  hp.validate();
  if (n_nodes < 0) throw Error("sample_state: negative node count");
  const int K = hp.K;
  ModelState st;

  Rng arch = make_rng(seed, "generator.archetypes");
  const Matrix U = random_orthonormal(arch, K, K, "U");
  const Matrix V = random_orthonormal(arch, hp.D, K, "V");
  std::uniform_real_distribution<double> box(hp.sigma_min, hp.sigma_max);
  st.sigma.resize(K);
  for (int k = 0; k < K; ++k) st.sigma[k] = box(arch);
  st.A = U * st.sigma.asDiagonal() * V.transpose();

  Rng hull_rng = make_rng(seed, "generator.hulls");
  st.t.resize(K, K - 1);
  for (int k = 0; k < K; ++k) {
    Matrix W = Matrix::Zero(K, K);
    Matrix q(K - 1, K - 1);
    for (int r = 0; r < K - 1; ++r) {
      const double t = sample_beta(hull_rng, hp.beta_a, hp.beta_b);
      st.t(k, r) = t;
      q.row(r) = sample_dirichlet(hull_rng, Vector::Constant(K - 1, hp.alpha_q)).transpose();
      const double shrink = hp.epsilon * t;
      W(r, k) = 1.0 - shrink;
      for (int j = 0; j < K - 1; ++j) W(r, non_anchor_coord(k, j)) = shrink * q(r, j);
    }
    W(K - 1, k) = 1.0;
    st.B.push_back(W * st.A);
    st.W_tilde.push_back(std::move(W));
    st.q.push_back(std::move(q));
  }

  Rng node_rng = make_rng(seed, "generator.nodes");
  Vector pi = sample_dirichlet(node_rng, Vector::Constant(K, hp.alpha_pi));
  std::discrete_distribution<int> cat(pi.data(), pi.data() + K);
  st.assignments.resize(static_cast<std::size_t>(n_nodes));
  st.Omega.resize(n_nodes, K);
  for (int i = 0; i < n_nodes; ++i) {
    st.assignments[i] = cat(node_rng);
    st.Omega.row(i) = sample_dirichlet(node_rng, Vector::Constant(K, hp.alpha_omega)).transpose();
  }
  st.M_soft = one_hot(st.assignments, K);

  Rng bias_rng = make_rng(seed, "generator.bias");
  std::normal_distribution<double> normal;
  st.g.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) st.g[i] = hp.tau_g * normal(bias_rng);
  st.s = std::abs(hp.tau_s * normal(bias_rng));

  st.Z = node_embeddings(st.M_soft, st.Omega, st.B);
  return {std::move(st), std::move(pi)};
}

/// Independent Bernoulli(logistic(eta_ij)) draw for every pair i < j. Each pair
/// uses its own counter-based uniform, so the result depends only on the seed.
inline Graph sample_graph(const ModelState& st, std::uint64_t seed) {
  const int N = st.n_nodes();
  const std::uint64_t base = stream_seed(seed, "generator.edges");
  std::vector<Edge> edges;
  std::uint64_t counter = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j, ++counter) {
      const double eta = st.s * st.Z.row(i).dot(st.Z.row(j)) + (st.g[i] + st.g[j]);
      if (unit_open(mix64(base + counter)) < logistic(eta)) edges.emplace_back(i, j);
    }
  return Graph(N, std::move(edges));
}

inline GenerativeDraw sample_model(const Hyperparams& hp, int n_nodes, std::uint64_t seed) {
  GenerativeDraw out;
  auto [st, pi] = sample_state(hp, n_nodes, seed);
  out.graph = sample_graph(st, stream_seed(seed, "generator.graph"));
  out.state = std::move(st);
  out.pi = std::move(pi);
  out.seed = seed;
  return out;
}

}  // namespace graphhull

#endif  // GRAPHHULL_GENERATOR_HPP
