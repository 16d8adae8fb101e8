#ifndef GRAPHHULL_TESTS_SUPPORT_HPP
#define GRAPHHULL_TESTS_SUPPORT_HPP

#include "graphhull/gradient.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/parameterization.hpp"

#include <random>

#include <Eigen/Eigenvalues>

namespace graphhull::testing {

inline Matrix gaussian(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  return scale * standard_normal(rng, r, c);
}

/// Every block filled with Gaussian noise; orthonormal blocks get an identity
/// offset so they stay comfortably full rank.
inline ModelParams random_params(int n, const Hyperparams& hp, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  ModelParams p = ModelParams::zeros(n, hp.K, hp.D);
  p.U_raw += gaussian(rng, hp.K, hp.K, 0.3);
  p.V_raw += gaussian(rng, hp.D, hp.K, 0.3);
  p.sigma_raw = gaussian(rng, hp.K, 1, scale);
  p.t_raw = gaussian(rng, hp.K, hp.K - 1, scale);
  for (auto& q : p.q_raw) q = gaussian(rng, hp.K - 1, hp.K - 1, scale);
  p.omega_raw = gaussian(rng, n, hp.K, scale);
  p.m_logits = gaussian(rng, n, hp.K, scale);
  p.g = gaussian(rng, n, 1, scale);
  p.s_raw = scale * standard_normal(rng, 1, 1)(0, 0);
  return p;
}

/// Random spanning tree plus Erdos-Renyi extras; always connected.
inline Graph random_connected(int n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(static_cast<int>(rng() % static_cast<std::uint64_t>(i)), i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform_open(rng) < p) edges.emplace_back(i, j);
  return Graph(n, edges);
}

/// Cliques of the given size, consecutive cliques joined by one bridge edge
/// plus `noise` random inter-clique edges.
inline Graph planted_cliques(int cliques, int size, int noise, std::uint64_t seed, std::vector<int>* truth = nullptr) {
  const int n = cliques * size;
  std::vector<Edge> edges;
  for (int c = 0; c < cliques; ++c) {
    for (int a = 0; a < size; ++a)
      for (int b = a + 1; b < size; ++b) edges.emplace_back(c * size + a, c * size + b);
    if (c + 1 < cliques) edges.emplace_back(c * size, (c + 1) * size);
  }
  Rng rng(seed);
  for (int added = 0; added < noise;) {
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    if (i / size == j / size) continue;
    edges.emplace_back(std::min(i, j), std::max(i, j));
    ++added;
  }
  if (truth) {
    truth->resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) (*truth)[static_cast<std::size_t>(i)] = i / size;
  }
  return Graph(n, edges);
}


/// Gradient of the negative edge log-likelihood with respect to Omega (N x K),
/// holding hard assignments, B, g and s fixed. Written out independently of
/// the library's adjoints.
inline Matrix omega_nll_gradient(const Graph& g, const Matrix& Omega, const std::vector<int>& c,
                                 const std::vector<Matrix>& B, const Vector& bias, double s) {
  const int N = g.n_nodes();
  Matrix Z(N, B.front().cols());
  for (int i = 0; i < N; ++i) Z.row(i) = Omega.row(i) * B[static_cast<std::size_t>(c[i])];
  Matrix dZ = Matrix::Zero(N, Z.cols());
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double eta = s * Z.row(i).dot(Z.row(j)) + bias[i] + bias[j];
      const double r = 1.0 / (1.0 + std::exp(-eta)) - (g.has_edge(i, j) ? 1.0 : 0.0);
      dZ.row(i) += r * s * Z.row(j);
      dZ.row(j) += r * s * Z.row(i);
    }
  Matrix out(N, Omega.cols());
  for (int i = 0; i < N; ++i) out.row(i) = dZ.row(i) * B[static_cast<std::size_t>(c[i])].transpose();
  return out;
}

/// Spectral norm of the Omega-block Hessian of the negative log-likelihood,
/// estimated by central differences of omega_nll_gradient.
inline double omega_hessian_norm(const Graph& g, const Matrix& Omega, const std::vector<int>& c,
                                 const std::vector<Matrix>& B, const Vector& bias, double s, double h = 1e-5) {
  const auto n = Omega.size();
  Matrix H(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Matrix plus = Omega, minus = Omega;
    plus.data()[col] += h;
    minus.data()[col] -= h;
    const Matrix diff = (omega_nll_gradient(g, plus, c, B, bias, s) - omega_nll_gradient(g, minus, c, B, bias, s)) / (2 * h);
    H.col(col) = Eigen::Map<const Vector>(diff.data(), n);
  }
  const Matrix sym = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

struct BlockError {
  std::string block;
  double max_relative_error = 0;
};

/// Central-difference check of gradient() against map_objective(), every
/// coordinate of every block. Relative error uses a unit floor in the denominator.
inline std::vector<BlockError> finite_difference_check(const Graph& g, const ModelParams& p, const Hyperparams& hp,
                                                       const ObjectiveConfig& cfg, double step = 1e-5) {
  const Vector analytic = gradient(g, p, hp, cfg).grad.flatten();
  const Vector base = p.flatten();
  std::vector<BlockError> out;
  for (const auto& b : p.blocks()) {
    BlockError e{b.name, 0.0};
    for (std::size_t o = b.offset; o < b.offset + b.size; ++o) {
      const auto idx = static_cast<Eigen::Index>(o);
      ModelParams plus = p, minus = p;
      Vector f = base;
      f[idx] += step;
      plus.assign(f);
      f[idx] = base[idx] - step;
      minus.assign(f);
      const double fd = (map_objective(g, plus, hp, cfg).total - map_objective(g, minus, hp, cfg).total) / (2 * step);
      const double denom = std::max({std::abs(fd), std::abs(analytic[idx]), 1.0});
      e.max_relative_error = std::max(e.max_relative_error, std::abs(fd - analytic[idx]) / denom);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace graphhull::testing

#endif  // GRAPHHULL_TESTS_SUPPORT_HPP
