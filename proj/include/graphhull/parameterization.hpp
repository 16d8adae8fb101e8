#ifndef GRAPHHULL_PARAMETERIZATION_HPP
#define GRAPHHULL_PARAMETERIZATION_HPP

#include "graphhull/common.hpp"

#include <string>
#include <vector>

namespace graphhull {

struct Hyperparams {
  int K = 3;  // hull count (global archetypes)
  int D = 3;  // latent dimension
  double epsilon = 0.45;
  double sigma_min = 0.3;
  double sigma_max = 1.5;
  double alpha_omega = 1.0;
  double alpha_q = 1.0;
  double beta_a = 1.0;
  double beta_b = 1.0;
  double tau_g = 2.0;
  double tau_s = 2.0;
  double kappa = 1.0;
  bool use_dpp = true;
  double gs_temp_start = 1.0;
  double gs_temp_end = 0.1;
  double alpha_pi = 1.0;

  /// Anchor-dominant hulls are pairwise disjoint only when epsilon < 1/2.
  bool identifiable() const noexcept { return epsilon < 0.5; }

  void validate() const {
    if (K < 1 || D < 1) throw Error("hyperparams: K and D must be positive");
    if (K > D)
      throw Error("hyperparams: K (" + std::to_string(K) + ") exceeds D (" + std::to_string(D) +
                  "); the K archetypes must be linearly independent rows in R^D, which requires K <= D");
    if (!(epsilon > 0 && epsilon < 1)) throw Error("hyperparams: epsilon must lie in (0, 1)");
    if (!(sigma_min > 0 && sigma_min < sigma_max)) throw Error("hyperparams: need 0 < sigma_min < sigma_max");
    if (!(alpha_omega > 0 && alpha_q > 0 && beta_a > 0 && beta_b > 0 && alpha_pi > 0))
      throw Error("hyperparams: concentration and shape parameters must be positive");
    if (!(tau_g > 0 && tau_s > 0)) throw Error("hyperparams: prior scales must be positive");
    if (!(kappa > 0)) throw Error("hyperparams: kappa must be positive");
    if (!(gs_temp_start > 0 && gs_temp_end > 0)) throw Error("hyperparams: temperatures must be positive");
  }
};

/// Unconstrained carriers for every constrained model quantity.
struct ModelParams {
  Matrix U_raw;                // K x K
  Matrix V_raw;                // D x K
  Vector sigma_raw;            // K
  Matrix t_raw;                // K x (K-1)
  std::vector<Matrix> q_raw;   // K blocks of (K-1) x (K-1): row r, non-anchor coordinate
  Matrix omega_raw;            // N x K
  Matrix m_logits;             // N x K
  Vector g;                    // N
  double s_raw = 0.0;

  static ModelParams zeros(int n_nodes, int K, int D) {
    ModelParams p;
    p.U_raw = Matrix::Identity(K, K);
    p.V_raw = Matrix::Identity(D, K);
    p.sigma_raw = Vector::Zero(K);
    p.t_raw = Matrix::Zero(K, K - 1);
    p.q_raw.assign(static_cast<std::size_t>(K), Matrix::Zero(K - 1, K - 1));
    p.omega_raw = Matrix::Zero(n_nodes, K);
    p.m_logits = Matrix::Zero(n_nodes, K);
    p.g = Vector::Zero(n_nodes);
    return p;
  }

  int K() const { return static_cast<int>(U_raw.rows()); }
  int D() const { return static_cast<int>(V_raw.rows()); }
  int n_nodes() const { return static_cast<int>(g.size()); }

  struct Block {
    std::string name;
    std::size_t offset;
    std::size_t size;
  };

  /// Layout of the flattened parameter vector, one entry per named block.
  std::vector<Block> blocks() const {
    std::vector<Block> out;
    std::size_t off = 0;
    auto add = [&](std::string name, Eigen::Index n) {
      out.push_back({std::move(name), off, static_cast<std::size_t>(n)});
      off += static_cast<std::size_t>(n);
    };
    add("U_raw", U_raw.size());
    add("V_raw", V_raw.size());
    add("sigma_raw", sigma_raw.size());
    add("t_raw", t_raw.size());
    Eigen::Index q_size = 0;
    for (const auto& q : q_raw) q_size += q.size();
    add("q_raw", q_size);
    add("omega_raw", omega_raw.size());
    add("m_logits", m_logits.size());
    add("g", g.size());
    add("s_raw", 1);
    return out;
  }

  std::size_t size() const {
    const auto b = blocks();
    return b.back().offset + b.back().size;
  }

  Vector flatten() const {
    Vector out(static_cast<Eigen::Index>(size()));
    Eigen::Index off = 0;
    auto put = [&](const auto& m) {
      out.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
      off += m.size();
    };
    put(U_raw);
    put(V_raw);
    put(sigma_raw);
    put(t_raw);
    for (const auto& q : q_raw) put(q);
    put(omega_raw);
    put(m_logits);
    put(g);
    out[off] = s_raw;
    return out;
  }

  /// Overwrites every block from a flat vector laid out as flatten() produces.
  void assign(const Vector& flat) {
    if (flat.size() != static_cast<Eigen::Index>(size())) throw Error("ModelParams::assign: size mismatch");
    Eigen::Index off = 0;
    auto take = [&](auto& m) {
      Eigen::Map<Vector>(m.data(), m.size()) = flat.segment(off, m.size());
      off += m.size();
    };
    take(U_raw);
    take(V_raw);
    take(sigma_raw);
    take(t_raw);
    for (auto& q : q_raw) take(q);
    take(omega_raw);
    take(m_logits);
    take(g);
    s_raw = flat[off];
  }

  bool all_finite() const { return flatten().allFinite(); }
};

/// Constrained quantities derived from ModelParams.
struct ModelState {
  Matrix A;                     // K x D archetypes
  Vector sigma;                 // boxed singular values
  std::vector<Matrix> W_tilde;  // K blocks of K x K barycentric rows; last row = e_k
  std::vector<Matrix> B;        // K blocks of K x D local-hull vertices
  Matrix t;                     // K x (K-1) anchor shrink fractions in (0, 1)
  std::vector<Matrix> q;        // K blocks of (K-1) x (K-1) non-anchor simplex weights
  Matrix M_soft;                // N x K row-stochastic
  std::vector<int> assignments; // hardened argmax of M_soft
  Matrix Omega;                 // N x K row-stochastic
  Matrix Z;                     // N x D
  Vector g;
  double s = 1.0;

  int K() const { return static_cast<int>(A.rows()); }
  int D() const { return static_cast<int>(A.cols()); }
  int n_nodes() const { return static_cast<int>(Z.rows()); }
};

struct QrFactors {
  Matrix Q;  // m x n, orthonormal columns
  Matrix R;  // n x n upper triangular, diag(R) >= 0
};

/// Thin Householder QR with the sign convention diag(R) >= 0, which makes the
/// factorization unique (and smooth) for full-column-rank input.
inline QrFactors orthonormalize(const Matrix& raw, const std::string& block_name) {
  const Eigen::Index m = raw.rows(), n = raw.cols();
  if (n > m) throw Error(block_name + ": more columns than rows, cannot orthonormalize");
  Eigen::HouseholderQR<Matrix> qr(raw);
  QrFactors out;
  out.Q = qr.householderQ() * Matrix::Identity(m, n);
  out.R = qr.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, raw.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(out.R(j, j)) || std::abs(out.R(j, j)) <= 1e-12 * scale)
      throw Error(block_name + ": block is rank-deficient (column " + std::to_string(j) + "), orthonormalization is ill-posed");
    if (out.R(j, j) < 0) {
      out.Q.col(j) *= -1.0;
      out.R.row(j) *= -1.0;
    }
  }
  return out;
}

inline Vector boxed_sigma(const Vector& sigma_raw, const Hyperparams& hp) {
  Vector out(sigma_raw.size());
  for (Eigen::Index k = 0; k < sigma_raw.size(); ++k)
    out[k] = hp.sigma_min + (hp.sigma_max - hp.sigma_min) * logistic(sigma_raw[k]);
  return out;
}

/// A = U diag(sigma) V^T with sigma boxed into (sigma_min, sigma_max).
inline Matrix build_archetypes(const Matrix& U_raw, const Matrix& V_raw, const Vector& sigma_raw, const Hyperparams& hp) {
  const auto K = U_raw.rows();
  if (U_raw.cols() != K || V_raw.cols() != K || sigma_raw.size() != K)
    throw Error("build_archetypes: inconsistent block shapes");
  const Matrix U = orthonormalize(U_raw, "U_raw").Q;
  const Matrix V = orthonormalize(V_raw, "V_raw").Q;
  return U * boxed_sigma(sigma_raw, hp).asDiagonal() * V.transpose();
}

/// Position of non-anchor slot j (0..K-2) among the K coordinates of hull k.
inline int non_anchor_coord(int k, int j) { return j < k ? j : j + 1; }

struct LocalHulls {
  std::vector<Matrix> W_tilde;
  std::vector<Matrix> B;
  Matrix t;
  std::vector<Matrix> q;
};

/// Anchor-dominant local hulls. Non-anchor row r of hull k is
/// (1 - eps*t) e_k + eps*t * q, with q a simplex vector carrying no mass on k;
/// the final row is e_k, so every row keeps at least 1 - eps on its anchor.
inline LocalHulls build_local_hulls(const Matrix& A, const Matrix& t_raw, const std::vector<Matrix>& q_raw,
                                    const Hyperparams& hp) {
  const int K = static_cast<int>(A.rows());
  if (t_raw.rows() != K || t_raw.cols() != K - 1 || static_cast<int>(q_raw.size()) != K)
    throw Error("build_local_hulls: inconsistent block shapes");
  LocalHulls out;
  out.t.resize(K, K - 1);
  for (int k = 0; k < K; ++k) {
    Matrix W = Matrix::Zero(K, K);
    Matrix q(K - 1, K - 1);
    for (int r = 0; r < K - 1; ++r) {
      const double t = logistic(t_raw(k, r));
      const double shrink = hp.epsilon * t;
      out.t(k, r) = t;
      q.row(r) = softmax(q_raw[k].row(r).transpose()).transpose();
      W(r, k) = 1.0 - shrink;
      for (int j = 0; j < K - 1; ++j) W(r, non_anchor_coord(k, j)) = shrink * q(r, j);
    }
    W(K - 1, k) = 1.0;
    out.B.push_back(W * A);
    out.W_tilde.push_back(std::move(W));
    out.q.push_back(std::move(q));
  }
  return out;
}

/// Relaxed categorical sample softmax((logits + noise) / temperature).
inline Vector gumbel_softmax(const Vector& logits, double temperature, const Vector& noise) {
  if (!(temperature > 0)) throw Error("gumbel_softmax: temperature must be positive");
  if (noise.size() != logits.size()) throw Error("gumbel_softmax: noise length mismatch");
  Vector v = (logits + noise) / temperature;
  softmax_inplace(v);
  return v;
}

inline Matrix gumbel_noise(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = standard_gumbel(rng);
  return m;
}

/// z_i = sum_k M[i,k] * omega_i^T B_k; with one-hot M this selects the node's hull.
inline Matrix node_embeddings(const Matrix& M_soft, const Matrix& Omega, const std::vector<Matrix>& B) {
  const Eigen::Index N = Omega.rows();
  const auto K = static_cast<Eigen::Index>(B.size());
  if (K == 0 || M_soft.rows() != N || M_soft.cols() != K || Omega.cols() != B.front().rows())
    throw Error("node_embeddings: inconsistent shapes");
  Matrix Z = Matrix::Zero(N, B.front().cols());
  for (Eigen::Index k = 0; k < K; ++k) {
    const Matrix proj = Omega * B[static_cast<std::size_t>(k)];
    Z += M_soft.col(k).asDiagonal() * proj;
  }
  return Z;
}

/// Row-wise argmax, ties to the smallest index.
inline std::vector<int> harden(const Matrix& M_soft) {
  std::vector<int> out(static_cast<std::size_t>(M_soft.rows()));
  for (Eigen::Index i = 0; i < M_soft.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < M_soft.cols(); ++k)
      if (M_soft(i, k) > M_soft(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

inline Matrix one_hot(const std::vector<int>& c, int K) {
  Matrix M = Matrix::Zero(static_cast<Eigen::Index>(c.size()), K);
  for (std::size_t i = 0; i < c.size(); ++i) M(static_cast<Eigen::Index>(i), c[i]) = 1.0;
  return M;
}

inline Matrix row_softmax(const Matrix& raw) {
  Matrix out = raw;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Vector row = out.row(i).transpose();
    softmax_inplace(row);
    out.row(i) = row.transpose();
  }
  return out;
}

/// How M is formed from the logits when assembling a state.
struct AssignmentSpec {
  enum class Mode { hard, relaxed };
  Mode mode = Mode::hard;
  double temperature = 1.0;
  Matrix noise;  // N x K Gumbel draws; empty means zero noise

  static AssignmentSpec hard() { return {}; }
  static AssignmentSpec relaxed(double temperature, Matrix noise = {}) {
    return {Mode::relaxed, temperature, std::move(noise)};
  }
};

inline Matrix assignment_matrix(const Matrix& m_logits, const AssignmentSpec& spec) {
  if (spec.mode == AssignmentSpec::Mode::hard) return one_hot(harden(m_logits), static_cast<int>(m_logits.cols()));
  const bool noisy = spec.noise.size() > 0;
  if (noisy && (spec.noise.rows() != m_logits.rows() || spec.noise.cols() != m_logits.cols()))
    throw Error("assignment_matrix: noise shape mismatch");
  Matrix M(m_logits.rows(), m_logits.cols());
  for (Eigen::Index i = 0; i < m_logits.rows(); ++i) {
    const Vector noise = noisy ? Vector(spec.noise.row(i).transpose()) : Vector::Zero(m_logits.cols());
    M.row(i) = gumbel_softmax(m_logits.row(i).transpose(), spec.temperature, noise).transpose();
  }
  return M;
}

inline ModelState assemble_state(const ModelParams& p, const Hyperparams& hp,
                                 const AssignmentSpec& spec = AssignmentSpec::hard()) {
  hp.validate();
  if (p.K() != hp.K || p.D() != hp.D) throw Error("assemble_state: parameter shapes disagree with hyperparameters");
  ModelState st;
  st.A = build_archetypes(p.U_raw, p.V_raw, p.sigma_raw, hp);
  st.sigma = boxed_sigma(p.sigma_raw, hp);
  auto hulls = build_local_hulls(st.A, p.t_raw, p.q_raw, hp);
  st.W_tilde = std::move(hulls.W_tilde);
  st.B = std::move(hulls.B);
  st.t = std::move(hulls.t);
  st.q = std::move(hulls.q);
  st.Omega = row_softmax(p.omega_raw);
  st.M_soft = assignment_matrix(p.m_logits, spec);
  st.assignments = harden(st.M_soft);
  st.Z = node_embeddings(st.M_soft, st.Omega, st.B);
  st.g = p.g;
  st.s = std::exp(p.s_raw);
  return st;
}

}  // namespace graphhull

#endif  // GRAPHHULL_PARAMETERIZATION_HPP
