#ifndef GRAPHHULL_OBJECTIVE_HPP
#define GRAPHHULL_OBJECTIVE_HPP

#include "graphhull/common.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/parameterization.hpp"

#include <cstdint>
#include <vector>

namespace graphhull {

struct ObjectiveBreakdown {
  double edge_loglik = 0;
  double dirichlet_omega = 0;
  double dirichlet_q = 0;
  double beta_t = 0;
  double dpp_local = 0;
  double dpp_global = 0;
  double gauss_g = 0;
  double halfnormal_s = 0;
  double total = 0;

  double sum_of_terms() const {
    return edge_loglik + dirichlet_omega + dirichlet_q + beta_t + dpp_local + dpp_global + gauss_g + halfnormal_s;
  }
};

struct SubsampleConfig {
  std::size_t n_negative_samples = 1;  // m
  std::uint64_t seed = 0;
};

struct ObjectiveConfig {
  bool exhaustive = false;  // exact O(N^2) non-edge term instead of subsampling
  SubsampleConfig subsample;
  AssignmentSpec assignment;
};

inline double edge_logit(const Eigen::Ref<const Vector>& z_i, const Eigen::Ref<const Vector>& z_j, double g_i,
                         double g_j, double s) {
  return s * z_i.dot(z_j) + (g_i + g_j);
}

/// A pair entering the edge likelihood with label y and multiplicity weight.
struct WeightedPair {
  int i;
  int j;
  double y;
  double weight;
};

struct NonEdgeSample {
  std::vector<Edge> pairs;
  double scale = 0;  // (|D| - |E|) / m
  bool complete_graph = false;
};

/// m i.i.d. uniform draws from the non-edges of g, by rejection on the adjacency.
/// A budget covering every non-edge enumerates them instead.
inline NonEdgeSample draw_non_edges(const Graph& g, const SubsampleConfig& cfg) {
  if (cfg.n_negative_samples < 1) throw Error("subsample: m must be at least 1");
  NonEdgeSample out;
  if (g.n_non_edges() == 0) {
    out.complete_graph = true;
    return out;
  }
  if (cfg.n_negative_samples >= g.n_non_edges()) {
    // The whole complement fits in the budget: enumerate it once, unweighted.
    for (int i = 0; i < g.n_nodes(); ++i)
      for (int j = i + 1; j < g.n_nodes(); ++j)
        if (!g.has_edge(i, j)) out.pairs.emplace_back(i, j);
    out.scale = 1.0;
    return out;
  }
  Rng rng = make_rng(cfg.seed, "objective.non_edges");
  std::uniform_int_distribution<int> pick(0, g.n_nodes() - 1);
  out.pairs.reserve(cfg.n_negative_samples);
  while (out.pairs.size() < cfg.n_negative_samples) {
    int i = pick(rng), j = pick(rng);
    if (i == j || g.has_edge(i, j)) continue;
    if (i > j) std::swap(i, j);
    out.pairs.emplace_back(i, j);
  }
  out.scale = static_cast<double>(g.n_non_edges()) / static_cast<double>(cfg.n_negative_samples);
  return out;
}

inline std::vector<WeightedPair> exhaustive_pairs(const Graph& g) {
  std::vector<WeightedPair> out;
  out.reserve(static_cast<std::size_t>(g.n_pairs()));
  for (int i = 0; i < g.n_nodes(); ++i)
    for (int j = i + 1; j < g.n_nodes(); ++j) out.push_back({i, j, g.has_edge(i, j) ? 1.0 : 0.0, 1.0});
  return out;
}

inline std::vector<WeightedPair> subsampled_pairs(const Graph& g, const NonEdgeSample& sample) {
  std::vector<WeightedPair> out;
  out.reserve(g.n_edges() + sample.pairs.size());
  for (const auto& [i, j] : g.edges()) out.push_back({i, j, 1.0, 1.0});
  for (const auto& [i, j] : sample.pairs) out.push_back({i, j, 0.0, sample.scale});
  return out;
}

inline constexpr std::size_t kPairChunk = 4096;

inline std::size_t chunk_count(std::size_t n) { return (n + kPairChunk - 1) / kPairChunk; }

/// sum_p w_p [y_p eta_p - softplus(eta_p)], reduced chunk by chunk in fixed order.
inline double pair_loglik(const std::vector<WeightedPair>& pairs, const Matrix& Z, const Vector& g, double s) {
  const std::size_t n_chunks = chunk_count(pairs.size());
  std::vector<double> partial(n_chunks, 0.0);
  for_each_chunk(n_chunks, [&](std::size_t c) {
    double acc = 0;
    const std::size_t end = std::min(pairs.size(), (c + 1) * kPairChunk);
    for (std::size_t p = c * kPairChunk; p < end; ++p) {
      const auto& wp = pairs[p];
      const double eta = s * Z.row(wp.i).dot(Z.row(wp.j)) + (g[wp.i] + g[wp.j]);
      acc += wp.weight * (wp.y * eta - softplus(eta));
    }
    partial[c] = acc;
  });
  double total = 0;
  for (double v : partial) total += v;
  return total;
}

inline double loglik_exact(const Graph& g, const ModelState& st) {
  if (st.n_nodes() != g.n_nodes()) throw Error("loglik_exact: state and graph node counts differ");
  return pair_loglik(exhaustive_pairs(g), st.Z, st.g, st.s);
}

struct SubsampledLoglik {
  double value = 0;
  bool complete_graph = false;  // no non-edges exist; value is the edge term only
};

inline SubsampledLoglik loglik_subsampled(const Graph& g, const ModelState& st, const SubsampleConfig& cfg) {
  if (g.n_edges() < 1) throw Error("loglik_subsampled: graph has no edges");
  if (st.n_nodes() != g.n_nodes()) throw Error("loglik_subsampled: state and graph node counts differ");
  const auto sample = draw_non_edges(g, cfg);
  return {pair_loglik(subsampled_pairs(g, sample), st.Z, st.g, st.s), sample.complete_graph};
}

/// Row-normalized copy of phi; throws on a zero row.
inline Matrix normalize_rows(const Matrix& phi) {
  Matrix psi = phi;
  for (Eigen::Index r = 0; r < phi.rows(); ++r) {
    const double norm = phi.row(r).norm();
    if (!(norm > 0)) throw Error("dpp_log_prior: row " + std::to_string(r) + " is zero, normalization undefined");
    psi.row(r) /= norm;
  }
  return psi;
}

/// Cholesky-based log determinant of a symmetric matrix. Returns -inf when a
/// pivot falls below pivot_tol (the matrix is singular to working precision).
inline double logdet_spd(const Matrix& S, double pivot_tol) {
  const Eigen::Index n = S.rows();
  Matrix L = Matrix::Zero(n, n);
  double logdet = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = S(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > pivot_tol)) return kNegInf;
    const double root = std::sqrt(d);
    L(j, j) = root;
    logdet += 2.0 * std::log(root);
    for (Eigen::Index i = j + 1; i < n; ++i) L(i, j) = (S(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / root;
  }
  return logdet;
}

inline constexpr double kDppPivotTol = 1e-12;

/// L-ensemble log prior log det(L) - log det(I + L), L = kappa * Psi Psi^T with
/// Psi the row-normalized vertices. Singular L yields -inf.
inline double dpp_log_prior(const Matrix& vertices, double kappa) {
  if (!(kappa > 0)) throw Error("dpp_log_prior: kappa must be positive");
  const Matrix psi = normalize_rows(vertices);
  const Matrix L = kappa * psi * psi.transpose();
  const double ld = logdet_spd(L, kDppPivotTol * kappa);
  if (ld == kNegInf) return kNegInf;
  const Matrix IpL = Matrix::Identity(L.rows(), L.cols()) + L;
  return ld - logdet_spd(IpL, 0.0);
}

/// Prior terms of the MAP objective (additive constants dropped). Logs of
/// simplex and logistic quantities are taken from the raw blocks, so they stay
/// finite even when a coordinate rounds to 0 or 1.
inline ObjectiveBreakdown prior_terms(const ModelState& st, const ModelParams& p, const Hyperparams& hp) {
  ObjectiveBreakdown out;
  auto log_softmax_sum = [](const Eigen::Ref<const Vector>& raw) {
    const double m = raw.maxCoeff();
    const double lse = m + std::log((raw.array() - m).exp().sum());
    return raw.sum() - static_cast<double>(raw.size()) * lse;
  };
  if (hp.alpha_omega != 1.0)
    for (Eigen::Index i = 0; i < p.omega_raw.rows(); ++i)
      out.dirichlet_omega += (hp.alpha_omega - 1.0) * log_softmax_sum(p.omega_raw.row(i).transpose());
  const int K = p.K();
  for (int k = 0; k < K; ++k)
    for (int r = 0; r < K - 1; ++r) {
      if (hp.alpha_q != 1.0 && K > 2)
        out.dirichlet_q += (hp.alpha_q - 1.0) * log_softmax_sum(p.q_raw[k].row(r).transpose());
      const double x = p.t_raw(k, r);
      out.beta_t += (hp.beta_a - 1.0) * -softplus(-x) + (hp.beta_b - 1.0) * -softplus(x);
    }
  out.gauss_g = -st.g.squaredNorm() / (2.0 * hp.tau_g * hp.tau_g);
  out.halfnormal_s = -st.s * st.s / (2.0 * hp.tau_s * hp.tau_s);
  return out;
}

inline void add_dpp_terms(ObjectiveBreakdown& out, const ModelState& st, const Hyperparams& hp) {
  if (!hp.use_dpp) return;
  for (const auto& B : st.B) out.dpp_local += dpp_log_prior(B, hp.kappa);
  out.dpp_global = dpp_log_prior(st.A, hp.kappa);
}

/// Pairs entering the edge term for a given objective configuration.
inline std::vector<WeightedPair> objective_pairs(const Graph& g, const ObjectiveConfig& cfg) {
  if (cfg.exhaustive) return exhaustive_pairs(g);
  if (g.n_nodes() < 2) return {};
  return subsampled_pairs(g, draw_non_edges(g, cfg.subsample));
}

inline ObjectiveBreakdown evaluate_objective(const std::vector<WeightedPair>& pairs, const ModelState& st,
                                             const ModelParams& p, const Hyperparams& hp) {
  ObjectiveBreakdown out = prior_terms(st, p, hp);
  add_dpp_terms(out, st, hp);
  out.edge_loglik = pair_loglik(pairs, st.Z, st.g, st.s);
  out.total = out.sum_of_terms();
  return out;
}

/// MAP objective (to be maximized): edge log-likelihood plus all priors.
inline ObjectiveBreakdown map_objective(const Graph& g, const ModelParams& p, const Hyperparams& hp,
                                        const ObjectiveConfig& cfg) {
  if (p.n_nodes() != g.n_nodes()) throw Error("map_objective: parameter and graph node counts differ");
  const ModelState st = assemble_state(p, hp, cfg.assignment);
  return evaluate_objective(objective_pairs(g, cfg), st, p, hp);
}

}  // namespace graphhull

#endif  // GRAPHHULL_OBJECTIVE_HPP
