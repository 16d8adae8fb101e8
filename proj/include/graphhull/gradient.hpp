#ifndef GRAPHHULL_GRADIENT_HPP
#define GRAPHHULL_GRADIENT_HPP

#include "graphhull/objective.hpp"
#include "graphhull/parameterization.hpp"

#include <vector>

namespace graphhull {

/// Reverse pass of the thin QR with diag(R) > 0, for a loss depending on Q only:
///   M = -Q̄ᵀQ,  Ā = (Q̄ + Q copyltu(M)) R^{-T}
/// where copyltu mirrors the lower triangle of M onto the upper one.
inline Matrix qr_backward(const QrFactors& f, const Matrix& Q_bar) {
  const Matrix M = -Q_bar.transpose() * f.Q;
  Matrix sym = M.triangularView<Eigen::Lower>();
  sym.triangularView<Eigen::StrictlyUpper>() = M.transpose().triangularView<Eigen::StrictlyUpper>();
  const Matrix lhs = Q_bar + f.Q * sym;
  // lhs * R^{-T}: solve R X^T = lhs^T.
  return f.R.triangularView<Eigen::Upper>().solve(lhs.transpose()).transpose();
}

/// Gradient of the DPP log prior with respect to the unnormalized vertices.
inline Matrix dpp_log_prior_grad(const Matrix& vertices, double kappa) {
  const Matrix psi = normalize_rows(vertices);
  const Matrix G = psi * psi.transpose();
  const auto n = G.rows();
  const Matrix I = Matrix::Identity(n, n);
  Eigen::LLT<Matrix> llt_g(G);
  Eigen::LLT<Matrix> llt_ipl(I + kappa * G);
  if (llt_g.info() != Eigen::Success) return Matrix::Constant(vertices.rows(), vertices.cols(), std::nan(""));
  const Matrix G_bar = llt_g.solve(I) - kappa * llt_ipl.solve(I);
  const Matrix psi_bar = 2.0 * G_bar * psi;
  Matrix out(vertices.rows(), vertices.cols());
  for (Eigen::Index r = 0; r < vertices.rows(); ++r) {
    const double norm = vertices.row(r).norm();
    out.row(r) = (psi_bar.row(r) - psi.row(r) * psi.row(r).dot(psi_bar.row(r))) / norm;
  }
  return out;
}

struct GradientResult {
  ObjectiveBreakdown objective;
  ModelParams grad;  // same shapes as the parameters
};

/// Objective and exact gradient of its total over a fixed set of pairs (the
/// subsample and any Gumbel noise in cfg.assignment are held constant).
inline GradientResult gradient_for_pairs(const std::vector<WeightedPair>& pairs, const ModelParams& p,
                                         const Hyperparams& hp, const AssignmentSpec& assignment) {
  hp.validate();
  const int K = hp.K;
  const int N = p.n_nodes();

  // Forward.
  const QrFactors fu = orthonormalize(p.U_raw, "U_raw");
  const QrFactors fv = orthonormalize(p.V_raw, "V_raw");
  const Vector sigma = boxed_sigma(p.sigma_raw, hp);
  const Matrix A = fu.Q * sigma.asDiagonal() * fv.Q.transpose();
  const LocalHulls hulls = build_local_hulls(A, p.t_raw, p.q_raw, hp);
  const Matrix Omega = row_softmax(p.omega_raw);
  const Matrix M = assignment_matrix(p.m_logits, assignment);
  std::vector<Matrix> proj(static_cast<std::size_t>(K));
  Matrix Z = Matrix::Zero(N, hp.D);
  for (int k = 0; k < K; ++k) {
    proj[k] = Omega * hulls.B[k];
    Z += M.col(k).asDiagonal() * proj[k];
  }
  const double s = std::exp(p.s_raw);

  ModelState st;
  st.A = A;
  st.B = hulls.B;
  st.g = p.g;
  st.s = s;
  st.Z = Z;
  GradientResult res;
  res.objective = prior_terms(st, p, hp);
  add_dpp_terms(res.objective, st, hp);

  // Edge term: per-pair adjoints in parallel, scattered serially in pair order.
  std::vector<double> d_eta(pairs.size());
  std::vector<double> partial(chunk_count(pairs.size()), 0.0);
  for_each_chunk(partial.size(), [&](std::size_t c) {
    double acc = 0;
    const std::size_t end = std::min(pairs.size(), (c + 1) * kPairChunk);
    for (std::size_t q = c * kPairChunk; q < end; ++q) {
      const auto& wp = pairs[q];
      const double eta = s * Z.row(wp.i).dot(Z.row(wp.j)) + (p.g[wp.i] + p.g[wp.j]);
      acc += wp.weight * (wp.y * eta - softplus(eta));
      d_eta[q] = wp.weight * (wp.y - logistic(eta));
    }
    partial[c] = acc;
  });
  for (double v : partial) res.objective.edge_loglik += v;
  res.objective.total = res.objective.sum_of_terms();

  Matrix Z_bar = Matrix::Zero(N, hp.D);
  Vector g_bar = -p.g / (hp.tau_g * hp.tau_g);
  double s_bar = -s / (hp.tau_s * hp.tau_s);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto& wp = pairs[q];
    const double d = d_eta[q];
    g_bar[wp.i] += d;
    g_bar[wp.j] += d;
    s_bar += d * Z.row(wp.i).dot(Z.row(wp.j));
    Z_bar.row(wp.i) += (d * s) * Z.row(wp.j);
    Z_bar.row(wp.j) += (d * s) * Z.row(wp.i);
  }

  // Z = sum_k diag(M_k) Omega B_k.
  Matrix M_bar(N, K);
  Matrix Omega_bar = Matrix::Zero(N, K);
  std::vector<Matrix> B_bar(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    M_bar.col(k) = proj[k].cwiseProduct(Z_bar).rowwise().sum();
    const Matrix P_bar = M.col(k).asDiagonal() * Z_bar;
    Omega_bar += P_bar * hulls.B[k].transpose();
    B_bar[k] = Omega.transpose() * P_bar;
    if (hp.use_dpp) B_bar[k] += dpp_log_prior_grad(hulls.B[k], hp.kappa);
  }

  ModelParams& gp = res.grad;
  gp.g = g_bar;
  gp.s_raw = s_bar * s;

  gp.m_logits = Matrix::Zero(N, K);
  if (assignment.mode == AssignmentSpec::Mode::relaxed)
    for (int i = 0; i < N; ++i)
      gp.m_logits.row(i) =
          softmax_backward(M.row(i).transpose(), M_bar.row(i).transpose()).transpose() / assignment.temperature;

  gp.omega_raw.resize(N, K);
  for (int i = 0; i < N; ++i) {
    Vector row = softmax_backward(Omega.row(i).transpose(), Omega_bar.row(i).transpose());
    if (hp.alpha_omega != 1.0) row += (hp.alpha_omega - 1.0) * (Vector::Ones(K) - K * Omega.row(i).transpose());
    gp.omega_raw.row(i) = row.transpose();
  }

  // B_k = W_k A.
  Matrix A_bar = Matrix::Zero(K, hp.D);
  if (hp.use_dpp) A_bar += dpp_log_prior_grad(A, hp.kappa);
  gp.t_raw.resize(K, K - 1);
  gp.q_raw.assign(static_cast<std::size_t>(K), Matrix(K - 1, K - 1));
  for (int k = 0; k < K; ++k) {
    const Matrix W_bar = B_bar[k] * A.transpose();
    A_bar += hulls.W_tilde[k].transpose() * B_bar[k];
    for (int r = 0; r < K - 1; ++r) {
      const double t = hulls.t(k, r);
      Vector q_bar(K - 1);
      double t_bar = -hp.epsilon * W_bar(r, k);
      for (int j = 0; j < K - 1; ++j) {
        const double wb = W_bar(r, non_anchor_coord(k, j));
        t_bar += hp.epsilon * wb * hulls.q[k](r, j);
        q_bar[j] = hp.epsilon * t * wb;
      }
      gp.t_raw(k, r) = t_bar * t * (1.0 - t) + (hp.beta_a - 1.0) * (1.0 - t) - (hp.beta_b - 1.0) * t;
      const Vector q_row = hulls.q[k].row(r).transpose();
      Vector qr = softmax_backward(q_row, q_bar);
      if (hp.alpha_q != 1.0) qr += (hp.alpha_q - 1.0) * (Vector::Ones(K - 1) - (K - 1) * q_row);
      gp.q_raw[k].row(r) = qr.transpose();
    }
  }

  // A = U diag(sigma) V^T.
  const Matrix U_bar = A_bar * fv.Q * sigma.asDiagonal();
  const Matrix V_bar = A_bar.transpose() * fu.Q * sigma.asDiagonal();
  const Vector sigma_bar = (fu.Q.transpose() * A_bar * fv.Q).diagonal();
  gp.sigma_raw.resize(K);
  for (int k = 0; k < K; ++k) {
    const double l = logistic(p.sigma_raw[k]);
    gp.sigma_raw[k] = sigma_bar[k] * (hp.sigma_max - hp.sigma_min) * l * (1.0 - l);
  }
  gp.U_raw = qr_backward(fu, U_bar);
  gp.V_raw = qr_backward(fv, V_bar);

  const Vector flat = gp.flatten();
  for (const auto& b : gp.blocks())
    if (!flat.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size)).allFinite())
      throw Error("gradient: non-finite gradient in block " + b.name);
  return res;
}

/// Exact gradient of map_objective(g, p, hp, cfg).total.
inline GradientResult gradient(const Graph& g, const ModelParams& p, const Hyperparams& hp, const ObjectiveConfig& cfg) {
  if (p.n_nodes() != g.n_nodes()) throw Error("gradient: parameter and graph node counts differ");
  return gradient_for_pairs(objective_pairs(g, cfg), p, hp, cfg.assignment);
}

}  // namespace graphhull

#endif  // GRAPHHULL_GRADIENT_HPP
