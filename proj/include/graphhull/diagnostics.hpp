#ifndef GRAPHHULL_DIAGNOSTICS_HPP
#define GRAPHHULL_DIAGNOSTICS_HPP

#include "graphhull/common.hpp"
#include "graphhull/curvature.hpp"
#include "graphhull/parameterization.hpp"

#include <optional>
#include <vector>

namespace graphhull {

inline void check_row_simplex(const Matrix& W, double tol, const char* what) {
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    if (W.row(r).minCoeff() < -tol || std::abs(W.row(r).sum() - 1.0) > tol)
      throw Error(std::string(what) + ": row " + std::to_string(r) + " is off the simplex");
  }
}

struct DisjointnessCertificate {
  Matrix margin;  // K x K, symmetric, NaN on the diagonal
  double min_margin = 0;
  double guaranteed = 0;  // 1 - 2 epsilon, the construction's lower bound
};

/// Separation margins between local hulls in barycentric coordinates. For the
/// pair (k, l), coordinate k separates the hulls by
///   min_r W_k[r, k] - max_r W_l[r, k],
/// and symmetrically for coordinate l; the reported margin is the larger of
/// the two. Any positive margin certifies conv(B_k) and conv(B_l) are disjoint.
inline DisjointnessCertificate disjointness_certificate(const std::vector<Matrix>& W_tilde, double epsilon) {
  const auto K = static_cast<int>(W_tilde.size());
  for (const auto& W : W_tilde) {
    if (W.rows() != K || W.cols() != K) throw Error("disjointness_certificate: expected K x K barycentric blocks");
    check_row_simplex(W, 1e-8, "disjointness_certificate");
  }
  auto directional = [&](int k, int l) {
    return W_tilde[k].col(k).minCoeff() - W_tilde[l].col(k).maxCoeff();
  };
  DisjointnessCertificate out;
  out.margin = Matrix::Constant(K, K, std::nan(""));
  out.min_margin = std::numeric_limits<double>::infinity();
  out.guaranteed = 1.0 - 2.0 * epsilon;
  for (int k = 0; k < K; ++k)
    for (int l = k + 1; l < K; ++l) {
      const double m = std::max(directional(k, l), directional(l, k));
      out.margin(k, l) = out.margin(l, k) = m;
      out.min_margin = std::min(out.min_margin, m);
    }
  return out;
}

namespace detail {

/// Phase-one simplex: returns the minimum total infeasibility of
/// {x >= 0 : Eq x = rhs}. Dense tableau, Bland's rule.
inline double phase_one_infeasibility(Matrix Eq, Vector rhs) {
  const Eigen::Index m = Eq.rows(), n = Eq.cols();
  for (Eigen::Index r = 0; r < m; ++r)
    if (rhs[r] < 0) {
      Eq.row(r) *= -1.0;
      rhs[r] = -rhs[r];
    }
  // Columns: n structural, m artificial, then rhs.
  Matrix T = Matrix::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = Eq;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = rhs;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) basis[r] = n + r;
  // Reduced-cost row for min sum(artificials).
  for (Eigen::Index r = 0; r < m; ++r) T.row(m) -= T.row(r);
  T.block(m, n, 1, m).setZero();

  constexpr double tol = 1e-12;
  const int max_iter = 50 * static_cast<int>(n + m + 1);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (T(m, j) < -tol) {
        enter = j;
        break;
      }
    if (enter < 0) return std::max(0.0, -T(m, n + m));
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m; ++r) {
      if (T(r, enter) > tol) {
        const double ratio = T(r, n + m) / T(r, enter);
        if (ratio < best - tol || (std::abs(ratio - best) <= tol && leave >= 0 && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) throw Error("hull_intersection_oracle: phase-one problem unbounded (numerical failure)");
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index r = 0; r <= m; ++r)
      if (r != leave && T(r, enter) != 0.0) T.row(r) -= T(r, enter) * T.row(leave);
    basis[leave] = enter;
  }
  throw Error("hull_intersection_oracle: simplex iteration limit reached");
}

}  // namespace detail

/// Decides whether conv(W_k A) and conv(W_l A) intersect by checking feasibility
/// of lambda^T W_k = mu^T W_l with lambda, mu on the simplex. With affinely
/// independent archetypes this is equivalent to geometric intersection.
inline bool hull_intersection_oracle(const Matrix& W_k, const Matrix& W_l, double tol = 1e-9) {
  if (W_k.cols() != W_l.cols()) throw Error("hull_intersection_oracle: coordinate dimension mismatch");
  const Eigen::Index K = W_k.cols(), nk = W_k.rows(), nl = W_l.rows();
  Matrix Eq = Matrix::Zero(K + 2, nk + nl);
  Eq.topLeftCorner(K, nk) = W_k.transpose();
  Eq.topRightCorner(K, nl) = -W_l.transpose();
  Eq.block(K, 0, 1, nk).setOnes();
  Eq.block(K + 1, nk, 1, nl).setOnes();
  Vector rhs = Vector::Zero(K + 2);
  rhs[K] = rhs[K + 1] = 1.0;
  return detail::phase_one_infeasibility(Eq, rhs) <= tol;
}

struct HullVolume {
  double log_volume = 0;
  int effective_rank = 0;
};

inline constexpr double kEffectiveRankTol = 1e-6;

/// Rank-aware log-volume surrogate: sum of log singular values of the centered
/// vertex matrix that exceed tol.
inline HullVolume effective_log_volume(const Matrix& B, double tol = kEffectiveRankTol) {
  if (B.rows() < 2) throw Error("effective_log_volume: need at least two vertices");
  const Matrix centered = B.rowwise() - B.colwise().mean();
  const Vector sv = Eigen::JacobiSVD<Matrix>(centered).singularValues();
  HullVolume out;
  for (Eigen::Index r = 0; r < sv.size(); ++r)
    if (sv[r] > tol) {
      ++out.effective_rank;
      out.log_volume += std::log(sv[r]);
    }
  return out;
}

inline Vector singular_spectrum(const Matrix& B) {
  Vector sv = Eigen::JacobiSVD<Matrix>(B).singularValues();  // already descending
  if (sv.size() < B.rows()) {
    Vector padded = Vector::Zero(B.rows());
    padded.head(sv.size()) = sv;
    return padded;
  }
  return sv;
}

struct HullGeometry {
  Vector singular_values;
  double effective_log_volume = 0;
  int effective_rank = 0;
};

struct GeometryReport {
  Matrix pairwise_margin;
  double min_margin = 0;
  std::vector<HullGeometry> per_hull;
  std::optional<double> lipschitz_bound;  // requires the graph's deg_max
};

inline GeometryReport geometry_report(const ModelState& st, const Hyperparams& hp, std::optional<int> deg_max = {}) {
  GeometryReport out;
  if (st.K() >= 2) {
    const auto cert = disjointness_certificate(st.W_tilde, hp.epsilon);
    out.pairwise_margin = cert.margin;
    out.min_margin = cert.min_margin;
  } else {
    out.pairwise_margin = Matrix::Constant(1, 1, std::nan(""));
    out.min_margin = std::numeric_limits<double>::infinity();
  }
  for (const auto& B : st.B) {
    HullGeometry h;
    h.singular_values = singular_spectrum(B);
    if (B.rows() >= 2) {
      const auto vol = effective_log_volume(B);
      h.effective_log_volume = vol.log_volume;
      h.effective_rank = vol.effective_rank;
    }
    out.per_hull.push_back(std::move(h));
  }
  if (deg_max) out.lipschitz_bound = lipschitz_bound(st.s, hp.sigma_max, *deg_max);
  return out;
}

/// Fraction of local-hull singular values below threshold, across all hulls.
inline double near_zero_singular_fraction(const ModelState& st, double threshold = 1e-3) {
  std::size_t total = 0, small = 0;
  for (const auto& B : st.B) {
    const Vector sv = singular_spectrum(B);
    total += static_cast<std::size_t>(sv.size());
    for (double v : sv) small += v < threshold ? 1 : 0;
  }
  return total ? static_cast<double>(small) / static_cast<double>(total) : 0.0;
}

}  // namespace graphhull

#endif  // GRAPHHULL_DIAGNOSTICS_HPP
