#ifndef GRAPHHULL_EVALUATION_HPP
#define GRAPHHULL_EVALUATION_HPP

#include "graphhull/common.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/parameterization.hpp"

#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <vector>

namespace graphhull {

struct MetricsReport {
  double auc_roc = 0;
  double auc_pr = 0;
  std::optional<double> nmi;
  std::optional<double> ari;
  std::size_t n_test_pairs = 0;
};

/// Edge probabilities logistic(eta_ij) read directly off the model.
inline std::vector<double> link_scores(const ModelState& st, const std::vector<Edge>& pairs) {
  const int N = st.n_nodes();
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= N || j >= N)
      throw Error("link_scores: pair (" + std::to_string(i) + ", " + std::to_string(j) + ") outside model range [0, " +
                  std::to_string(N) + ")");
    out.push_back(logistic(st.s * st.Z.row(i).dot(st.Z.row(j)) + (st.g[i] + st.g[j])));
  }
  return out;
}

namespace detail {
inline void check_binary(const std::vector<double>& scores, const std::vector<int>& labels, std::size_t& pos,
                         std::size_t& neg) {
  if (scores.size() != labels.size()) throw Error("auc: scores and labels differ in length");
  pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
  neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error("auc: both classes must be present");
}
}  // namespace detail

/// Area under the ROC curve via the Mann-Whitney rank statistic (ties count 1/2).
inline double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::size_t pos = 0, neg = 0;
  detail::check_binary(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && scores[order[hi + 1]] == scores[order[lo]]) ++hi;
    const double avg_rank = 0.5 * static_cast<double>(lo + hi) + 1.0;
    for (std::size_t k = lo; k <= hi; ++k)
      if (labels[order[k]]) rank_sum += avg_rank;
    lo = hi + 1;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1) / 2) / (p * n);
}

/// Area under the precision-recall curve by step integration: sum over
/// distinct score thresholds of (recall gain) x (precision at that threshold).
inline double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::size_t pos = 0, neg = 0;
  detail::check_binary(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double area = 0, prev_recall = 0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && scores[order[hi + 1]] == scores[order[lo]]) ++hi;
    for (std::size_t k = lo; k <= hi; ++k) tp += labels[order[k]] ? 1 : 0;
    seen = hi + 1;
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    lo = hi + 1;
  }
  return area;
}

namespace detail {
struct Contingency {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> a, b;
  double n = 0;
};

inline Contingency contingency(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw Error("partition metrics: label vectors differ in length");
  if (pred.empty()) throw Error("partition metrics: empty label vectors");
  Contingency c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    c.joint[{pred[i], truth[i]}] += 1;
    c.a[pred[i]] += 1;
    c.b[truth[i]] += 1;
  }
  c.n = static_cast<double>(pred.size());
  return c;
}

inline double entropy(const std::map<int, double>& counts, double n) {
  double h = 0;
  for (const auto& [_, v] : counts) h -= (v / n) * std::log(v / n);
  return h;
}
}  // namespace detail

/// Normalized mutual information, arithmetic-mean normalization.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto c = detail::contingency(pred, truth);
  const double ha = detail::entropy(c.a, c.n), hb = detail::entropy(c.b, c.n);
  if (ha == 0 && hb == 0) return 1.0;  // both partitions trivial and hence identical
  double mi = 0;
  for (const auto& [key, v] : c.joint) {
    const double pa = c.a.at(key.first) / c.n, pb = c.b.at(key.second) / c.n, pab = v / c.n;
    mi += pab * std::log(pab / (pa * pb));
  }
  const double denom = 0.5 * (ha + hb);
  return std::clamp(mi / denom, 0.0, 1.0);
}

/// Adjusted Rand index (Hubert-Arabie expected-index correction).
inline double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto c = detail::contingency(pred, truth);
  auto comb2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [_, v] : c.joint) index += comb2(v);
  for (const auto& [_, v] : c.a) sa += comb2(v);
  for (const auto& [_, v] : c.b) sb += comb2(v);
  const double expected = sa * sb / comb2(c.n);
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;  // degenerate: both partitions trivial in the same way
  return (index - expected) / (max_index - expected);
}

/// Node order for block-structured adjacency plots: by hull, then by dominant
/// prototype within the hull, then by node id.
inline std::vector<int> reorder_adjacency(const Graph& g, const ModelState& st) {
  if (g.n_nodes() != st.n_nodes()) throw Error("reorder_adjacency: graph and state node counts differ");
  const auto dominant = harden(st.Omega);
  std::vector<int> perm(static_cast<std::size_t>(st.n_nodes()));
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    return std::tie(st.assignments[a], dominant[a], a) < std::tie(st.assignments[b], dominant[b], b);
  });
  return perm;
}

struct PcaProjection {
  Matrix coords;               // M x dims
  Vector explained_variance;   // top `dims` covariance eigenvalues, descending
  Matrix components;           // D x dims principal directions
};

/// Projection onto the top principal directions. Each direction's sign is
/// fixed so its largest-magnitude loading is positive.
inline PcaProjection pca_project(const Matrix& points, int dims = 2) {
  if (points.rows() < 2) throw Error("pca_project: need at least two points");
  dims = std::min<int>(dims, static_cast<int>(points.cols()));
  const Matrix centered = points.rowwise() - points.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(points.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  PcaProjection out;
  out.components = eig.eigenvectors().rightCols(dims).rowwise().reverse();
  out.explained_variance = eig.eigenvalues().tail(dims).reverse().cwiseMax(0.0);
  for (int c = 0; c < dims; ++c) {
    Eigen::Index arg = 0;
    out.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.components(arg, c) < 0) out.components.col(c) *= -1.0;
  }
  out.coords = centered * out.components;
  return out;
}

struct CircularLayout {
  Matrix positions;  // N x 2
  Matrix anchors;    // K x 2, prototype r at angle 2 pi r / K
};

inline CircularLayout circular_membership_layout(const Matrix& Omega, const std::vector<int>& assignments = {}) {
  if (!assignments.empty() && static_cast<Eigen::Index>(assignments.size()) != Omega.rows())
    throw Error("circular_membership_layout: assignment count differs from Omega rows");
  const auto K = Omega.cols();
  CircularLayout out;
  out.anchors.resize(K, 2);
  for (Eigen::Index r = 0; r < K; ++r) {
    const double angle = 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(K);
    out.anchors(r, 0) = std::cos(angle);
    out.anchors(r, 1) = std::sin(angle);
  }
  out.positions = Omega * out.anchors;
  return out;
}

}  // namespace graphhull

#endif  // GRAPHHULL_EVALUATION_HPP
