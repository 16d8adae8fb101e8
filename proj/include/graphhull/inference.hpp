#ifndef GRAPHHULL_INFERENCE_HPP
#define GRAPHHULL_INFERENCE_HPP

#include "graphhull/common.hpp"
#include "graphhull/curvature.hpp"
#include "graphhull/diagnostics.hpp"
#include "graphhull/gradient.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/objective.hpp"
#include "graphhull/parameterization.hpp"

#include <string>
#include <vector>

namespace graphhull {

struct SpectralConfig {
  double logit_strength = 2.0;  // m_logits value on the assigned cluster
  int kmeans_restarts = 4;
  int kmeans_iterations = 100;
  int dense_limit = 4000;  // above this node count use subspace iteration
  int max_subspace_iterations = 20000;
};

/// Top-`count` eigenpairs (largest algebraic) of D^{-1/2} A D^{-1/2}.
inline Matrix normalized_adjacency_eigenvectors(const Graph& g, int count, const SpectralConfig& cfg = {}) {
  const int N = g.n_nodes();
  count = std::min(count, N);
  Vector inv_sqrt(N);
  for (int i = 0; i < N; ++i) inv_sqrt[i] = g.degree(i) > 0 ? 1.0 / std::sqrt(static_cast<double>(g.degree(i))) : 0.0;

  if (N <= cfg.dense_limit) {
    Matrix S = Matrix::Zero(N, N);
    for (const auto& [i, j] : g.edges()) S(i, j) = S(j, i) = inv_sqrt[i] * inv_sqrt[j];
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    if (eig.info() != Eigen::Success) throw Error("spectral_init: dense eigensolver failed to converge");
    return eig.eigenvectors().rightCols(count).rowwise().reverse();
  }

  // Subspace iteration on (S + I) / 2, whose spectrum lies in [0, 1].
  const int block = std::min(N, count + 8);
  auto apply = [&](const Matrix& X) {
    Matrix Y = 0.5 * X;
    for (const auto& [i, j] : g.edges()) {
      const double w = 0.5 * inv_sqrt[i] * inv_sqrt[j];
      Y.row(i) += w * X.row(j);
      Y.row(j) += w * X.row(i);
    }
    return Y;
  };
  Rng rng = make_rng(0, "spectral.subspace");
  Matrix X = Eigen::HouseholderQR<Matrix>(standard_normal(rng, N, block)).householderQ() * Matrix::Identity(N, block);
  for (int it = 1; it <= cfg.max_subspace_iterations; ++it) {
    const Matrix Y = apply(X);
    X = Eigen::HouseholderQR<Matrix>(Y).householderQ() * Matrix::Identity(N, block);
    if (it % 10 != 0) continue;
    // Rayleigh-Ritz and residual check on the leading `count` vectors.
    const Matrix H = X.transpose() * apply(X);
    Eigen::SelfAdjointEigenSolver<Matrix> small(H);
    const Matrix V = X * small.eigenvectors().rowwise().reverse();
    const Vector lambda = small.eigenvalues().reverse();
    const Matrix R = apply(V.leftCols(count)) - V.leftCols(count) * lambda.head(count).asDiagonal();
    X = V;
    if (R.colwise().norm().maxCoeff() < 1e-8) return V.leftCols(count);
  }
  throw Error("spectral_init: subspace iteration did not converge after " + std::to_string(cfg.max_subspace_iterations) +
              " iterations");
}

/// Seeded k-means++ / Lloyd with restarts; returns labels of the lowest-inertia run.
inline std::vector<int> kmeans(const Matrix& X, int K, std::uint64_t seed, int restarts = 4, int iterations = 100) {
  const auto N = X.rows();
  if (N == 0) return {};
  K = static_cast<int>(std::min<Eigen::Index>(K, N));
  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < restarts; ++run) {
    Rng rng = make_rng(seed, "kmeans", static_cast<std::uint64_t>(run));
    Matrix C(K, X.cols());
    C.row(0) = X.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(N)));
    Vector d2 = (X.rowwise() - C.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < K; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0) {
        double u = uniform_open(rng) * total;
        while (pick < N - 1 && u >= d2[pick]) u -= d2[pick++];
      } else {
        pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(N));
      }
      C.row(c) = X.row(pick);
      d2 = d2.cwiseMin((X.rowwise() - C.row(c)).rowwise().squaredNorm());
    }
    std::vector<int> labels(static_cast<std::size_t>(N), -1);
    double inertia = 0;
    for (int it = 0; it < iterations; ++it) {
      bool changed = false;
      inertia = 0;
      for (Eigen::Index i = 0; i < N; ++i) {
        int arg = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < K; ++c) {
          const double d = (X.row(i) - C.row(c)).squaredNorm();
          if (d < best) {
            best = d;
            arg = c;
          }
        }
        inertia += best;
        if (labels[i] != arg) {
          labels[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Matrix sums = Matrix::Zero(K, X.cols());
      std::vector<int> counts(static_cast<std::size_t>(K), 0);
      for (Eigen::Index i = 0; i < N; ++i) {
        sums.row(labels[i]) += X.row(i);
        ++counts[labels[i]];
      }
      for (int c = 0; c < K; ++c)
        if (counts[c] > 0) C.row(c) = sums.row(c) / counts[c];
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

/// Deterministic initialization from the normalized-adjacency spectrum: k-means
/// on row-normalized leading eigenvectors seeds the hull logits, geometry
/// starts at the midpoint of every box, and biases follow log-degree.
inline ModelParams spectral_init(const Graph& g, const Hyperparams& hp, std::uint64_t seed, const SpectralConfig& cfg = {}) {
  hp.validate();
  const int N = g.n_nodes();
  if (N == 0) throw Error("spectral_init: empty graph");
  if (!is_connected(g)) throw Error("spectral_init: graph is not connected");
  ModelParams p = ModelParams::zeros(N, hp.K, hp.D);
  // Non-anchor row r leans toward its own slot; identical rows would make B_k singular.
  for (auto& q : p.q_raw) q = Matrix::Identity(hp.K - 1, hp.K - 1);

  Matrix vecs = normalized_adjacency_eigenvectors(g, hp.D, cfg);
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
    const double norm = vecs.row(i).norm();
    if (norm > 0) vecs.row(i) /= norm;
  }
  const auto labels = kmeans(vecs, hp.K, seed, cfg.kmeans_restarts, cfg.kmeans_iterations);
  for (int i = 0; i < N; ++i) p.m_logits(i, labels[i]) = cfg.logit_strength;

  double mean = 0;
  for (int i = 0; i < N; ++i) {
    p.g[i] = std::log(g.degree(i) + 1.0);
    mean += p.g[i];
  }
  p.g.array() -= mean / N;
  return p;
}

struct FitConfig {
  double learning_rate = 0.02;
  int epochs = 500;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t neg_samples = 0;  // 0 means |E|
  bool exhaustive = false;      // exact non-edge term every epoch
  bool gumbel_noise = true;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;  // relative objective change over `window` epochs
  int window = 20;
  SpectralConfig spectral;

  void validate() const {
    if (!(learning_rate > 0)) throw Error("fit: learning rate must be positive");
    if (epochs < 0) throw Error("fit: epochs must be non-negative");
  }
};

struct FitReport {
  std::vector<double> objective_trace;
  ModelState final_state;
  ModelParams final_params;
  ObjectiveBreakdown final_objective;  // last evaluated epoch
  GeometryReport diagnostics;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  bool converged = false;
  std::string status = "ok";
};

/// Exponential temperature decay from start (epoch 0) to end (last epoch).
inline double gs_temperature(const Hyperparams& hp, int epoch, int epochs) {
  if (epochs <= 1) return hp.gs_temp_start;
  const double frac = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return hp.gs_temp_start * std::pow(hp.gs_temp_end / hp.gs_temp_start, frac);
}

class Adam {
 public:
  Adam(std::size_t n, double lr, double b1, double b2, double eps)
      : m_(Vector::Zero(static_cast<Eigen::Index>(n))), v_(m_), lr_(lr), b1_(b1), b2_(b2), eps_(eps) {}

  /// Ascent step on x along gradient g.
  void step(Vector& x, const Vector& g) {
    ++t_;
    m_ = b1_ * m_ + (1 - b1_) * g;
    v_ = b2_ * v_ + (1 - b2_) * g.cwiseAbs2();
    const double c1 = 1 - std::pow(b1_, t_);
    const double c2 = 1 - std::pow(b2_, t_);
    x.array() += lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  Vector m_, v_;
  double lr_, b1_, b2_, eps_;
  int t_ = 0;
};

/// MAP fit by Adam ascent from the spectral initialization. Each epoch draws a
/// fresh non-edge subsample and Gumbel noise from per-epoch seed streams.
inline FitReport fit(const Graph& g, const Hyperparams& hp, const FitConfig& cfg) {
  hp.validate();
  cfg.validate();
  FitReport rep;
  rep.seed = cfg.seed;
  ModelParams params = spectral_init(g, hp, cfg.seed, cfg.spectral);
  Vector x = params.flatten();
  Adam adam(static_cast<std::size_t>(x.size()), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  const std::size_t m = cfg.neg_samples > 0 ? cfg.neg_samples : std::max<std::size_t>(1, g.n_edges());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double temp = gs_temperature(hp, epoch, cfg.epochs);
    Matrix noise;
    if (cfg.gumbel_noise) {
      Rng rng = make_rng(cfg.seed, "fit.gumbel", static_cast<std::uint64_t>(epoch));
      noise = gumbel_noise(rng, g.n_nodes(), hp.K);
    }
    ObjectiveConfig ocfg;
    ocfg.exhaustive = cfg.exhaustive;
    ocfg.subsample = {m, stream_seed(cfg.seed, "fit.subsample", static_cast<std::uint64_t>(epoch))};
    ocfg.assignment = AssignmentSpec::relaxed(temp, std::move(noise));

    GradientResult res;
    try {
      res = gradient(g, params, hp, ocfg);
    } catch (const Error& e) {
      rep.status = "aborted at epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    if (!std::isfinite(res.objective.total)) {
      rep.status = "aborted at epoch " + std::to_string(epoch) + ": non-finite objective";
      break;
    }
    rep.objective_trace.push_back(res.objective.total);
    rep.final_objective = res.objective;
    rep.epochs_run = epoch + 1;

    const Vector grad = res.grad.flatten();
    Vector next = x;
    adam.step(next, grad);
    if (!next.allFinite()) {
      rep.status = "aborted at epoch " + std::to_string(epoch) + ": non-finite parameter update";
      break;
    }
    x = std::move(next);
    params.assign(x);

    const auto& tr = rep.objective_trace;
    if (cfg.window > 0 && static_cast<int>(tr.size()) > cfg.window) {
      const double prev = tr[tr.size() - 1 - static_cast<std::size_t>(cfg.window)];
      if (std::abs(tr.back() - prev) <= cfg.tolerance * std::max(std::abs(prev), 1e-300)) {
        rep.converged = true;
        break;
      }
    }
  }

  rep.final_params = params;
  rep.final_state = assemble_state(params, hp, AssignmentSpec::hard());
  rep.diagnostics = geometry_report(rep.final_state, hp, degrees(g).deg_max);
  return rep;
}

}  // namespace graphhull

#endif  // GRAPHHULL_INFERENCE_HPP
