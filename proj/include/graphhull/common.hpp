#ifndef GRAPHHULL_COMMON_HPP
#define GRAPHHULL_COMMON_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace graphhull {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using NodeId = std::int64_t;
using Rng = std::mt19937_64;

inline constexpr const char* kVersion = "0.3.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline void softmax_inplace(Eigen::Ref<Vector> v) {
  const double m = v.maxCoeff();
  v = (v.array() - m).exp();
  v /= v.sum();
}

inline Vector softmax(const Eigen::Ref<const Vector>& v) {
  Vector out = v;
  softmax_inplace(out);
  return out;
}

// Backprop through y = softmax(x): returns dx given dy.
inline Vector softmax_backward(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& dy) {
  return y.cwiseProduct(dy.array().matrix() - Vector::Constant(y.size(), y.dot(dy)));
}

/// SplitMix64 finalizer. Used to derive independent, named RNG streams from a
/// single user seed and as a counter-based hash for per-pair sampling.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(seed ^ h) + index);
}

inline Rng make_rng(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  return Rng(stream_seed(seed, name, index));
}

// Uniform double in (0, 1) from 53 random bits; never returns 0 or 1.
inline double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

inline double uniform_open(Rng& rng) { return unit_open(rng()); }

inline double standard_gumbel(Rng& rng) { return -std::log(-std::log(uniform_open(rng))); }

inline Vector sample_dirichlet(Rng& rng, const Vector& alpha) {
  Vector out(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    std::gamma_distribution<double> gamma(alpha[k], 1.0);
    out[k] = gamma(rng);
  }
  const double total = out.sum();
  if (!(total > 0)) {
    // All gammas underflowed (tiny alpha): fall back to a uniform vertex pick.
    out.setZero();
    out[static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(alpha.size()))] = 1.0;
    return out;
  }
  return out / total;
}

inline Matrix standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

/// Worker count for internal parallel loops, capped by GRAPHHULL_THREADS.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRAPHHULL_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(chunk) for chunk in [0, n_chunks) on up to thread_count() threads.
/// Callers reduce per-chunk results in chunk order, so results do not depend
/// on the number of threads.
inline void for_each_chunk(std::size_t n_chunks, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < n_chunks; c += workers) body(c);
    });
  for (auto& t : pool) t.join();
}

}  // namespace graphhull

#endif  // GRAPHHULL_COMMON_HPP
