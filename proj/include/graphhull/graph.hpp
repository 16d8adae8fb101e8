#ifndef GRAPHHULL_GRAPH_HPP
#define GRAPHHULL_GRAPH_HPP

#include "graphhull/common.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace graphhull {

using Edge = std::pair<int, int>;

inline std::uint64_t pair_key(int i, int j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) | static_cast<std::uint32_t>(j);
}

/// Immutable simple undirected graph. Edges are stored canonically (i < j),
/// deduplicated and sorted; neighbor lists are sorted for O(log d) lookup.
class Graph {
 public:
  Graph() = default;

  /// Builds from arbitrary pairs; canonicalizes and deduplicates. Throws on
  /// self-loops or out-of-range endpoints.
  Graph(int n_nodes, std::vector<Edge> edges, std::vector<std::string> labels = {})
      : n_(n_nodes), labels_(std::move(labels)) {
    if (n_nodes < 0) throw Error("graph: negative node count");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != n_nodes)
      throw Error("graph: label count does not match node count");
    for (auto& [i, j] : edges) {
      if (i < 0 || j < 0 || i >= n_nodes || j >= n_nodes)
        throw Error("graph: edge (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
      if (i == j) throw Error("graph: self-loop at node " + std::to_string(i));
      if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    adj_.assign(static_cast<std::size_t>(n_), {});
    for (const auto& [i, j] : edges_) {
      adj_[i].push_back(j);
      adj_[j].push_back(i);
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
  }

  int n_nodes() const noexcept { return n_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }

  bool has_edge(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= n_ || j >= n_) return false;
    const auto& a = adj_[i];
    const auto& b = adj_[j];
    return a.size() <= b.size() ? std::binary_search(a.begin(), a.end(), j)
                                : std::binary_search(b.begin(), b.end(), i);
  }

  /// Number of unordered pairs i < j.
  std::uint64_t n_pairs() const noexcept {
    const auto n = static_cast<std::uint64_t>(n_);
    return n < 2 ? 0 : n * (n - 1) / 2;
  }
  std::uint64_t n_non_edges() const noexcept { return n_pairs() - edges_.size(); }

  bool has_labels() const noexcept { return !labels_.empty(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::string label(int i) const { return labels_.empty() ? std::to_string(i) : labels_.at(static_cast<std::size_t>(i)); }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.labels_ == b.labels_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::string> labels_;
};

/// Parses a whitespace-separated edge list. Lines starting with '#' are
/// comments, except a "# nodes:" line, which declares node identifiers (and
/// their index order) up front so isolated nodes survive a round trip.
inline Graph load_edge_list(std::istream& in) {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = index.try_emplace(id, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(id);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      constexpr std::string_view kNodes = "# nodes:";
      if (line.compare(first, kNodes.size(), kNodes) == 0) {
        std::istringstream ids(line.substr(first + kNodes.size()));
        std::string id;
        while (ids >> id) intern(id);
      }
      continue;
    }
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a >> b)) throw ParseError(lineno, "expected two node identifiers");
    if (fields >> extra) throw ParseError(lineno, "unexpected third field '" + extra + "'");
    if (a == b) throw ParseError(lineno, "self-loop at node '" + a + "'");
    const int ia = intern(a);
    const int ib = intern(b);
    edges.emplace_back(ia, ib);
  }
  const int n = static_cast<int>(labels.size());
  return Graph(n, std::move(edges), std::move(labels));
}

inline Graph load_edge_list(const std::string& text) {
  std::istringstream in(text);
  return load_edge_list(in);
}

inline std::string serialize_edge_list(const Graph& g) {
  std::ostringstream out;
  out << "# nodes:";
  for (int i = 0; i < g.n_nodes(); ++i) out << ' ' << g.label(i);
  out << '\n';
  for (const auto& [i, j] : g.edges()) out << g.label(i) << ' ' << g.label(j) << '\n';
  return out.str();
}

/// Pair list written with the graph's original identifiers.
inline std::string serialize_pairs(const Graph& g, const std::vector<Edge>& pairs) {
  std::ostringstream out;
  for (const auto& [i, j] : pairs) out << g.label(i) << ' ' << g.label(j) << '\n';
  return out.str();
}

/// Reads a pair list, resolving identifiers through the graph's labels (or as
/// dense integer indices when the graph carries no labels).
inline std::vector<Edge> load_pairs(std::istream& in, const std::vector<std::string>& labels, int n_nodes) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], static_cast<int>(i));
  auto resolve = [&](const std::string& id, std::size_t lineno) -> int {
    if (!labels.empty()) {
      auto it = index.find(id);
      if (it == index.end()) throw ParseError(lineno, "unknown node '" + id + "'");
      return it->second;
    }
    std::size_t pos = 0;
    long v = -1;
    try {
      v = std::stol(id, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != id.size() || v < 0 || v >= n_nodes) throw ParseError(lineno, "node '" + id + "' out of range");
    return static_cast<int>(v);
  };
  std::vector<Edge> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string a, b;
    if (!(fields >> a >> b)) throw ParseError(lineno, "expected two node identifiers");
    pairs.emplace_back(resolve(a, lineno), resolve(b, lineno));
  }
  return pairs;
}

struct DegreeStats {
  std::vector<int> degree;
  int deg_max = 0;
};

inline DegreeStats degrees(const Graph& g) {
  DegreeStats out;
  out.degree.resize(static_cast<std::size_t>(g.n_nodes()));
  for (int i = 0; i < g.n_nodes(); ++i) {
    out.degree[i] = g.degree(i);
    out.deg_max = std::max(out.deg_max, out.degree[i]);
  }
  return out;
}

inline std::vector<int> connected_components(const Graph& g) {
  std::vector<int> comp(static_cast<std::size_t>(g.n_nodes()), -1);
  std::vector<int> stack;
  int next = 0;
  for (int s = 0; s < g.n_nodes(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : g.neighbors(u))
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  return comp;
}

inline bool is_connected(const Graph& g) {
  if (g.n_nodes() == 0) throw Error("is_connected: graph has no nodes");
  const auto comp = connected_components(g);
  return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

struct SplitResult {
  Graph residual;
  std::vector<Edge> test_positives;
  std::vector<Edge> test_negatives;
  std::uint64_t seed = 0;
  double holdout_fraction = 0;
  std::size_t requested = 0;
  std::size_t shortfall = 0;
};

/// Samples `count` distinct pairs i < j absent from g, uniformly.
inline std::vector<Edge> sample_non_edges(const Graph& g, std::size_t count, Rng& rng) {
  if (count > g.n_non_edges())
    throw Error("sample_non_edges: graph has " + std::to_string(g.n_non_edges()) + " non-edges, " +
                std::to_string(count) + " requested");
  std::vector<Edge> out;
  out.reserve(count);
  const int n = g.n_nodes();
  if (count * 2 > g.n_non_edges()) {
    // Dense complement: enumerate and take a uniform prefix of a shuffle.
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!g.has_edge(i, j)) out.emplace_back(i, j);
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(count);
    return out;
  }
  std::unordered_set<std::uint64_t> taken;
  std::uniform_int_distribution<int> pick(0, n - 1);
  while (out.size() < count) {
    int i = pick(rng), j = pick(rng);
    if (i == j || g.has_edge(i, j)) continue;
    if (i > j) std::swap(i, j);
    if (taken.insert(pair_key(i, j)).second) out.emplace_back(i, j);
  }
  return out;
}

/// Link-prediction holdout that keeps the residual graph connected. Edges are
/// visited in seeded random order and removed unless they are a bridge of the
/// current residual; negatives come from the complement of the original graph.
inline SplitResult split_links(const Graph& g, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) throw Error("split_links: holdout fraction must lie in (0, 1)");
  if (g.n_nodes() == 0 || !is_connected(g)) throw Error("split_links: input graph is not connected");

  SplitResult out;
  out.seed = seed;
  out.holdout_fraction = holdout_fraction;
  out.requested = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(g.n_edges())));
  if (out.requested > g.n_non_edges())
    throw Error("split_links: only " + std::to_string(g.n_non_edges()) + " non-edges available for " +
                std::to_string(out.requested) + " negatives");

  Rng rng = make_rng(seed, "split.edges");
  std::vector<Edge> order = g.edges();
  std::shuffle(order.begin(), order.end(), rng);

  const int n = g.n_nodes();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) adj[i] = g.neighbors(i);
  std::unordered_set<std::uint64_t> removed;

  // u and v stay connected without the edge (u, v) iff the edge is not a bridge.
  std::vector<int> mark(static_cast<std::size_t>(n), -1);
  std::vector<int> frontier;
  int stamp = 0;
  auto reachable_without = [&](int u, int v) {
    ++stamp;
    frontier.clear();
    frontier.push_back(u);
    mark[u] = stamp;
    while (!frontier.empty()) {
      const int x = frontier.back();
      frontier.pop_back();
      for (int y : adj[x]) {
        if (mark[y] == stamp) continue;
        if ((x == u && y == v) || (x == v && y == u)) continue;
        if (removed.count(pair_key(x, y))) continue;
        if (y == v) return true;
        mark[y] = stamp;
        frontier.push_back(y);
      }
    }
    return false;
  };

  for (const auto& [u, v] : order) {
    if (out.test_positives.size() == out.requested) break;
    if (!reachable_without(u, v)) continue;
    removed.insert(pair_key(u, v));
    out.test_positives.push_back({u, v});
  }
  out.shortfall = out.requested - out.test_positives.size();

  std::vector<Edge> kept;
  kept.reserve(g.n_edges() - removed.size());
  for (const auto& e : g.edges())
    if (!removed.count(pair_key(e.first, e.second))) kept.push_back(e);
  out.residual = Graph(n, std::move(kept), g.labels());

  Rng neg_rng = make_rng(seed, "split.negatives");
  out.test_negatives = sample_non_edges(g, out.test_positives.size(), neg_rng);
  return out;
}

}  // namespace graphhull

#endif  // GRAPHHULL_GRAPH_HPP
