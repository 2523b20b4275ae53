#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rwlab/error.hpp"
#include "rwlab/format.hpp"
#include "rwlab/rng.hpp"

namespace rwlab {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

// ---------------------------------------------------------------------------
// Family specifications
// ---------------------------------------------------------------------------

struct Torus {
  int d = 1;
  int n = 3;
};
struct Hypercube {
  int n = 1;
};
struct Complete {
  int n = 2;
};
struct Cycle {
  int n = 3;
};
struct RandomRegular {
  int d = 3;
  int n = 4;
  std::uint64_t seed = 0;
};
// Largest open cluster of Bernoulli(p) bond percolation on the box [-n, n]^d.
struct PercolationBall {
  int d = 3;
  int n = 4;
  double p = 0.5;
  std::uint64_t seed = 0;
};
// Cayley graph of S_n generated by all transpositions.
struct SymmetricTranspositions {
  int n = 3;
};
// Anything built from an explicit edge list (fixtures, imported files).
struct Imported {
  std::string name = "imported";
};

using FamilySpec = std::variant<Torus, Hypercube, Complete, Cycle, RandomRegular, PercolationBall,
                                SymmetricTranspositions, Imported>;

using KeyValues = std::map<std::string, std::string>;

inline KeyValues family_to_kv(const FamilySpec& spec) {
  KeyValues kv;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Torus>) {
          kv["family"] = "torus";
          kv["d"] = std::to_string(s.d);
          kv["n"] = std::to_string(s.n);
        } else if constexpr (std::is_same_v<S, Hypercube>) {
          kv["family"] = "hypercube";
          kv["n"] = std::to_string(s.n);
        } else if constexpr (std::is_same_v<S, Complete>) {
          kv["family"] = "complete";
          kv["n"] = std::to_string(s.n);
        } else if constexpr (std::is_same_v<S, Cycle>) {
          kv["family"] = "cycle";
          kv["n"] = std::to_string(s.n);
        } else if constexpr (std::is_same_v<S, RandomRegular>) {
          kv["family"] = "random_regular";
          kv["d"] = std::to_string(s.d);
          kv["n"] = std::to_string(s.n);
          kv["seed"] = std::to_string(s.seed);
        } else if constexpr (std::is_same_v<S, PercolationBall>) {
          kv["family"] = "percolation_ball";
          kv["d"] = std::to_string(s.d);
          kv["n"] = std::to_string(s.n);
          kv["p"] = format_double(s.p);
          kv["seed"] = std::to_string(s.seed);
        } else if constexpr (std::is_same_v<S, SymmetricTranspositions>) {
          kv["family"] = "symmetric_transpositions";
          kv["n"] = std::to_string(s.n);
        } else {
          kv["family"] = "imported";
          kv["name"] = s.name;
        }
      },
      spec);
  return kv;
}

namespace detail {

inline long long kv_int(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(Errc::InvalidSpec, "missing family parameter '" + key + "'");
  try {
    std::size_t pos = 0;
    long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(Errc::InvalidSpec, "family parameter '" + key + "' is not an integer: " + it->second);
  }
}

inline std::uint64_t kv_u64(const KeyValues& kv, const std::string& key, std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    auto v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(Errc::InvalidSpec, "family parameter '" + key + "' is not an unsigned integer");
  }
}

inline double kv_double(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(Errc::InvalidSpec, "missing family parameter '" + key + "'");
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(Errc::InvalidSpec, "family parameter '" + key + "' is not a number: " + it->second);
  }
}

}  // namespace detail

inline FamilySpec family_from_kv(const KeyValues& kv) {
  auto it = kv.find("family");
  if (it == kv.end()) fail(Errc::InvalidSpec, "missing 'family'");
  const std::string& f = it->second;
  auto as_int = [&](const char* k) { return static_cast<int>(detail::kv_int(kv, k)); };
  if (f == "torus") return Torus{as_int("d"), as_int("n")};
  if (f == "hypercube") return Hypercube{as_int("n")};
  if (f == "complete") return Complete{as_int("n")};
  if (f == "cycle") return Cycle{as_int("n")};
  if (f == "random_regular")
    return RandomRegular{as_int("d"), as_int("n"), detail::kv_u64(kv, "seed", 0)};
  if (f == "percolation_ball")
    return PercolationBall{as_int("d"), as_int("n"), detail::kv_double(kv, "p"),
                           detail::kv_u64(kv, "seed", 0)};
  if (f == "symmetric_transpositions") return SymmetricTranspositions{as_int("n")};
  if (f == "imported") {
    auto name = kv.find("name");
    return Imported{name == kv.end() ? std::string("imported") : name->second};
  }
  fail(Errc::InvalidSpec, "unknown family '" + f + "'");
}

inline std::string family_label(const FamilySpec& spec) {
  const KeyValues kv = family_to_kv(spec);
  std::string out = kv.at("family") + "(";
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (k == "family") continue;
    if (!first) out += ",";
    out += k + "=" + v;
    first = false;
  }
  return out + ")";
}

// Cayley-graph families: every vertex looks the same.
inline bool family_is_vertex_transitive(const FamilySpec& spec) {
  return std::holds_alternative<Torus>(spec) || std::holds_alternative<Hypercube>(spec) ||
         std::holds_alternative<Complete>(spec) || std::holds_alternative<Cycle>(spec) ||
         std::holds_alternative<SymmetricTranspositions>(spec);
}

// ---------------------------------------------------------------------------
// GraphTopology
// ---------------------------------------------------------------------------

// Immutable simple undirected graph in CSR form with sorted neighbor lists.
class GraphTopology {
 public:
  // Validates simplicity (no loops, no duplicate edges) and that every vertex
  // has degree >= 1. Connectivity is computed and recorded, not required.
  static GraphTopology from_edges(std::size_t vertex_count, std::span<const Edge> edges,
                                  FamilySpec family) {
    if (vertex_count == 0) fail(Errc::InvalidSpec, "graph must have at least one vertex");
    if (vertex_count > std::numeric_limits<Vertex>::max() / 2)
      fail(Errc::InvalidSpec, "vertex count too large");
    std::vector<std::uint32_t> degree(vertex_count, 0);
    for (const auto& [u, w] : edges) {
      if (u >= vertex_count || w >= vertex_count)
        fail(Errc::InvalidSpec, "edge endpoint out of range");
      if (u == w) fail(Errc::InvalidSpec, "self-loop at vertex " + std::to_string(u));
      ++degree[u];
      ++degree[w];
    }
    GraphTopology g;
    g.family_ = std::move(family);
    g.offsets_.assign(vertex_count + 1, 0);
    for (std::size_t v = 0; v < vertex_count; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
    g.adj_.resize(g.offsets_.back());
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, w] : edges) {
      g.adj_[fill[u]++] = w;
      g.adj_[fill[w]++] = u;
    }
    for (std::size_t v = 0; v < vertex_count; ++v) {
      auto first = g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
      auto last = g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
      std::sort(first, last);
      if (std::adjacent_find(first, last) != last)
        fail(Errc::InvalidSpec, "duplicate edge at vertex " + std::to_string(v));
      if (first == last) fail(Errc::InvalidSpec, "vertex " + std::to_string(v) + " is isolated");
    }
    g.connected_ = g.compute_connected();
    return g;
  }

  std::size_t vertex_count() const noexcept { return offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return adj_.size() / 2; }
  std::size_t total_degree() const noexcept { return adj_.size(); }

  std::span<const Vertex> neighbors(Vertex v) const noexcept {
    return {adj_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(Vertex v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

  // Vertex owning the k-th directed half-edge; used for degree-biased sampling.
  Vertex half_edge_owner(std::size_t k) const noexcept {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
    return static_cast<Vertex>(std::distance(offsets_.begin(), it) - 1);
  }

  bool has_edge(Vertex u, Vertex w) const noexcept {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), w);
  }

  const FamilySpec& family() const noexcept { return family_; }
  bool is_connected() const noexcept { return connected_; }
  bool vertex_transitive() const noexcept { return family_is_vertex_transitive(family_); }

  // Sorted (u < w) edge list.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (Vertex u = 0; u < vertex_count(); ++u)
      for (Vertex w : neighbors(u))
        if (u < w) out.emplace_back(u, w);
    return out;
  }

  bool operator==(const GraphTopology& other) const {
    return offsets_ == other.offsets_ && adj_ == other.adj_;
  }

 private:
  GraphTopology() = default;

  bool compute_connected() const {
    const std::size_t n = vertex_count();
    std::vector<char> seen(n, 0);
    std::vector<Vertex> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      Vertex v = stack.back();
      stack.pop_back();
      for (Vertex w : neighbors(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n;
  }

  std::vector<std::size_t> offsets_;
  std::vector<Vertex> adj_;
  FamilySpec family_;
  bool connected_ = false;
};

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

// Multi-source BFS distances; kUnreachable where no path exists.
inline std::vector<std::uint32_t> bfs_distances(const GraphTopology& g,
                                                std::span<const Vertex> sources,
                                                std::uint32_t max_radius = kUnreachable) {
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreachable);
  std::vector<Vertex> frontier;
  for (Vertex s : sources) {
    if (dist[s] != 0) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  }
  std::vector<Vertex> next;
  for (std::uint32_t level = 0; !frontier.empty() && level < max_radius; ++level) {
    next.clear();
    for (Vertex v : frontier)
      for (Vertex w : g.neighbors(v))
        if (dist[w] == kUnreachable) {
          dist[w] = level + 1;
          next.push_back(w);
        }
    frontier.swap(next);
  }
  return dist;
}

inline std::vector<std::uint32_t> bfs_distances(const GraphTopology& g, Vertex source) {
  const Vertex s[1] = {source};
  return bfs_distances(g, std::span<const Vertex>(s, 1));
}

// Vertices at graph distance <= r from x, sorted.
inline std::vector<Vertex> ball(const GraphTopology& g, Vertex x, std::uint32_t r) {
  const Vertex s[1] = {x};
  auto dist = bfs_distances(g, std::span<const Vertex>(s, 1), r);
  std::vector<Vertex> out;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (dist[v] <= r) out.push_back(v);
  return out;
}

inline std::uint32_t distance(const GraphTopology& g, Vertex x, Vertex y) {
  if (x == y) return 0;
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreachable);
  std::deque<Vertex> queue{x};
  dist[x] = 0;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    for (Vertex w : g.neighbors(v)) {
      if (dist[w] != kUnreachable) continue;
      dist[w] = dist[v] + 1;
      if (w == y) return dist[w];
      queue.push_back(w);
    }
  }
  return kUnreachable;
}

inline std::uint32_t eccentricity(const GraphTopology& g, Vertex x) {
  auto dist = bfs_distances(g, x);
  return *std::max_element(dist.begin(), dist.end());
}

inline std::uint32_t diameter(const GraphTopology& g) {
  std::uint32_t best = 0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) best = std::max(best, eccentricity(g, v));
  return best;
}

struct DegreeStats {
  std::size_t max_degree = 0;
  std::size_t min_degree = 0;
  double ratio = 1.0;
};

inline DegreeStats degree_stats(const GraphTopology& g) {
  DegreeStats s;
  s.min_degree = std::numeric_limits<std::size_t>::max();
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    s.max_degree = std::max(s.max_degree, g.degree(v));
    s.min_degree = std::min(s.min_degree, g.degree(v));
  }
  s.ratio = static_cast<double>(s.max_degree) / static_cast<double>(s.min_degree);
  return s;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

inline constexpr int kGeneratorRetryCap = 1000;
inline constexpr std::size_t kPercolationMinCluster = 10;

namespace detail {

inline std::size_t checked_pow(std::size_t base, int exp, std::size_t cap) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > cap / base) fail(Errc::InvalidSpec, "graph too large");
    out *= base;
  }
  return out;
}

inline constexpr std::size_t kMaxGeneratedVertices = std::size_t{1} << 26;

inline GraphTopology make_torus(const Torus& s) {
  if (s.d < 1 || s.n < 3) fail(Errc::InvalidSpec, "torus needs d >= 1 and n >= 3");
  const std::size_t n = static_cast<std::size_t>(s.n);
  const std::size_t count = checked_pow(n, s.d, kMaxGeneratedVertices);
  std::vector<Edge> edges;
  edges.reserve(count * static_cast<std::size_t>(s.d));
  std::size_t stride = 1;
  // Row-major: the last coordinate varies fastest.
  for (int axis = s.d - 1; axis >= 0; --axis) {
    for (std::size_t v = 0; v < count; ++v) {
      const std::size_t c = (v / stride) % n;
      const std::size_t w = c + 1 == n ? v - c * stride : v + stride;
      edges.emplace_back(static_cast<Vertex>(std::min(v, w)), static_cast<Vertex>(std::max(v, w)));
    }
    stride *= n;
  }
  return GraphTopology::from_edges(count, edges, s);
}

inline GraphTopology make_hypercube(const Hypercube& s) {
  if (s.n < 1 || s.n > 26) fail(Errc::InvalidSpec, "hypercube needs 1 <= n <= 26");
  const std::size_t count = std::size_t{1} << s.n;
  std::vector<Edge> edges;
  for (std::size_t v = 0; v < count; ++v)
    for (int b = 0; b < s.n; ++b) {
      const std::size_t w = v ^ (std::size_t{1} << b);
      if (v < w) edges.emplace_back(static_cast<Vertex>(v), static_cast<Vertex>(w));
    }
  return GraphTopology::from_edges(count, edges, s);
}

inline GraphTopology make_complete(const Complete& s) {
  if (s.n < 2 || s.n > 65536) fail(Errc::InvalidSpec, "complete graph needs 2 <= n <= 65536");
  std::vector<Edge> edges;
  for (int u = 0; u < s.n; ++u)
    for (int w = u + 1; w < s.n; ++w) edges.emplace_back(u, w);
  return GraphTopology::from_edges(static_cast<std::size_t>(s.n), edges, s);
}

inline GraphTopology make_cycle(const Cycle& s) {
  if (s.n < 3) fail(Errc::InvalidSpec, "cycle needs n >= 3");
  std::vector<Edge> edges;
  for (int v = 0; v + 1 < s.n; ++v) edges.emplace_back(v, v + 1);
  edges.emplace_back(0, s.n - 1);
  return GraphTopology::from_edges(static_cast<std::size_t>(s.n), edges, s);
}

inline GraphTopology make_random_regular(const RandomRegular& s) {
  if (s.d < 1 || s.n < 2 || s.d >= s.n || (static_cast<long long>(s.d) * s.n) % 2 != 0)
    fail(Errc::InvalidSpec, "random regular needs 1 <= d < n and d*n even");
  const std::size_t n = static_cast<std::size_t>(s.n);
  const std::size_t d = static_cast<std::size_t>(s.d);
  std::vector<Vertex> points(n * d);
  for (int attempt = 0; attempt < kGeneratorRetryCap; ++attempt) {
    Rng rng(s.seed, static_cast<std::uint64_t>(attempt));
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = static_cast<Vertex>(i / d);
    for (std::size_t i = points.size() - 1; i > 0; --i)
      std::swap(points[i], points[rng.below(i + 1)]);
    std::vector<Edge> edges;
    edges.reserve(points.size() / 2);
    bool ok = true;
    for (std::size_t i = 0; i < points.size(); i += 2) {
      Vertex u = points[i], w = points[i + 1];
      if (u == w) {
        ok = false;
        break;
      }
      edges.emplace_back(std::min(u, w), std::max(u, w));
    }
    if (!ok) continue;
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) continue;
    GraphTopology g = GraphTopology::from_edges(n, edges, s);
    if (g.is_connected()) return g;
  }
  fail(Errc::RetryExhausted, "no simple connected " + std::to_string(s.d) + "-regular graph after " +
                                 std::to_string(kGeneratorRetryCap) + " pairings");
}

}  // namespace detail

// Open bonds of one percolation attempt on the box [-n, n]^d (box coordinates
// shifted to [0, 2n]; box vertices numbered row-major). Bonds are drawn in
// vertex order, and per vertex in axis order, toward the +1 neighbor.
inline std::vector<Edge> percolation_bonds(const PercolationBall& s, int attempt) {
  const std::size_t side = static_cast<std::size_t>(2 * s.n + 1);
  const std::size_t count = detail::checked_pow(side, s.d, detail::kMaxGeneratedVertices);
  Rng rng(s.seed, static_cast<std::uint64_t>(attempt));
  std::vector<Edge> open;
  for (std::size_t v = 0; v < count; ++v) {
    std::size_t stride = detail::checked_pow(side, s.d - 1, count);
    for (int axis = 0; axis < s.d; ++axis) {
      const std::size_t c = (v / stride) % side;
      if (c + 1 < side && rng.bernoulli(s.p))
        open.emplace_back(static_cast<Vertex>(v), static_cast<Vertex>(v + stride));
      stride /= side;
    }
  }
  return open;
}

namespace detail {

inline GraphTopology make_percolation(const PercolationBall& s) {
  if (s.d < 1 || s.n < 1 || !(s.p > 0.0 && s.p <= 1.0))
    fail(Errc::InvalidSpec, "percolation needs d >= 1, n >= 1, 0 < p <= 1");
  const std::size_t side = static_cast<std::size_t>(2 * s.n + 1);
  const std::size_t count = checked_pow(side, s.d, kMaxGeneratedVertices);
  for (int attempt = 0; attempt < kGeneratorRetryCap; ++attempt) {
    const auto open = percolation_bonds(s, attempt);
    std::vector<std::vector<Vertex>> adj(count);
    for (const auto& [u, w] : open) {
      adj[u].push_back(w);
      adj[w].push_back(u);
    }
    // Label clusters by BFS in vertex order; the first cluster reaching the
    // maximum size wins ties, i.e. the one containing the smallest vertex.
    std::vector<std::uint32_t> label(count, kUnreachable);
    std::uint32_t best_label = kUnreachable;
    std::size_t best_size = 0;
    std::uint32_t next_label = 0;
    std::vector<Vertex> stack;
    for (std::size_t v0 = 0; v0 < count; ++v0) {
      if (label[v0] != kUnreachable) continue;
      std::size_t size = 0;
      stack.assign(1, static_cast<Vertex>(v0));
      label[v0] = next_label;
      while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        ++size;
        for (Vertex w : adj[v])
          if (label[w] == kUnreachable) {
            label[w] = next_label;
            stack.push_back(w);
          }
      }
      if (size > best_size) {
        best_size = size;
        best_label = next_label;
      }
      ++next_label;
    }
    if (best_size < kPercolationMinCluster) continue;
    std::vector<Vertex> relabel(count, static_cast<Vertex>(kUnreachable));
    Vertex k = 0;
    for (std::size_t v = 0; v < count; ++v)
      if (label[v] == best_label) relabel[v] = k++;
    std::vector<Edge> edges;
    for (const auto& [u, w] : open)
      if (label[u] == best_label) edges.emplace_back(relabel[u], relabel[w]);
    return GraphTopology::from_edges(best_size, edges, s);
  }
  fail(Errc::RetryExhausted, "percolation cluster smaller than " +
                                 std::to_string(kPercolationMinCluster) + " in every attempt");
}

inline GraphTopology make_symmetric(const SymmetricTranspositions& s) {
  if (s.n < 2 || s.n > 6) fail(Errc::InvalidSpec, "symmetric transpositions needs 2 <= n <= 6");
  std::vector<int> perm(static_cast<std::size_t>(s.n));
  std::iota(perm.begin(), perm.end(), 0);
  std::map<std::vector<int>, Vertex> rank;
  std::vector<std::vector<int>> perms;
  do {
    rank.emplace(perm, static_cast<Vertex>(perms.size()));
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<Edge> edges;
  for (Vertex v = 0; v < perms.size(); ++v)
    for (int i = 0; i < s.n; ++i)
      for (int j = i + 1; j < s.n; ++j) {
        auto q = perms[v];
        std::swap(q[static_cast<std::size_t>(i)], q[static_cast<std::size_t>(j)]);
        Vertex w = rank.at(q);
        if (v < w) edges.emplace_back(v, w);
      }
  return GraphTopology::from_edges(perms.size(), edges, s);
}

}  // namespace detail

inline GraphTopology generate(const FamilySpec& spec) {
  return std::visit(
      [](const auto& s) -> GraphTopology {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Torus>) return detail::make_torus(s);
        else if constexpr (std::is_same_v<S, Hypercube>) return detail::make_hypercube(s);
        else if constexpr (std::is_same_v<S, Complete>) return detail::make_complete(s);
        else if constexpr (std::is_same_v<S, Cycle>) return detail::make_cycle(s);
        else if constexpr (std::is_same_v<S, RandomRegular>) return detail::make_random_regular(s);
        else if constexpr (std::is_same_v<S, PercolationBall>) return detail::make_percolation(s);
        else if constexpr (std::is_same_v<S, SymmetricTranspositions>) return detail::make_symmetric(s);
        else fail(Errc::InvalidSpec, "imported graphs cannot be generated; load them from an edge list");
      },
      spec);
}

// ---------------------------------------------------------------------------
// Edge-list format: "v <count>" then sorted "u w" lines (u < w).
// Metadata sidecar: one "key=value" per line.
// ---------------------------------------------------------------------------

inline void write_edge_list(std::ostream& os, const GraphTopology& g) {
  os << "v " << g.vertex_count() << '\n';
  for (const auto& [u, w] : g.edges()) os << u << ' ' << w << '\n';
}

inline void write_metadata(std::ostream& os, const GraphTopology& g) {
  for (const auto& [k, v] : family_to_kv(g.family())) os << k << '=' << v << '\n';
}

inline KeyValues read_metadata(std::istream& is) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::InvalidSpec, "metadata line " + std::to_string(lineno) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline GraphTopology read_edge_list(std::istream& is, FamilySpec family = Imported{}) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "v")
    fail(Errc::InvalidSpec, "edge list must start with 'v <count>'");
  std::vector<Edge> edges;
  long long u = 0, w = 0;
  while (is >> u >> w) {
    if (u < 0 || w < 0) fail(Errc::InvalidSpec, "negative vertex id in edge list");
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(w));
  }
  if (!is.eof()) fail(Errc::InvalidSpec, "malformed edge line");
  return GraphTopology::from_edges(count, edges, std::move(family));
}

}  // namespace rwlab
