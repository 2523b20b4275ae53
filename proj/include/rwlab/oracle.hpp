#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rwlab/error.hpp"
#include "rwlab/format.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Numerical tolerances for the exact computations, kept in one place.
struct OracleTolerances {
  static constexpr double row_sum = 1e-10;
  static constexpr double stationarity = 1e-10;
  static constexpr double return_time = 1e-8;
  static constexpr double inequality_slack = 1e-12;
};

inline constexpr std::size_t kDenseCap = 4096;
inline constexpr std::size_t kPowerIterationLimit = 10'000'000;

inline void require_dense(const GraphTopology& g, std::size_t cap = kDenseCap) {
  if (g.vertex_count() > cap)
    fail(Errc::CapExceeded, "exact oracle limited to " + std::to_string(cap) + " vertices, graph has " +
                                std::to_string(g.vertex_count()));
}

inline Vector stationary_distribution(const GraphTopology& g) {
  Vector pi(static_cast<Eigen::Index>(g.vertex_count()));
  const double total = static_cast<double>(g.total_degree());
  for (Vertex v = 0; v < g.vertex_count(); ++v) pi[v] = static_cast<double>(g.degree(v)) / total;
  return pi;
}

inline Matrix transition_matrix(const GraphTopology& g) {
  require_dense(g);
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  Matrix P = Matrix::Zero(n, n);
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    P(x, x) = 0.5;
    const double w = 0.5 / static_cast<double>(g.degree(x));
    for (Vertex y : g.neighbors(x)) P(x, y) = w;
  }
  return P;
}

// Iterates P^t, starting from P^0 = I. Each step is a sparse right
// multiplication done column by column: (P^t P)(., y) = P^t(., y)/2 +
// sum_{z ~ y} P^t(., z) / (2 deg z).
class PowerIterator {
 public:
  explicit PowerIterator(const GraphTopology& g) : g_(&g), pi_(stationary_distribution(g)) {
    require_dense(g);
    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    cur_ = Matrix::Identity(n, n);
    next_.resize(n, n);
    inv_two_deg_.resize(g.vertex_count());
    for (Vertex v = 0; v < g.vertex_count(); ++v)
      inv_two_deg_[v] = 0.5 / static_cast<double>(g.degree(v));
  }

  std::size_t time() const noexcept { return t_; }
  const Matrix& power() const noexcept { return cur_; }
  const Vector& stationary() const noexcept { return pi_; }

  void advance() {
    for (Vertex y = 0; y < g_->vertex_count(); ++y) {
      auto col = next_.col(y);
      col = 0.5 * cur_.col(y);
      for (Vertex z : g_->neighbors(y)) col += inv_two_deg_[z] * cur_.col(z);
    }
    cur_.swap(next_);
    ++t_;
  }

  // max_x ||p^t(x, .) - pi||_TV
  double worst_tv() const {
    Vector acc = Vector::Zero(cur_.rows());
    for (Eigen::Index y = 0; y < cur_.cols(); ++y) acc += (cur_.col(y).array() - pi_[y]).abs().matrix();
    return 0.5 * acc.maxCoeff();
  }

  // max_{x,y} |p^t(x,y)/pi(y) - 1|
  double worst_uniform() const {
    double best = 0.0;
    for (Eigen::Index y = 0; y < cur_.cols(); ++y)
      best = std::max(best, (cur_.col(y).array() / pi_[y] - 1.0).abs().maxCoeff());
    return best;
  }

  // max_{x,y} p^t(x,y)/pi(y)
  double max_ratio() const {
    double best = 0.0;
    for (Eigen::Index y = 0; y < cur_.cols(); ++y)
      best = std::max(best, cur_.col(y).maxCoeff() / pi_[y]);
    return best;
  }

  double max_row_sum_error() const {
    return (cur_.rowwise().sum().array() - 1.0).abs().maxCoeff();
  }

 private:
  const GraphTopology* g_;
  Vector pi_;
  Matrix cur_, next_;
  std::vector<double> inv_two_deg_;
  std::size_t t_ = 0;
};

namespace detail {

template <typename Done>
std::size_t first_time(const GraphTopology& g, Done done) {
  PowerIterator it(g);
  while (!done(it)) {
    if (it.time() >= kPowerIterationLimit)
      fail(Errc::HorizonExceeded, "power iteration did not reach the threshold");
    it.advance();
  }
  return it.time();
}

}  // namespace detail

inline std::size_t mixing_time(const GraphTopology& g, double eps = 0.25) {
  return detail::first_time(g, [eps](const PowerIterator& it) { return it.worst_tv() <= eps; });
}

inline std::size_t uniform_mixing_time(const GraphTopology& g, double eps = 0.25) {
  return detail::first_time(g,
                            [eps](const PowerIterator& it) { return it.worst_uniform() <= eps; });
}

// Worst-start distances for t = 0..t_max.
struct DistanceCurves {
  std::vector<double> tv;        // max_x ||p^t(x,.) - pi||_TV
  std::vector<double> uniform;   // max_{x,y} |p^t(x,y)/pi(y) - 1|
  std::vector<double> max_ratio; // max_{x,y} p^t(x,y)/pi(y)
};

inline DistanceCurves distance_curves(const GraphTopology& g, std::size_t t_max) {
  PowerIterator it(g);
  DistanceCurves c;
  for (;;) {
    c.tv.push_back(it.worst_tv());
    c.uniform.push_back(it.worst_uniform());
    c.max_ratio.push_back(it.max_ratio());
    if (it.time() >= t_max) break;
    it.advance();
  }
  return c;
}

// g(x,y) = sum_{t=1}^{horizon} p^t(x,y); horizon defaults to T_mix^U(1/4).
inline Matrix greens_function(const GraphTopology& g, std::optional<std::size_t> horizon = std::nullopt) {
  const std::size_t T = horizon ? *horizon : uniform_mixing_time(g);
  PowerIterator it(g);
  Matrix G = Matrix::Zero(static_cast<Eigen::Index>(g.vertex_count()),
                          static_cast<Eigen::Index>(g.vertex_count()));
  while (it.time() < T) {
    it.advance();
    G += it.power();
  }
  return G;
}

inline double greens_to_set(const Matrix& G, Vertex x, std::span<const Vertex> A) {
  double s = 0.0;
  for (Vertex y : A) s += G(x, y);
  return s;
}

// Solves f = c + P f on the vertices marked in `interior`, with f given on the
// rest. Rows are scaled by 2 deg(z), which makes the system the (symmetric)
// graph Laplacian restricted to the interior.
class DirichletSolver {
 public:
  DirichletSolver(const GraphTopology& g, std::vector<std::uint8_t> interior)
      : g_(&g), interior_(std::move(interior)), index_(g.vertex_count(), -1) {
    for (Vertex v = 0; v < g.vertex_count(); ++v)
      if (interior_[v]) {
        index_[v] = static_cast<int>(order_.size());
        order_.push_back(v);
      }
    const auto m = static_cast<Eigen::Index>(order_.size());
    if (m == 0) return;
    std::vector<Eigen::Triplet<double>> trip;
    for (Vertex v : order_) {
      trip.emplace_back(index_[v], index_[v], static_cast<double>(g.degree(v)));
      for (Vertex w : g.neighbors(v))
        if (interior_[w]) trip.emplace_back(index_[v], index_[w], -1.0);
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(A);
    if (solver_.info() != Eigen::Success)
      fail(Errc::SingularSystem, "absorbing system is singular (no reachable boundary)");
    // LDLT may factor a singular Laplacian without complaint; check the pivots.
    const auto d = solver_.vectorD();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (!(d[i] > 1e-12)) fail(Errc::SingularSystem, "absorbing system is singular");
  }

  // source: c(z) over all vertices (only interior entries used);
  // boundary: f(z) over all vertices (only exterior entries used).
  std::vector<double> solve(const std::vector<double>& source, const std::vector<double>& boundary) const {
    std::vector<double> f(g_->vertex_count(), 0.0);
    for (Vertex v = 0; v < g_->vertex_count(); ++v)
      if (!interior_[v]) f[v] = boundary[v];
    if (order_.empty()) return f;
    Vector rhs(static_cast<Eigen::Index>(order_.size()));
    for (Vertex v : order_) {
      double b = 2.0 * static_cast<double>(g_->degree(v)) * source[v];
      for (Vertex w : g_->neighbors(v))
        if (!interior_[w]) b += boundary[w];
      rhs[index_[v]] = b;
    }
    const Vector sol = solver_.solve(rhs);
    for (Vertex v : order_) f[v] = sol[index_[v]];
    return f;
  }

  const std::vector<std::uint8_t>& interior() const noexcept { return interior_; }

 private:
  const GraphTopology* g_;
  std::vector<std::uint8_t> interior_;
  std::vector<int> index_;
  std::vector<Vertex> order_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

// E_z tau(y) for every z via the absorbing chain killed at y; entry y holds
// the return time 1 + sum_z P(y,z) E_z tau(y).
inline std::vector<double> hitting_times_to(const GraphTopology& g, Vertex target) {
  if (!g.is_connected()) fail(Errc::SingularSystem, "graph is disconnected");
  std::vector<std::uint8_t> interior(g.vertex_count(), 1);
  interior[target] = 0;
  DirichletSolver solver(g, std::move(interior));
  std::vector<double> source(g.vertex_count(), 1.0), boundary(g.vertex_count(), 0.0);
  auto h = solver.solve(source, boundary);
  double ret = 1.0;
  const double w = 0.5 / static_cast<double>(g.degree(target));
  for (Vertex z : g.neighbors(target)) ret += w * h[z];
  h[target] = ret;
  return h;
}

struct HittingTimes {
  Matrix expected;  // expected(x, y) = E_x tau(y), diagonal = return time
  double t_hit = 0.0;
};

// All pairs at once from the fundamental matrix Z = (I - P + 1 pi^T)^{-1}:
// E_x tau(y) = (Z(y,y) - Z(x,y)) / pi(y) for x != y. The diagonal is then
// filled by one-step analysis, independently of the identity 1/pi(y).
inline HittingTimes expected_hitting_times(const GraphTopology& g) {
  require_dense(g);
  if (!g.is_connected()) fail(Errc::SingularSystem, "graph is disconnected");
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  const Matrix P = transition_matrix(g);
  const Vector pi = stationary_distribution(g);
  Matrix M = Matrix::Identity(n, n) - P;
  M.rowwise() += pi.transpose();
  Eigen::PartialPivLU<Matrix> lu(M);
  const Matrix Z = lu.inverse();
  HittingTimes out;
  out.expected.resize(n, n);
  for (Eigen::Index y = 0; y < n; ++y) {
    for (Eigen::Index x = 0; x < n; ++x) out.expected(x, y) = (Z(y, y) - Z(x, y)) / pi[y];
    out.expected(y, y) = 0.0;
  }
  for (Vertex y = 0; y < g.vertex_count(); ++y) {
    double ret = 1.0;
    const double w = 0.5 / static_cast<double>(g.degree(y));
    for (Vertex z : g.neighbors(y)) ret += w * out.expected(z, y);
    out.expected(y, y) = ret;
  }
  if (!out.expected.allFinite()) fail(Errc::SingularSystem, "hitting-time system is singular");
  out.t_hit = out.expected.maxCoeff();
  return out;
}

// E_pi tau(x), with the stationary start included (it contributes pi(x) * return time = 1).
inline double stationary_hitting_time(const HittingTimes& h, const Vector& pi, Vertex x) {
  return pi.dot(h.expected.col(x));
}

struct MatthewsBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t lower_set_size = 0;
};

// upper = t_hit H_|V|; lower = best over greedy farthest-point sets A of
// min_{a != b in A} E_a tau(b) * H_{|A|-1}.
inline MatthewsBounds matthews_bounds(const HittingTimes& h) {
  const auto n = static_cast<std::size_t>(h.expected.rows());
  MatthewsBounds b;
  b.upper = h.t_hit * harmonic_number(n);
  if (n < 2) return b;
  auto sym = [&](std::size_t a, std::size_t c) {
    return std::min(h.expected(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)),
                    h.expected(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(a)));
  };
  std::size_t a0 = 0, a1 = 1;
  double best_pair = -1.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = a + 1; c < n; ++c)
      if (sym(a, c) > best_pair) {
        best_pair = sym(a, c);
        a0 = a;
        a1 = c;
      }
  std::vector<std::size_t> A{a0, a1};
  std::vector<double> gap(n);  // min over A of sym(v, a)
  std::vector<std::uint8_t> in(n, 0);
  in[a0] = in[a1] = 1;
  for (std::size_t v = 0; v < n; ++v) gap[v] = std::min(sym(v, a0), sym(v, a1));
  double min_pair = best_pair;
  b.lower = min_pair * harmonic_number(1);
  b.lower_set_size = 2;
  const std::size_t limit = std::min<std::size_t>(64, n);
  while (A.size() < limit) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && (pick == n || gap[v] > gap[pick])) pick = v;
    min_pair = std::min(min_pair, gap[pick]);
    in[pick] = 1;
    A.push_back(pick);
    for (std::size_t v = 0; v < n; ++v) gap[v] = std::min(gap[v], sym(v, pick));
    const double candidate = min_pair * harmonic_number(A.size() - 1);
    if (candidate > b.lower) {
      b.lower = candidate;
      b.lower_set_size = A.size();
    }
  }
  return b;
}

// All-pairs graph distances, row-major n x n.
inline std::vector<std::uint32_t> distance_matrix(const GraphTopology& g) {
  require_dense(g);
  const std::size_t n = g.vertex_count();
  std::vector<std::uint32_t> d(n * n);
  for (Vertex x = 0; x < n; ++x) {
    auto row = bfs_distances(g, x);
    std::copy(row.begin(), row.end(), d.begin() + static_cast<std::ptrdiff_t>(x * n));
  }
  return d;
}

namespace detail {

// Maximal cliques (Bron-Kerbosch with Tomita pivoting) over bitset adjacency.
class CliqueEnumerator {
 public:
  using Bits = std::vector<std::uint64_t>;

  CliqueEnumerator(std::size_t n, std::vector<Bits> adj, std::size_t cap)
      : n_(n), words_((n + 63) / 64), adj_(std::move(adj)), cap_(cap) {}

  std::vector<std::vector<Vertex>> run() {
    Bits P(words_, 0), X(words_, 0);
    for (std::size_t v = 0; v < n_; ++v) P[v / 64] |= std::uint64_t{1} << (v % 64);
    std::vector<Vertex> R;
    expand(R, P, X);
    return std::move(out_);
  }

 private:
  static bool empty(const Bits& b) {
    for (auto w : b)
      if (w) return false;
    return true;
  }

  std::size_t count_and(const Bits& a, const Bits& b) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words_; ++i) c += static_cast<std::size_t>(__builtin_popcountll(a[i] & b[i]));
    return c;
  }

  void expand(std::vector<Vertex>& R, Bits& P, Bits& X) {
    if (empty(P)) {
      if (empty(X)) {
        if (out_.size() >= cap_) fail(Errc::CapExceeded, "too many maximal cliques");
        out_.push_back(R);
      }
      return;
    }
    // Pivot: vertex of P u X with most neighbors in P.
    std::size_t pivot = 0, best = 0;
    bool have = false;
    for (std::size_t i = 0; i < words_; ++i) {
      std::uint64_t w = P[i] | X[i];
      while (w) {
        const std::size_t v = i * 64 + static_cast<std::size_t>(__builtin_ctzll(w));
        w &= w - 1;
        const std::size_t c = count_and(adj_[v], P);
        if (!have || c > best) {
          pivot = v;
          best = c;
          have = true;
        }
      }
    }
    Bits cand(words_);
    for (std::size_t i = 0; i < words_; ++i) cand[i] = P[i] & ~adj_[pivot][i];
    for (std::size_t i = 0; i < words_; ++i) {
      while (cand[i]) {
        const std::size_t v = i * 64 + static_cast<std::size_t>(__builtin_ctzll(cand[i]));
        cand[i] &= cand[i] - 1;
        Bits P2(words_), X2(words_);
        for (std::size_t k = 0; k < words_; ++k) {
          P2[k] = P[k] & adj_[v][k];
          X2[k] = X[k] & adj_[v][k];
        }
        R.push_back(static_cast<Vertex>(v));
        expand(R, P2, X2);
        R.pop_back();
        P[v / 64] &= ~(std::uint64_t{1} << (v % 64));
        X[v / 64] |= std::uint64_t{1} << (v % 64);
      }
    }
  }

  std::size_t n_, words_;
  std::vector<Bits> adj_;
  std::size_t cap_;
  std::vector<std::vector<Vertex>> out_;
};

}  // namespace detail

// Sets of diameter <= s: all maximal cliques of the graph "d(u,v) <= s".
inline std::vector<std::vector<Vertex>> diameter_bounded_sets(const GraphTopology& g,
                                                              const std::vector<std::uint32_t>& dist,
                                                              std::uint32_t s,
                                                              std::size_t cap = 2'000'000) {
  const std::size_t n = g.vertex_count();
  if (s == 0) {
    std::vector<std::vector<Vertex>> out(n);
    for (Vertex v = 0; v < n; ++v) out[v] = {v};
    return out;
  }
  const std::size_t words = (n + 63) / 64;
  std::vector<std::vector<std::uint64_t>> adj(n, std::vector<std::uint64_t>(words, 0));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && dist[u * n + v] <= s) adj[u][v / 64] |= std::uint64_t{1} << (v % 64);
  return detail::CliqueEnumerator(n, std::move(adj), cap).run();
}

// rho(r, s) = max over x and sets A with diam(A) <= s, d(x, A) >= r of g(x, A).
// Since the weights are nonnegative, the best A for given (x, r) is a maximal
// diameter-s set intersected with {y : d(x,y) >= r}. On vertex-transitive
// families only x = 0 is examined.
struct TransienceProfile {
  std::uint32_t r_max = 0;
  std::uint32_t s_max = 0;
  std::vector<std::vector<double>> rho;  // rho[r][s]
};

inline TransienceProfile transience_profile(const GraphTopology& g, const Matrix& G,
                                            std::uint32_t r_max, std::uint32_t s_max = 1) {
  require_dense(g);
  if (s_max > 2) fail(Errc::InvalidSpec, "transience profile supports s <= 2");
  const std::size_t n = g.vertex_count();
  const auto dist = distance_matrix(g);
  TransienceProfile tp;
  tp.r_max = r_max;
  tp.s_max = s_max;
  tp.rho.assign(r_max + 1, std::vector<double>(s_max + 1, 0.0));
  const std::size_t x_count = g.vertex_transitive() ? 1 : n;
  for (std::uint32_t s = 0; s <= s_max; ++s) {
    const auto sets = diameter_bounded_sets(g, dist, s);
    for (Vertex x = 0; x < x_count; ++x) {
      for (const auto& A : sets) {
        // Accumulate g(x, A ∩ {d >= r}) for all r at once from the distance histogram.
        std::vector<double> by_dist(r_max + 2, 0.0);
        for (Vertex y : A) {
          const std::uint32_t d = std::min<std::uint32_t>(dist[x * n + y], r_max + 1);
          by_dist[d] += G(x, y);
        }
        double tail = 0.0;
        for (std::int64_t r = r_max + 1; r >= 0; --r) {
          tail += by_dist[static_cast<std::size_t>(r)];
          if (r <= static_cast<std::int64_t>(r_max))
            tp.rho[static_cast<std::size_t>(r)][s] = std::max(tp.rho[static_cast<std::size_t>(r)][s], tail);
        }
      }
    }
  }
  return tp;
}

struct MixingDecayReport {
  std::size_t pairs = 0;
  std::size_t tv_violations = 0;
  std::size_t uniform_violations = 0;
  double worst_tv_slack = 0.0;       // min of rhs - lhs over checked pairs
  double worst_uniform_slack = 0.0;
  bool holds() const { return tv_violations == 0 && uniform_violations == 0; }
};

// Checks, for given (t, s) pairs,
//   d(t+s) <= 4 d(t) d(s)                     (d = worst-start TV)
//   u(t+s) <= m(s) d(t)                       (u = worst uniform deviation, m = max ratio)
inline MixingDecayReport mixing_decay_check(const DistanceCurves& c,
                                            const std::vector<std::pair<std::size_t, std::size_t>>& ts) {
  MixingDecayReport rep;
  rep.worst_tv_slack = rep.worst_uniform_slack = std::numeric_limits<double>::infinity();
  for (const auto& [t, s] : ts) {
    if (t + s >= c.tv.size()) fail(Errc::InvalidSpec, "pair beyond computed horizon");
    ++rep.pairs;
    const double tv_slack = 4.0 * c.tv[t] * c.tv[s] - c.tv[t + s];
    const double u_slack = c.max_ratio[s] * c.tv[t] - c.uniform[t + s];
    rep.worst_tv_slack = std::min(rep.worst_tv_slack, tv_slack);
    rep.worst_uniform_slack = std::min(rep.worst_uniform_slack, u_slack);
    if (tv_slack < -OracleTolerances::inequality_slack) ++rep.tv_violations;
    if (u_slack < -OracleTolerances::inequality_slack) ++rep.uniform_violations;
  }
  return rep;
}

// Random pairs with t, s in [0, 2 T_mix^U]. Pairs where t or s is 0 are
// included: they are valid instances of both inequalities.
inline MixingDecayReport mixing_decay_check(const GraphTopology& g, std::size_t pairs, std::uint64_t seed) {
  const std::size_t half = 2 * uniform_mixing_time(g) + 1;
  const auto curves = distance_curves(g, 2 * half);
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> ts;
  for (std::size_t i = 0; i < pairs; ++i) ts.emplace_back(rng.below(half + 1), rng.below(half + 1));
  return mixing_decay_check(curves, ts);
}

// ---------------------------------------------------------------------------
// SpectralSummary
// ---------------------------------------------------------------------------

struct SpectralSummary {
  std::string family;  // family label
  std::map<double, std::size_t> t_mix;
  std::map<double, std::size_t> t_mix_uniform;
  Matrix greens;
  Matrix hitting;
  double t_hit = 0.0;
  Vector stationary;
};

// One power sweep to T_mix^U(eps_max) covers every requested eps (TV <= uniform/2).
inline SpectralSummary build_spectral_summary(const GraphTopology& g,
                                              std::vector<double> eps_list = {0.25}) {
  require_dense(g);
  SpectralSummary s;
  s.family = family_label(g.family());
  s.stationary = stationary_distribution(g);
  std::sort(eps_list.begin(), eps_list.end());
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  s.greens = Matrix::Zero(n, n);
  PowerIterator it(g);
  bool greens_done = false;
  for (;;) {
    const double tv = it.worst_tv();
    const double un = it.worst_uniform();
    for (double e : eps_list) {
      if (!s.t_mix.count(e) && tv <= e) s.t_mix[e] = it.time();
      if (!s.t_mix_uniform.count(e) && un <= e) s.t_mix_uniform[e] = it.time();
    }
    if (!greens_done && un <= 0.25) {
      greens_done = true;
    }
    if (s.t_mix_uniform.size() == eps_list.size() && greens_done) break;
    if (it.time() >= kPowerIterationLimit)
      fail(Errc::HorizonExceeded, "power iteration did not reach the threshold");
    it.advance();
    if (!greens_done) s.greens += it.power();
  }
  auto h = expected_hitting_times(g);
  s.hitting = std::move(h.expected);
  s.t_hit = h.t_hit;
  return s;
}

namespace detail {

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) fail(Errc::Io, "cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

inline Matrix read_matrix_csv(const std::filesystem::path& path, Eigen::Index n) {
  std::ifstream is(path);
  if (!is) fail(Errc::Io, "cannot read " + path.string());
  Matrix m(n, n);
  std::string line;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(is, line)) fail(Errc::Io, "short matrix file " + path.string());
    std::stringstream ss(line);
    std::string cell;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::getline(ss, cell, ',')) fail(Errc::Io, "short matrix row in " + path.string());
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

}  // namespace detail

// Writes summary.txt (key=value header), stationary.csv, greens.csv, hitting.csv.
inline void export_spectral_summary(const SpectralSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream hdr(dir / "summary.txt");
  if (!hdr) fail(Errc::Io, "cannot write " + (dir / "summary.txt").string());
  hdr << "family=" << s.family << '\n';
  hdr << "vertex_count=" << s.stationary.size() << '\n';
  for (const auto& [e, t] : s.t_mix) hdr << "t_mix_" << format_double(e) << '=' << t << '\n';
  for (const auto& [e, t] : s.t_mix_uniform) hdr << "t_mix_uniform_" << format_double(e) << '=' << t << '\n';
  hdr << "t_hit=" << format_double(s.t_hit) << '\n';
  std::ofstream st(dir / "stationary.csv");
  for (Eigen::Index i = 0; i < s.stationary.size(); ++i) st << format_double(s.stationary[i]) << '\n';
  detail::write_matrix_csv(dir / "greens.csv", s.greens);
  detail::write_matrix_csv(dir / "hitting.csv", s.hitting);
}

inline SpectralSummary import_spectral_summary(const std::filesystem::path& dir) {
  std::ifstream hdr(dir / "summary.txt");
  if (!hdr) fail(Errc::Io, "cannot read " + (dir / "summary.txt").string());
  const KeyValues kv = read_metadata(hdr);
  SpectralSummary s;
  s.family = kv.at("family");
  const auto n = static_cast<Eigen::Index>(std::stoll(kv.at("vertex_count")));
  for (const auto& [k, v] : kv) {
    if (k.rfind("t_mix_uniform_", 0) == 0) s.t_mix_uniform[std::stod(k.substr(14))] = std::stoull(v);
    else if (k.rfind("t_mix_", 0) == 0) s.t_mix[std::stod(k.substr(6))] = std::stoull(v);
  }
  s.t_hit = std::stod(kv.at("t_hit"));
  s.stationary.resize(n);
  std::ifstream st(dir / "stationary.csv");
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string line;
    if (!std::getline(st, line)) fail(Errc::Io, "short stationary.csv");
    s.stationary[i] = std::stod(line);
  }
  s.greens = detail::read_matrix_csv(dir / "greens.csv", n);
  s.hitting = detail::read_matrix_csv(dir / "hitting.csv", n);
  return s;
}

// Content key: family parameters plus the edge set.
inline std::string graph_content_key(const GraphTopology& g) {
  std::ostringstream os;
  for (const auto& [k, v] : family_to_kv(g.family())) os << k << '=' << v << ';';
  write_edge_list(os, g);
  return hex64(fnv1a(os.str()));
}

inline SpectralSummary cached_spectral_summary(const GraphTopology& g, const std::filesystem::path& cache_root) {
  const auto dir = cache_root / graph_content_key(g);
  if (std::filesystem::exists(dir / "hitting.csv")) return import_spectral_summary(dir);
  auto s = build_spectral_summary(g);
  export_spectral_summary(s, dir);
  return s;
}

}  // namespace rwlab
