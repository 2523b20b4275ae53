#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the code under test beyond plain graph accessors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rwlab/graph.hpp"

namespace testsupport {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }
  std::size_t size(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_, size_;
};

// Kolmogorov distribution tail P[K > lambda].
inline double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

// One-sample KS test of xs against a continuous cdf; returns the p-value.
template <typename Cdf>
double ks_pvalue(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sq = std::sqrt(n);
  return kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
}

// Dense lazy kernel built straight from adjacency.
inline std::vector<std::vector<double>> lazy_kernel(const rwlab::GraphTopology& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
  for (rwlab::Vertex x = 0; x < n; ++x) {
    P[x][x] += 0.5;
    for (rwlab::Vertex y : g.neighbors(x)) P[x][y] += 0.5 / static_cast<double>(g.degree(x));
  }
  return P;
}

// Gauss-Jordan solve of A z = b (small dense systems only).
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
    std::swap(A[p], A[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= A[i][i];
  return b;
}

// E_x tau(y) for x != y by value iteration-free direct solve over V \ {y}.
inline double hitting_by_gauss(const rwlab::GraphTopology& g, rwlab::Vertex x, rwlab::Vertex y) {
  const auto P = lazy_kernel(g);
  const std::size_t n = g.vertex_count();
  std::vector<std::size_t> idx;
  for (std::size_t v = 0; v < n; ++v)
    if (v != y) idx.push_back(v);
  std::vector<std::vector<double>> A(idx.size(), std::vector<double>(idx.size(), 0.0));
  std::vector<double> b(idx.size(), 1.0);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) A[i][j] = (i == j ? 1.0 : 0.0) - P[idx[i]][idx[j]];
  const auto h = gauss_solve(A, b);
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (idx[i] == x) return h[i];
  return 0.0;
}

// f = P f off the absorbing set, f = values on it (dense kernel).
inline std::vector<double> absorb(const std::vector<std::vector<double>>& P, const std::vector<bool>& absorbing,
                                  const std::vector<double>& values) {
  const std::size_t n = P.size();
  std::vector<std::size_t> idx, pos(n, n);
  for (std::size_t v = 0; v < n; ++v)
    if (!absorbing[v]) {
      pos[v] = idx.size();
      idx.push_back(v);
    }
  std::vector<std::vector<double>> A(idx.size(), std::vector<double>(idx.size(), 0.0));
  std::vector<double> b(idx.size(), 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    A[i][i] = 1.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (P[idx[i]][u] == 0.0) continue;
      if (absorbing[u]) b[i] += P[idx[i]][u] * values[u];
      else A[i][pos[u]] -= P[idx[i]][u];
    }
  }
  const auto sol = gauss_solve(A, b);
  std::vector<double> f = values;
  for (std::size_t i = 0; i < idx.size(); ++i) f[idx[i]] = sol[i];
  return f;
}

// P_v[the walk is at x at some time in 0..T] via T steps of the kernel killed at x.
inline std::vector<double> hit_within(const std::vector<std::vector<double>>& P, std::size_t x, std::size_t T) {
  const std::size_t n = P.size();
  std::vector<double> f(n, 0.0), next(n);
  f[x] = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < n; ++v) {
      if (v == x) {
        next[v] = 1.0;
        continue;
      }
      double s = 0.0;
      for (std::size_t u = 0; u < n; ++u) s += P[v][u] * f[u];
      next[v] = s;
    }
    f.swap(next);
  }
  return f;
}

}  // namespace testsupport
