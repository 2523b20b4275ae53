#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "rwlab/error.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

using Time = std::uint64_t;

inline constexpr Time kNever = std::numeric_limits<Time>::max();

// nullopt start means "draw X(0) from pi".
struct WalkConfig {
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;
  std::optional<Vertex> start;
};

// One lazy step: hold with probability 1/2, else a uniform neighbor.
inline Vertex step(const GraphTopology& g, Vertex x, Rng& rng) {
  if (rng.coin()) return x;
  const auto nb = g.neighbors(x);
  return nb[rng.below(nb.size())];
}

// pi(x) = deg(x) / sum deg: pick a uniform half-edge and return its owner.
inline Vertex sample_stationary(const GraphTopology& g, Rng& rng) {
  return g.half_edge_owner(rng.below(g.total_degree()));
}

// Safety cap on simulated time: 10^4 |V| log |V| steps.
inline Time default_horizon(const GraphTopology& g) {
  const double n = static_cast<double>(g.vertex_count());
  return static_cast<Time>(std::ceil(1e4 * n * std::max(1.0, std::log(n))));
}

// A walk with its own stream, for callers that consume steps one at a time.
class Walk {
 public:
  Walk(const GraphTopology& g, const WalkConfig& config)
      : g_(&g), rng_(config.seed, config.replica_index) {
    pos_ = config.start ? *config.start : sample_stationary(g, rng_);
    if (pos_ >= g.vertex_count()) fail(Errc::InvalidSpec, "start vertex out of range");
  }

  Vertex position() const noexcept { return pos_; }
  Time time() const noexcept { return t_; }
  Rng& rng() noexcept { return rng_; }

  Vertex advance() {
    pos_ = step(*g_, pos_, rng_);
    ++t_;
    return pos_;
  }

 private:
  const GraphTopology* g_;
  Rng rng_;
  Vertex pos_ = 0;
  Time t_ = 0;
};

// X(0..T) as an explicit vector.
inline std::vector<Vertex> trajectory(const GraphTopology& g, const WalkConfig& config, Time T) {
  Walk w(g, config);
  std::vector<Vertex> out;
  out.reserve(T + 1);
  out.push_back(w.position());
  for (Time t = 0; t < T; ++t) out.push_back(w.advance());
  return out;
}

// Range of X on [0, steps]. first_hit[x] is the first visit time min{t >= 0 : X(t) = x}
// (so the start vertex has first_hit 0); kNever for unvisited vertices.
struct RangeRecord {
  std::vector<std::uint8_t> visited;
  std::size_t visited_count = 0;
  Vertex start = 0;
  Vertex final_position = 0;
  Time steps = 0;
  std::optional<Time> cover_time;
  std::optional<std::vector<Time>> first_hit;

  bool complete() const { return visited_count == visited.size(); }
};

namespace detail {

struct RangeRunner {
  const GraphTopology& g;
  Walk walk;
  RangeRecord rec;

  RangeRunner(const GraphTopology& graph, const WalkConfig& config, bool track_first_hit)
      : g(graph), walk(graph, config) {
    const std::size_t n = g.vertex_count();
    rec.visited.assign(n, 0);
    rec.start = walk.position();
    if (track_first_hit) rec.first_hit.emplace(n, kNever);
    mark(rec.start, 0);
  }

  void mark(Vertex v, Time t) {
    if (rec.visited[v]) return;
    rec.visited[v] = 1;
    ++rec.visited_count;
    if (rec.first_hit) (*rec.first_hit)[v] = t;
    // tau_cov is taken over t >= 1; a one-vertex graph would cover at t = 1.
    if (rec.complete() && !rec.cover_time) rec.cover_time = std::max<Time>(t, 1);
  }

  void run_to(Time T) {
    while (walk.time() < T) {
      const Vertex v = walk.advance();
      mark(v, walk.time());
    }
    rec.steps = walk.time();
    rec.final_position = walk.position();
  }
};

}  // namespace detail

inline RangeRecord run_range(const GraphTopology& g, const WalkConfig& config, Time T,
                             bool track_first_hit = false) {
  detail::RangeRunner runner(g, config, track_first_hit);
  runner.run_to(T);
  return std::move(runner.rec);
}

inline RangeRecord run_until_cover(const GraphTopology& g, const WalkConfig& config,
                                   std::optional<Time> cap = std::nullopt) {
  if (!g.is_connected()) fail(Errc::InvalidSpec, "cover time needs a connected graph");
  const Time limit = cap ? *cap : default_horizon(g);
  detail::RangeRunner runner(g, config, true);
  while (!runner.rec.complete() || runner.walk.time() == 0) {
    if (runner.walk.time() >= limit)
      fail(Errc::HorizonExceeded, "walk did not cover within " + std::to_string(limit) + " steps");
    const Vertex v = runner.walk.advance();
    runner.mark(v, runner.walk.time());
  }
  runner.rec.steps = runner.walk.time();
  runner.rec.final_position = runner.walk.position();
  if (!runner.rec.cover_time) runner.rec.cover_time = runner.rec.steps;
  return std::move(runner.rec);
}

// First t >= 1 with X(t) = target.
inline Time hitting_sample(const GraphTopology& g, Vertex start, Vertex target, Rng& rng,
                           std::optional<Time> cap = std::nullopt) {
  const Time limit = cap ? *cap : default_horizon(g);
  Vertex x = start;
  for (Time t = 1; t <= limit; ++t) {
    x = step(g, x, rng);
    if (x == target) return t;
  }
  fail(Errc::HorizonExceeded, "target not hit within " + std::to_string(limit) + " steps");
}

// Cover times of `replicas` independent stationary-start walks; replica r uses
// stream (seed, r), so the result does not depend on the thread count.
inline std::vector<Time> cover_time_samples(const GraphTopology& g, std::size_t replicas,
                                            std::uint64_t seed, unsigned threads = 1) {
  std::vector<Time> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    out[r] = *run_until_cover(g, WalkConfig{seed, r, std::nullopt}).cover_time;
  });
  return out;
}

inline Estimate estimate_cover_time(const GraphTopology& g, std::size_t replicas,
                                    std::uint64_t seed, unsigned threads = 1) {
  if (replicas < 2) fail(Errc::InvalidSpec, "estimate_cover_time needs at least 2 replicas");
  return estimate_of(cover_time_samples(g, replicas, seed, threads));
}

// CSV: replica,cover_time[,hit_0,...]
inline void write_cover_csv(std::ostream& os, const std::vector<RangeRecord>& records,
                            bool first_hit_columns) {
  os << "replica,cover_time";
  const std::size_t n = records.empty() ? 0 : records.front().visited.size();
  if (first_hit_columns)
    for (std::size_t v = 0; v < n; ++v) os << ",hit_" << v;
  os << '\n';
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    os << r << ',';
    if (rec.cover_time) os << *rec.cover_time;
    if (first_hit_columns) {
      for (std::size_t v = 0; v < n; ++v) {
        os << ',';
        if (rec.first_hit && (*rec.first_hit)[v] != kNever) os << (*rec.first_hit)[v];
      }
    }
    os << '\n';
  }
}

}  // namespace rwlab
