#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "rwlab/error.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/oracle.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/stats.hpp"
#include "rwlab/walker.hpp"

namespace rwlab {

// r, R: inner/outer radii around the target set. The remix gap after each
// exit is T_beta = ceil(beta * T_mix^U) and the post-exit hit window is
// T_alpha = ceil(alpha_window * T_mix^U). T_mix^U comes from the oracle unless
// supplied (it must be supplied above the dense cap).
struct ExcursionParams {
  std::uint32_t r = 1;
  std::uint32_t R = 3;
  double beta = 2.0;
  double alpha_window = 1.0;
  std::optional<std::size_t> t_mix_uniform;

  void validate() const {
    if (r < 1) fail(Errc::InvalidSpec, "excursions need r >= 1");
    if (!(r < R)) fail(Errc::InvalidSpec, "excursions need r < R");
    if (!(alpha_window >= 0.0) || !(alpha_window <= beta))
      fail(Errc::InvalidSpec, "excursions need 0 <= alpha_window <= beta");
  }
};

// Everything the tracker needs, resolved once per (graph, E, params).
struct ExcursionGeometry {
  std::vector<Vertex> targets;
  std::vector<std::uint32_t> dist;  // d(., E)
  std::vector<std::uint8_t> is_target;
  std::uint32_t r = 1, R = 3;
  std::size_t t_mix_uniform = 0;
  Time gap = 0;     // T_beta
  Time window = 0;  // T_alpha
};

inline ExcursionGeometry resolve_geometry(const GraphTopology& g, std::vector<Vertex> targets,
                                          const ExcursionParams& params) {
  params.validate();
  if (targets.empty()) fail(Errc::InvalidSpec, "target set is empty");
  for (Vertex x : targets)
    if (x >= g.vertex_count()) fail(Errc::InvalidSpec, "target out of range");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto d = bfs_distances(g, targets[i]);
    for (std::size_t j = i + 1; j < targets.size(); ++j)
      if (d[targets[j]] < 2 * params.R)
        fail(Errc::TargetsTooClose, "targets " + std::to_string(targets[i]) + " and " +
                                        std::to_string(targets[j]) + " are closer than 2R");
  }
  ExcursionGeometry geo;
  geo.r = params.r;
  geo.R = params.R;
  geo.dist = bfs_distances(g, targets);
  geo.is_target.assign(g.vertex_count(), 0);
  for (Vertex x : targets) geo.is_target[x] = 1;
  geo.targets = std::move(targets);
  bool has_sphere = false, has_outside = false;
  for (auto d : geo.dist) {
    has_sphere = has_sphere || d == params.r;
    has_outside = has_outside || (d != kUnreachable && d > params.R);
  }
  if (!has_sphere || !has_outside)
    fail(Errc::GeometryDegenerate, "R must be below the eccentricity of the target set");
  if (params.t_mix_uniform) {
    geo.t_mix_uniform = *params.t_mix_uniform;
  } else {
    if (g.vertex_count() > kDenseCap)
      fail(Errc::CapExceeded, "graph above the dense cap: supply t_mix_uniform explicitly");
    geo.t_mix_uniform = uniform_mixing_time(g);
  }
  geo.gap = static_cast<Time>(std::ceil(params.beta * static_cast<double>(geo.t_mix_uniform)));
  geo.window = static_cast<Time>(std::ceil(params.alpha_window * static_cast<double>(geo.t_mix_uniform)));
  return geo;
}

struct ExcursionRecord {
  Time tau = 0;    // entry into the r-sphere
  Time sigma = 0;  // first exit from the R-ball
  Vertex entry = 0;
  Vertex exit = 0;
  bool hit = false;         // a target visited in [tau, sigma + T_alpha]
  std::uint32_t visits = 0; // steps in that window spent on a target
};

struct ExcursionTrace {
  std::vector<Vertex> targets;
  std::vector<ExcursionRecord> excursions;
};

// Online decomposition. Feed X(0), X(1), ... in order; each excursion is
// appended once its hit window [tau, sigma + T_alpha] has closed.
class ExcursionTracker {
 public:
  explicit ExcursionTracker(const ExcursionGeometry& geo) : geo_(&geo) {}

  void push(Time t, Vertex v) {
    switch (phase_) {
      case Phase::Seek:
        try_enter(t, v);
        break;
      case Phase::Inside:
        count(v);
        if (geo_->dist[v] > geo_->R) {
          cur_.sigma = t;
          cur_.exit = v;
          window_end_ = t + geo_->window;
          phase_ = Phase::Window;
          if (t == window_end_) close(t, v);
        }
        break;
      case Phase::Window:
        count(v);
        if (t == window_end_) close(t, v);
        break;
    }
  }

  const std::vector<ExcursionRecord>& completed() const noexcept { return done_; }
  std::vector<ExcursionRecord>& completed() noexcept { return done_; }
  // Entry time of an excursion whose window is still open, if any.
  std::optional<Time> open_entry() const {
    if (phase_ == Phase::Seek) return std::nullopt;
    return cur_.tau;
  }
  // Earliest time the next excursion may start.
  Time next_allowed() const noexcept { return allowed_; }

 private:
  enum class Phase { Seek, Inside, Window };

  void try_enter(Time t, Vertex v) {
    if (t < allowed_ || geo_->dist[v] != geo_->r) return;
    cur_ = ExcursionRecord{};
    cur_.tau = t;
    cur_.entry = v;
    phase_ = Phase::Inside;
    count(v);
  }

  void count(Vertex v) {
    if (geo_->is_target[v]) {
      cur_.hit = true;
      ++cur_.visits;
    }
  }

  void close(Time t, Vertex v) {
    done_.push_back(cur_);
    allowed_ = cur_.sigma + geo_->gap;
    phase_ = Phase::Seek;
    // With alpha_window == beta the next entry may happen at this very step.
    try_enter(t, v);
  }

  const ExcursionGeometry* geo_;
  Phase phase_ = Phase::Seek;
  ExcursionRecord cur_;
  Time window_end_ = 0;
  Time allowed_ = 0;
  std::vector<ExcursionRecord> done_;
};

inline ExcursionTrace decompose(const ExcursionGeometry& geo, std::span<const Vertex> trajectory) {
  ExcursionTracker tracker(geo);
  for (std::size_t t = 0; t < trajectory.size(); ++t) tracker.push(t, trajectory[t]);
  return {geo.targets, std::move(tracker.completed())};
}

inline ExcursionTrace decompose(const GraphTopology& g, const std::vector<Vertex>& targets,
                                const ExcursionParams& params, std::span<const Vertex> trajectory) {
  return decompose(resolve_geometry(g, targets, params), trajectory);
}

// CSV: k,tau,sigma,entry,exit,hit,visits
inline void write_trace_csv(std::ostream& os, const ExcursionTrace& trace) {
  os << "k,tau,sigma,entry,exit,hit,visits\n";
  for (std::size_t k = 0; k < trace.excursions.size(); ++k) {
    const auto& e = trace.excursions[k];
    os << k << ',' << e.tau << ',' << e.sigma << ',' << e.entry << ',' << e.exit << ',' << (e.hit ? 1 : 0)
       << ',' << e.visits << '\n';
  }
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators
// ---------------------------------------------------------------------------

// Runs a walk until `count` excursions have completed and the entry of the
// next one is known (so the last cycle length tau_{k+1} - tau_k is defined).
struct FirstCycles {
  std::vector<ExcursionRecord> records;
  Time next_entry = 0;
};

inline FirstCycles run_first_cycles(const GraphTopology& g, const ExcursionGeometry& geo, const WalkConfig& wc,
                                    std::size_t count, Time cap) {
  Walk w(g, wc);
  ExcursionTracker tr(geo);
  tr.push(0, w.position());
  for (;;) {
    if (tr.completed().size() > count ||
        (tr.completed().size() == count && tr.open_entry())) {
      FirstCycles out;
      out.records.assign(tr.completed().begin(), tr.completed().begin() + static_cast<std::ptrdiff_t>(count));
      out.next_entry = tr.completed().size() > count ? tr.completed()[count].tau : *tr.open_entry();
      return out;
    }
    if (w.time() >= cap) fail(Errc::HorizonExceeded, "excursions did not complete within the safety horizon");
    const Vertex v = w.advance();
    tr.push(w.time(), v);
  }
}

struct CycleSample {
  Estimate success;  // P_pi[S_0]: the first excursion hits within its window
  Estimate cycle;    // E_pi[tau_1 - tau_0] under the configured gap
  Estimate visits;   // E_pi[a_0]: time on the target in the first window
  Estimate first_entry;  // E_pi[tau_0]
};

// One stationary-start replica per sample: record S_0, a_0, tau_0 and tau_1 - tau_0.
inline CycleSample sample_first_cycle(const GraphTopology& g, const ExcursionGeometry& geo, std::size_t replicas,
                                      std::uint64_t seed, unsigned threads = 1) {
  if (replicas < 2) fail(Errc::InvalidSpec, "replicas must be >= 2");
  std::vector<FirstCycles> runs(replicas);
  const Time cap = default_horizon(g);
  parallel_for(replicas, threads, [&](std::size_t i) {
    runs[i] = run_first_cycles(g, geo, WalkConfig{seed, i, std::nullopt}, 1, cap);
  });
  RunningStats s, c, a, f;
  for (const auto& r : runs) {
    s.add(r.records[0].hit ? 1.0 : 0.0);
    c.add(static_cast<double>(r.next_entry - r.records[0].tau));
    a.add(r.records[0].visits);
    f.add(static_cast<double>(r.records[0].tau));
  }
  return {s.estimate(), c.estimate(), a.estimate(), f.estimate()};
}

inline Estimate estimate_success_prob(const GraphTopology& g, Vertex x, const ExcursionParams& params,
                                      std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  const auto geo = resolve_geometry(g, {x}, params);
  return sample_first_cycle(g, geo, replicas, seed, threads).success;
}

// Zero gap and zero window: tau_{k+1} is the first return to the r-sphere
// after sigma_k.
inline ExcursionParams without_gap(ExcursionParams params) {
  params.beta = 0.0;
  params.alpha_window = 0.0;
  return params;
}

inline Estimate mean_excursion_length(const GraphTopology& g, const std::vector<Vertex>& targets,
                                      const ExcursionParams& params, std::size_t replicas, std::uint64_t seed,
                                      unsigned threads = 1) {
  const auto geo = resolve_geometry(g, targets, without_gap(params));
  return sample_first_cycle(g, geo, replicas, seed, threads).cycle;
}

// N(x, T) = min{k : tau_k >= T}, i.e. the number of entries before T, for each
// T in `horizons` (sorted ascending), from one walk.
inline std::vector<std::size_t> excursion_counts(const GraphTopology& g, const ExcursionGeometry& geo,
                                                 const WalkConfig& wc, std::vector<Time> horizons) {
  if (!std::is_sorted(horizons.begin(), horizons.end()))
    fail(Errc::InvalidSpec, "horizons must be sorted");
  std::vector<std::size_t> out;
  out.reserve(horizons.size());
  if (horizons.empty()) return out;
  Walk w(g, wc);
  ExcursionTracker tr(geo);
  tr.push(0, w.position());
  for (Time T : horizons) {
    while (w.time() + 1 < T) {
      const Vertex v = w.advance();
      tr.push(w.time(), v);
    }
    std::size_t n = T == 0 ? 0 : tr.completed().size() + (tr.open_entry() ? 1 : 0);
    out.push_back(n);
  }
  return out;
}

struct OccupationResult {
  Estimate visits;         // a-bar: time on x per excursion window
  Estimate cycle;          // mean tau_{k+1} - tau_k along the run
  double occupation = 0;   // a-bar / cycle
  double pi = 0;           // exact pi(x)
  double ratio = 0;        // occupation / pi
  std::size_t excursions = 0;
};

// One long stationary-start run of `horizon` steps.
inline OccupationResult occupation_ratio(const GraphTopology& g, Vertex x, const ExcursionParams& params,
                                         Time horizon, std::uint64_t seed) {
  const auto geo = resolve_geometry(g, {x}, params);
  Walk w(g, WalkConfig{seed, 0, std::nullopt});
  ExcursionTracker tr(geo);
  tr.push(0, w.position());
  while (w.time() < horizon) {
    const Vertex v = w.advance();
    tr.push(w.time(), v);
  }
  const auto& ex = tr.completed();
  if (ex.size() < 2) fail(Errc::InsufficientSamples, "fewer than two excursions within the horizon");
  RunningStats a, c;
  for (std::size_t k = 0; k < ex.size(); ++k) {
    a.add(ex[k].visits);
    if (k + 1 < ex.size()) c.add(static_cast<double>(ex[k + 1].tau - ex[k].tau));
  }
  OccupationResult out;
  out.visits = a.estimate();
  out.cycle = c.estimate();
  out.excursions = ex.size();
  out.occupation = out.visits.mean / out.cycle.mean;
  out.pi = static_cast<double>(g.degree(x)) / static_cast<double>(g.total_degree());
  out.ratio = out.occupation / out.pi;
  return out;
}

struct HittingPrediction {
  Estimate success;          // p-bar under (alpha_window, beta)
  Estimate cycle;            // mean cycle under the configured gap
  Estimate cycle_no_gap;     // T_{r,R}: mean cycle with beta = 0
  double prediction = 0;     // cycle / p-bar
  double prediction_stderr = 0;
  double prediction_no_gap = 0;  // T_{r,R} / p-bar
  std::optional<double> exact;   // E_pi tau(x)
  std::optional<double> ratio;   // prediction / exact
};

inline double exact_stationary_hitting(const GraphTopology& g, Vertex x) {
  require_dense(g);
  const auto h = hitting_times_to(g, x);
  double s = 0.0;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (v != x) s += static_cast<double>(g.degree(v)) * h[v];
  return s / static_cast<double>(g.total_degree());
}

inline HittingPrediction hitting_prediction(const GraphTopology& g, Vertex x, const ExcursionParams& params,
                                            std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  const auto geo = resolve_geometry(g, {x}, params);
  const auto s = sample_first_cycle(g, geo, replicas, seed, threads);
  if (s.success.mean <= 0.0) fail(Errc::InsufficientSamples, "no excursion hit the target");
  HittingPrediction out;
  out.success = s.success;
  out.cycle = s.cycle;
  ExcursionGeometry geo0 = geo;
  geo0.gap = 0;
  geo0.window = 0;
  out.cycle_no_gap = sample_first_cycle(g, geo0, replicas, splitmix64(seed ^ 0x5bd1e9955bd1e995ULL), threads).cycle;
  out.prediction = s.cycle.mean / s.success.mean;
  out.prediction_stderr =
      out.prediction * std::hypot(s.cycle.stderr_ / s.cycle.mean, s.success.stderr_ / s.success.mean);
  out.prediction_no_gap = out.cycle_no_gap.mean / s.success.mean;
  if (g.vertex_count() <= kDenseCap) {
    out.exact = exact_stationary_hitting(g, x);
    out.ratio = out.prediction / *out.exact;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partition of V by p-bar / T
// ---------------------------------------------------------------------------

struct VertexRatio {
  Vertex x = 0;
  Estimate success;
  Estimate cycle;
  double ratio = 0;         // p-bar / T
  double ratio_stderr = 0;
  std::int64_t k = 0;       // bucket index
  bool noisy = false;       // 1-sigma interval spans more than one bucket
};

struct PartitionClass {
  std::int64_t k = 0;
  std::vector<Vertex> vertices;  // measured members
  double size = 0;               // |H_k|, extrapolated when sampled
  double d = 0;                  // log |H_k| / log |V|
  double C = 0;                  // |V| / (min_deg k eps) d log |V|; inf for k = 0
};

struct PartitionReport {
  double epsilon = 0;
  std::size_t vertex_count = 0;
  std::uint32_t min_degree = 0;
  bool pooled = false;        // one estimate shared by a vertex-transitive graph
  bool extrapolated = false;  // class sizes scaled up from a vertex sample
  std::vector<VertexRatio> vertices;
  std::vector<PartitionClass> classes;
  double C = 0;
  std::vector<Vertex> noisy_vertices;
};

// Bucket k with min_deg k eps / |V| < ratio <= min_deg (k+1) eps / |V|.
inline std::int64_t partition_bucket(double ratio, double width) {
  auto k = static_cast<std::int64_t>(std::ceil(ratio / width)) - 1;
  // Guard the half-open edges against rounding in ratio / width.
  if (static_cast<double>(k + 1) * width < ratio) ++k;
  if (k > 0 && static_cast<double>(k) * width >= ratio) --k;
  return std::max<std::int64_t>(k, 0);
}

inline PartitionReport partition_H(const GraphTopology& g, double epsilon, const ExcursionParams& params,
                                   std::size_t replicas, std::uint64_t seed, unsigned threads = 1,
                                   std::size_t sample_cap = 4096, std::size_t sample_size = 256) {
  if (!(epsilon > 0.0)) fail(Errc::InvalidSpec, "epsilon must be positive");
  const std::size_t n = g.vertex_count();
  PartitionReport rep;
  rep.epsilon = epsilon;
  rep.vertex_count = n;
  rep.min_degree = static_cast<std::uint32_t>(degree_stats(g).min_degree);
  const double width = static_cast<double>(rep.min_degree) * epsilon / static_cast<double>(n);

  std::vector<Vertex> measured;
  if (g.vertex_transitive()) {
    rep.pooled = true;
    measured.push_back(0);
  } else if (n <= sample_cap) {
    for (Vertex v = 0; v < n; ++v) measured.push_back(v);
  } else {
    rep.extrapolated = true;
    Rng rng(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL), 0);
    std::vector<Vertex> all(n);
    for (Vertex v = 0; v < n; ++v) all[v] = v;
    for (std::size_t i = 0; i < sample_size; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
    measured.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sample_size));
    std::sort(measured.begin(), measured.end());
  }

  // T_mix^U is a graph property: resolve it once.
  ExcursionParams p = params;
  if (!p.t_mix_uniform) {
    if (n > kDenseCap) fail(Errc::CapExceeded, "graph above the dense cap: supply t_mix_uniform explicitly");
    p.t_mix_uniform = uniform_mixing_time(g);
  }
  rep.vertices.resize(measured.size());
  // Parallel over vertices; replicas inside each vertex run serially.
  parallel_for(measured.size(), threads, [&](std::size_t i) {
    const Vertex x = measured[i];
    const auto geo = resolve_geometry(g, {x}, p);
    const auto s = sample_first_cycle(g, geo, replicas, stream_seed(seed, x), 1);
    VertexRatio& vr = rep.vertices[i];
    vr.x = x;
    vr.success = s.success;
    vr.cycle = s.cycle;
    vr.ratio = s.success.mean / s.cycle.mean;
    vr.ratio_stderr = vr.ratio * std::hypot(s.cycle.stderr_ / s.cycle.mean,
                                            s.success.mean > 0 ? s.success.stderr_ / s.success.mean : 0.0);
    vr.k = partition_bucket(vr.ratio, width);
    vr.noisy = 2.0 * vr.ratio_stderr > width;
  });

  std::map<std::int64_t, PartitionClass> classes;
  for (const auto& vr : rep.vertices) {
    auto& c = classes[vr.k];
    c.k = vr.k;
    c.vertices.push_back(vr.x);
    if (vr.noisy) rep.noisy_vertices.push_back(vr.x);
  }
  const double logn = std::log(static_cast<double>(n));
  rep.C = 0.0;
  for (auto& [k, c] : classes) {
    if (rep.pooled) {
      c.size = static_cast<double>(n);
      c.vertices.clear();
      for (Vertex v = 0; v < n; ++v) c.vertices.push_back(v);
    } else {
      c.size = static_cast<double>(c.vertices.size()) * static_cast<double>(n) /
               static_cast<double>(measured.size());
    }
    c.d = std::log(c.size) / logn;
    c.C = k == 0 ? std::numeric_limits<double>::infinity()
                 : static_cast<double>(n) / (static_cast<double>(rep.min_degree) * static_cast<double>(k) * epsilon) *
                       c.d * logn;
    rep.C = std::max(rep.C, c.C);
    rep.classes.push_back(std::move(c));
  }
  return rep;
}

inline nlohmann::json to_json(const PartitionReport& rep) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "nan";
  };
  nlohmann::json j;
  j["epsilon"] = rep.epsilon;
  j["vertex_count"] = rep.vertex_count;
  j["min_degree"] = rep.min_degree;
  j["pooled"] = rep.pooled;
  j["extrapolated"] = rep.extrapolated;
  j["C"] = num(rep.C);
  j["noisy_vertices"] = rep.noisy_vertices;
  auto& cls = j["classes"] = nlohmann::json::array();
  for (const auto& c : rep.classes)
    cls.push_back({{"k", c.k}, {"size", c.size}, {"measured", c.vertices.size()}, {"d", c.d}, {"C", num(c.C)},
                   {"extrapolated", rep.extrapolated}});
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const auto& v : rep.vertices)
    vs.push_back({{"x", v.x}, {"p_bar", v.success.mean}, {"T", v.cycle.mean}, {"ratio", v.ratio},
                  {"ratio_stderr", v.ratio_stderr}, {"k", v.k}, {"noisy", v.noisy}});
  return j;
}

// ---------------------------------------------------------------------------
// Conditional hit probabilities
// ---------------------------------------------------------------------------

// Per-pair table keyed by (entry of excursion j, entry of excursion j+1).
class EntryPairTable {
 public:
  void add(const ExcursionTrace& trace) {
    const auto& ex = trace.excursions;
    for (std::size_t j = 0; j + 1 < ex.size(); ++j) {
      auto& c = cells_[{ex[j].entry, ex[j + 1].entry}];
      ++c.second;
      if (ex[j].hit) ++c.first;
    }
  }
  // Empirical p_j for a pair, nullopt if never seen.
  std::optional<double> p(Vertex z, Vertex z_next) const {
    auto it = cells_.find({z, z_next});
    if (it == cells_.end()) return std::nullopt;
    return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  }
  std::size_t pairs() const { return cells_.size(); }
  // p_j along a trace (length excursions - 1); unseen pairs fall back to the overall mean.
  std::vector<double> sequence(const ExcursionTrace& trace) const {
    std::size_t hits = 0, total = 0;
    for (const auto& [key, c] : cells_) {
      hits += c.first;
      total += c.second;
    }
    const double overall = total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
    std::vector<double> out;
    const auto& ex = trace.excursions;
    for (std::size_t j = 0; j + 1 < ex.size(); ++j) out.push_back(p(ex[j].entry, ex[j + 1].entry).value_or(overall));
    return out;
  }

 private:
  std::map<std::pair<Vertex, Vertex>, std::pair<std::size_t, std::size_t>> cells_;
};

// q(z, w) = P[target hit in [tau, sigma + T_alpha] | X(tau) = z, X(sigma) = w]
// for a single target x. By the strong Markov property at the first visit to x,
//   P_z[hit before exit, exit at w] = h(z) u_w(x),
// where h(z) = P_z[hit x before leaving B(x,R)] and u_w is harmonic measure
// of w. After the exit the window adds f_w = P_w[hit x within T_alpha steps].
class PairHitSolver {
 public:
  PairHitSolver(const GraphTopology& g, const ExcursionGeometry& geo)
      : g_(&g), geo_(&geo), ball_solver_(g, ball_mask(geo, true)) {
    if (geo.targets.size() != 1) fail(Errc::InvalidSpec, "pair hit probabilities need a single target");
    require_dense(g);
    const Vertex x = geo.targets[0];
    const std::size_t n = g.vertex_count();
    {
      DirichletSolver hs(g, ball_mask(geo, false));
      std::vector<double> src(n, 0.0), bnd(n, 0.0);
      bnd[x] = 1.0;
      h_ = hs.solve(src, bnd);
    }
    // f_t(v) = P_v[tau_x <= t], iterated T_alpha times.
    f_.assign(n, 0.0);
    f_[x] = 1.0;
    std::vector<double> next(n);
    for (Time t = 0; t < geo.window; ++t) {
      for (Vertex v = 0; v < n; ++v) {
        if (v == x) {
          next[v] = 1.0;
          continue;
        }
        double acc = 0.0;
        for (Vertex u : g.neighbors(v)) acc += f_[u];
        next[v] = 0.5 * f_[v] + 0.5 * acc / static_cast<double>(g.degree(v));
      }
      f_.swap(next);
    }
  }

  double h(Vertex z) const { return h_[z]; }
  double window_hit(Vertex w) const { return f_[w]; }

  const std::vector<double>& harmonic_measure(Vertex w) {
    auto it = u_.find(w);
    if (it != u_.end()) return it->second;
    const std::size_t n = g_->vertex_count();
    std::vector<double> src(n, 0.0), bnd(n, 0.0);
    bnd[w] = 1.0;
    return u_.emplace(w, ball_solver_.solve(src, bnd)).first->second;
  }

  double q(Vertex z, Vertex w) {
    const auto& u = harmonic_measure(w);
    const Vertex x = geo_->targets[0];
    if (!(u[z] > 0.0)) fail(Errc::InvalidSpec, "exit vertex unreachable from entry vertex");
    const double inside = std::min(1.0, h_[z] * u[x] / u[z]);
    return 1.0 - (1.0 - inside) * (1.0 - f_[w]);
  }

 private:
  // Interior of B(x,R); without the target itself when `with_target` is false.
  static std::vector<std::uint8_t> ball_mask(const ExcursionGeometry& geo, bool with_target) {
    std::vector<std::uint8_t> m(geo.dist.size(), 0);
    for (std::size_t v = 0; v < m.size(); ++v) m[v] = geo.dist[v] <= geo.R;
    if (!with_target)
      for (Vertex x : geo.targets) m[x] = 0;
    return m;
  }

  const GraphTopology* g_;
  const ExcursionGeometry* geo_;
  DirichletSolver ball_solver_;
  std::vector<double> h_, f_;
  std::map<Vertex, std::vector<double>> u_;
};

struct QStatistics {
  std::vector<double> q;             // q_j along the trace
  std::vector<double> log_product;   // log prod_{i<=j} (1 - q_i); -inf once a q_j = 1
  double max_q = 0;
  bool exact = true;                 // false: per-pair empirical fallback above the dense cap
  std::vector<std::pair<Vertex, Vertex>> unit_pairs;  // observed (entry, exit) pairs with q = 1
  double product() const { return log_product.empty() ? 1.0 : std::exp(log_product.back()); }
};

inline constexpr double kUnitQTolerance = 1e-12;

inline QStatistics q_statistics(const GraphTopology& g, const ExcursionGeometry& geo, const ExcursionTrace& trace) {
  QStatistics out;
  const auto& ex = trace.excursions;
  std::vector<double> q(ex.size());
  if (g.vertex_count() <= kDenseCap) {
    PairHitSolver solver(g, geo);
    for (std::size_t j = 0; j < ex.size(); ++j) q[j] = solver.q(ex[j].entry, ex[j].exit);
  } else {
    out.exact = false;
    std::map<std::pair<Vertex, Vertex>, std::pair<std::size_t, std::size_t>> cells;
    for (const auto& e : ex) {
      auto& c = cells[{e.entry, e.exit}];
      ++c.second;
      c.first += e.hit ? 1 : 0;
    }
    for (std::size_t j = 0; j < ex.size(); ++j) {
      const auto& c = cells[{ex[j].entry, ex[j].exit}];
      q[j] = static_cast<double>(c.first) / static_cast<double>(c.second);
    }
  }
  std::set<std::pair<Vertex, Vertex>> unit;
  double acc = 0.0;
  for (std::size_t j = 0; j < ex.size(); ++j) {
    out.max_q = std::max(out.max_q, q[j]);
    if (q[j] >= 1.0 - kUnitQTolerance) {
      unit.insert({ex[j].entry, ex[j].exit});
      acc = -std::numeric_limits<double>::infinity();
    } else {
      acc += std::log1p(-q[j]);
    }
    out.log_product.push_back(acc);
  }
  out.q = std::move(q);
  out.unit_pairs.assign(unit.begin(), unit.end());
  return out;
}

inline QStatistics q_statistics(const GraphTopology& g, Vertex x, const ExcursionParams& params,
                                std::span<const Vertex> trajectory) {
  const auto geo = resolve_geometry(g, {x}, params);
  return q_statistics(g, geo, decompose(geo, trajectory));
}

}  // namespace rwlab
