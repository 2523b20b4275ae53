#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "rwlab/error.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/stats.hpp"
#include "rwlab/walker.hpp"

namespace rwlab {

// Steps corresponding to a fraction alpha of the reference cover time (floor).
inline Time horizon_for(double alpha, double t_cov_ref) {
  if (!(alpha >= 0.0)) fail(Errc::InvalidSpec, "alpha must be >= 0");
  if (!(t_cov_ref > 0.0)) fail(Errc::InvalidSpec, "cover-time reference must be positive");
  return static_cast<Time>(std::floor(alpha * t_cov_ref));
}

struct LateSet {
  std::vector<Vertex> vertices;
  double alpha = 0.0;
  double t_cov_ref = 0.0;
  Time horizon = 0;
};

// V minus the stationary-start range at floor(alpha * t_cov_ref).
inline LateSet late_set(const GraphTopology& g, double alpha, double t_cov_ref, const WalkConfig& config) {
  LateSet out;
  out.alpha = alpha;
  out.t_cov_ref = t_cov_ref;
  out.horizon = horizon_for(alpha, t_cov_ref);
  const auto rec = run_range(g, config, out.horizon);
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (!rec.visited[v]) out.vertices.push_back(v);
  return out;
}

inline LateSet late_set(const GraphTopology& g, double alpha, double t_cov_ref, Rng& rng) {
  return late_set(g, alpha, t_cov_ref, WalkConfig{rng.next(), 0, std::nullopt});
}

enum class MarkingSource { Mu, Uniform };

struct Marking {
  std::vector<std::uint8_t> bits;
  MarkingSource provenance = MarkingSource::Uniform;
  double alpha = 0.0;
  double t_cov_ref = 0.0;

  std::size_t zeros() const {
    std::size_t z = 0;
    for (auto b : bits) z += b == 0;
    return z;
  }
};

// The coins xi(x) for every vertex come from their own stream, so that for a
// fixed replica the marking is xi restricted to the range: growing alpha can
// only turn zeros into coin values (common random numbers across alpha).
inline std::vector<std::uint8_t> marking_coins(std::size_t n, std::uint64_t seed, std::uint64_t replica) {
  Rng coins(splitmix64(seed ^ 0xa0761d6478bd642fULL), replica);
  std::vector<std::uint8_t> xi(n);
  for (auto& b : xi) b = coins.coin();
  return xi;
}

inline Marking marking_from_range(const RangeRecord& range, std::vector<std::uint8_t> xi) {
  Marking m;
  m.provenance = MarkingSource::Mu;
  m.bits = std::move(xi);
  for (std::size_t v = 0; v < m.bits.size(); ++v)
    if (!range.visited[v]) m.bits[v] = 0;
  return m;
}

inline Marking sample_marking_mu(const GraphTopology& g, double alpha, double t_cov_ref, const WalkConfig& config) {
  const auto range = run_range(g, config, horizon_for(alpha, t_cov_ref));
  Marking m = marking_from_range(range, marking_coins(g.vertex_count(), config.seed, config.replica_index));
  m.alpha = alpha;
  m.t_cov_ref = t_cov_ref;
  return m;
}

inline Marking sample_marking_mu(const GraphTopology& g, double alpha, double t_cov_ref, Rng& rng) {
  return sample_marking_mu(g, alpha, t_cov_ref, WalkConfig{rng.next(), 0, std::nullopt});
}

inline Marking sample_marking_uniform(const GraphTopology& g, Rng& rng) {
  Marking m;
  m.provenance = MarkingSource::Uniform;
  m.bits.resize(g.vertex_count());
  for (auto& b : m.bits) b = rng.coin();
  return m;
}

// z = (zeros - |V|/2) / (sqrt|V| / 2)
inline double zero_count_statistic(std::span<const std::uint8_t> bits) {
  const double n = static_cast<double>(bits.size());
  std::size_t zeros = 0;
  for (auto b : bits) zeros += b == 0;
  return (static_cast<double>(zeros) - n / 2.0) / (std::sqrt(n) / 2.0);
}

inline double zero_count_statistic(const Marking& m) { return zero_count_statistic(m.bits); }

struct DistinguisherConfig {
  double zeta = std::numbers::ln2;  // exponential-moment base e^zeta
  double z_threshold = 3.0;
  std::size_t replicas = 1000;
  std::size_t pairs = 2000;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const {
    if (!(zeta > 0.0)) fail(Errc::InvalidSpec, "zeta must be positive");
    if (replicas < 2) fail(Errc::InvalidSpec, "replicas must be >= 2");
    if (pairs < 2) fail(Errc::InvalidSpec, "pairs must be >= 2");
  }
};

struct DistinguisherResult {
  std::size_t rejections = 0;
  std::size_t replicas = 0;
  Estimate power;
  std::vector<double> z;           // per replica
  std::vector<std::size_t> late;   // per replica |L|, Mu runs only
};

// Fraction of Mu(alpha) markings whose zero-count statistic exceeds the threshold.
inline DistinguisherResult distinguisher_power(const GraphTopology& g, double alpha, double t_cov_ref,
                                               const DistinguisherConfig& config) {
  config.validate();
  const Time T = horizon_for(alpha, t_cov_ref);
  DistinguisherResult out;
  out.replicas = config.replicas;
  out.z.resize(config.replicas);
  out.late.resize(config.replicas);
  parallel_for(config.replicas, config.threads, [&](std::size_t r) {
    const WalkConfig wc{config.seed, r, std::nullopt};
    const auto range = run_range(g, wc, T);
    const auto m = marking_from_range(range, marking_coins(g.vertex_count(), config.seed, r));
    out.z[r] = zero_count_statistic(m);
    out.late[r] = g.vertex_count() - range.visited_count;
  });
  for (double z : out.z) out.rejections += z > config.z_threshold;
  out.power = proportion(out.rejections, out.replicas);
  return out;
}

// Same harness on fully uniform markings: the false-rejection rate.
inline DistinguisherResult uniform_rejection(const GraphTopology& g, const DistinguisherConfig& config) {
  config.validate();
  DistinguisherResult out;
  out.replicas = config.replicas;
  out.z.resize(config.replicas);
  parallel_for(config.replicas, config.threads, [&](std::size_t r) {
    Rng rng(splitmix64(config.seed ^ 0x1d8e4e27c47d124fULL), r);
    out.z[r] = zero_count_statistic(sample_marking_uniform(g, rng));
  });
  for (double z : out.z) out.rejections += z > config.z_threshold;
  out.power = proportion(out.rejections, out.replicas);
  return out;
}

inline constexpr double kOverflowExponent = 500.0;  // in units of log 2

struct ExpMomentResult {
  Estimate m_hat;        // E exp(zeta |L ∩ L'|)
  double tv_upper = 0.0; // (1/2) sqrt(max(m_hat - 1, 0)), meaningful for zeta = ln 2
  bool overflow = false; // some term exceeded 2^500
  Estimate intersection; // E |L ∩ L'|
  std::vector<std::size_t> intersections;
};

inline ExpMomentResult exp_moment_from_intersections(std::vector<std::size_t> counts, double zeta) {
  ExpMomentResult out;
  RunningStats terms, inter;
  for (std::size_t k : counts) {
    const double expo = zeta * static_cast<double>(k);
    if (expo > kOverflowExponent * std::numbers::ln2) out.overflow = true;
    terms.add(std::exp(expo));
    inter.add(static_cast<double>(k));
  }
  out.m_hat = terms.estimate();
  out.intersection = inter.estimate();
  out.tv_upper = 0.5 * std::sqrt(std::max(out.m_hat.mean - 1.0, 0.0));
  out.intersections = std::move(counts);
  return out;
}

// E exp(zeta |L ∩ L'|) at horizon T. Pair p uses replicas 2p and 2p+1 of the
// configured seed.
inline ExpMomentResult exp_moment_at(const GraphTopology& g, Time T, const DistinguisherConfig& config) {
  config.validate();
  std::vector<std::size_t> counts(config.pairs);
  parallel_for(config.pairs, config.threads, [&](std::size_t p) {
    const auto a = run_range(g, WalkConfig{config.seed, 2 * p, std::nullopt}, T);
    const auto b = run_range(g, WalkConfig{config.seed, 2 * p + 1, std::nullopt}, T);
    std::size_t k = 0;
    for (std::size_t v = 0; v < a.visited.size(); ++v) k += !a.visited[v] && !b.visited[v];
    counts[p] = k;
  });
  return exp_moment_from_intersections(std::move(counts), config.zeta);
}

// Same estimator at the horizon floor(alpha * t_cov_ref).
inline ExpMomentResult exp_moment_estimate(const GraphTopology& g, double alpha, double t_cov_ref,
                                           const DistinguisherConfig& config) {
  return exp_moment_at(g, horizon_for(alpha, t_cov_ref), config);
}

struct CorrelationResult {
  std::size_t replicas = 0;
  std::size_t joint_count = 0;
  Estimate p_joint;
  std::vector<Estimate> p_single;
  double product = 0.0;
  double ratio = 0.0;        // NaN when joint_count < 10
  Interval ratio_interval;   // from Wilson intervals of the joint frequency
  double reference = 0.0;    // |V|^{-l alpha}
  bool insufficient_events = false;
};

inline CorrelationResult correlation_ratio(const GraphTopology& g, double alpha, double t_cov_ref,
                                           const std::vector<Vertex>& points, std::size_t replicas,
                                           std::uint64_t seed, unsigned threads = 1) {
  if (points.empty()) fail(Errc::InvalidSpec, "correlation_ratio needs at least one point");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i] == points[j]) fail(Errc::InvalidSpec, "points must be distinct");
  const Time T = horizon_for(alpha, t_cov_ref);
  const std::size_t l = points.size();
  // Per replica: bit i = point i late, bit l = all late.
  std::vector<std::uint64_t> flags(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t r) {
    const auto rec = run_range(g, WalkConfig{seed, r, std::nullopt}, T);
    std::uint64_t f = 0;
    bool all = true;
    for (std::size_t i = 0; i < l; ++i) {
      const bool late = !rec.visited[points[i]];
      if (late) f |= std::uint64_t{1} << i;
      all = all && late;
    }
    flags[r] = f | (all ? std::uint64_t{1} << 63 : 0);
  });
  CorrelationResult out;
  out.replicas = replicas;
  std::vector<std::size_t> single(l, 0);
  for (auto f : flags) {
    for (std::size_t i = 0; i < l; ++i) single[i] += (f >> i) & 1;
    out.joint_count += (f >> 63) & 1;
  }
  out.p_joint = proportion(out.joint_count, replicas);
  out.product = 1.0;
  for (std::size_t i = 0; i < l; ++i) {
    out.p_single.push_back(proportion(single[i], replicas));
    out.product *= out.p_single.back().mean;
  }
  if (out.product == 0.0)
    fail(Errc::InsufficientEvents, "a point was never late; increase replicas or lower alpha");
  out.reference = std::pow(static_cast<double>(g.vertex_count()), -static_cast<double>(l) * alpha);
  const Interval ji = wilson_interval(out.joint_count, replicas);
  out.ratio_interval = {ji.lo / out.product, ji.hi / out.product};
  out.insufficient_events = out.joint_count < 10;
  out.ratio = out.insufficient_events ? std::numeric_limits<double>::quiet_NaN() : out.p_joint.mean / out.product;
  return out;
}

inline std::vector<std::size_t> late_set_sizes(const GraphTopology& g, double alpha, double t_cov_ref,
                                               std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  const Time T = horizon_for(alpha, t_cov_ref);
  std::vector<std::size_t> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    out[r] = g.vertex_count() - run_range(g, WalkConfig{seed, r, std::nullopt}, T).visited_count;
  });
  return out;
}

// CSV: replica,late_size,z
inline void write_distinguisher_csv(std::ostream& os, const DistinguisherResult& r) {
  os << "replica,late_size,z\n";
  for (std::size_t i = 0; i < r.z.size(); ++i)
    os << i << ',' << (i < r.late.size() ? r.late[i] : 0) << ',' << format_double(r.z[i]) << '\n';
}

// CSV: pair,intersection
inline void write_intersections_csv(std::ostream& os, const ExpMomentResult& r) {
  os << "pair,intersection\n";
  for (std::size_t i = 0; i < r.intersections.size(); ++i) os << i << ',' << r.intersections[i] << '\n';
}

}  // namespace rwlab
