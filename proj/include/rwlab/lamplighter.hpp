#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rwlab/error.hpp"
#include "rwlab/format.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/latepoints.hpp"
#include "rwlab/oracle.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/rng.hpp"
#include "rwlab/walker.hpp"

namespace rwlab {

// (f, x): lamp configuration over the base vertices and the lamplighter position.
struct LampState {
  std::vector<std::uint8_t> lamps;
  Vertex position = 0;

  bool operator==(const LampState&) const = default;
};

inline void validate_state(const GraphTopology& g, const LampState& s) {
  if (s.lamps.size() != g.vertex_count()) fail(Errc::InvalidSpec, "lamp vector length differs from |V|");
  if (s.position >= g.vertex_count()) fail(Errc::InvalidSpec, "lamplighter position out of range");
  for (auto b : s.lamps)
    if (b > 1) fail(Errc::InvalidSpec, "lamps must be 0 or 1");
}

// Text form "<position>:<hex>". Hex digit i from the right holds lamps 4i..4i+3,
// lamp 4i in its lowest bit.
inline std::string encode_lamp_state(const LampState& s) {
  static constexpr char kHex[] = "0123456789abcdef";
  const std::size_t digits = std::max<std::size_t>(1, (s.lamps.size() + 3) / 4);
  std::string hex(digits, '0');
  for (std::size_t v = 0; v < s.lamps.size(); ++v)
    if (s.lamps[v]) {
      char& c = hex[digits - 1 - v / 4];
      const int val = static_cast<int>(std::string_view(kHex).find(c)) | (1 << (v % 4));
      c = kHex[val];
    }
  return std::to_string(s.position) + ":" + hex;
}

inline LampState decode_lamp_state(std::string_view text, std::size_t vertex_count) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0) fail(Errc::InvalidSpec, "lamp state needs '<pos>:<hex>'");
  LampState s;
  try {
    std::size_t used = 0;
    const std::string pos(text.substr(0, colon));
    const unsigned long p = std::stoul(pos, &used);
    if (used != pos.size()) throw std::invalid_argument("pos");
    s.position = static_cast<Vertex>(p);
  } catch (const std::exception&) {
    fail(Errc::InvalidSpec, "bad lamplighter position in lamp state");
  }
  const auto hex = text.substr(colon + 1);
  const std::size_t digits = std::max<std::size_t>(1, (vertex_count + 3) / 4);
  if (hex.size() != digits) fail(Errc::InvalidSpec, "hex length does not match the vertex count");
  s.lamps.assign(vertex_count, 0);
  for (std::size_t i = 0; i < digits; ++i) {
    const char c = hex[digits - 1 - i];
    int val;
    if (c >= '0' && c <= '9') val = c - '0';
    else if (c >= 'a' && c <= 'f') val = c - 'a' + 10;
    else fail(Errc::InvalidSpec, "bad hex digit in lamp state");
    for (int b = 0; b < 4; ++b) {
      const std::size_t v = 4 * i + static_cast<std::size_t>(b);
      if (!((val >> b) & 1)) continue;
      if (v >= vertex_count) fail(Errc::InvalidSpec, "lamp bit beyond the vertex count");
      s.lamps[v] = 1;
    }
  }
  if (s.position >= vertex_count) fail(Errc::InvalidSpec, "lamplighter position out of range");
  return s;
}

// One lamplighter step in place: y ~ p(x, .), fresh coins for f(x) and f(y),
// move to y. On a hold (y = x) the single lamp f(x) gets one coin.
inline void lamplighter_advance(const GraphTopology& g, LampState& s, Rng& rng) {
  const Vertex x = s.position;
  const Vertex y = step(g, x, rng);
  s.lamps[x] = rng.coin() ? 1 : 0;
  if (y != x) s.lamps[y] = rng.coin() ? 1 : 0;
  s.position = y;
}

inline LampState lamplighter_step(const GraphTopology& g, LampState s, Rng& rng) {
  validate_state(g, s);
  lamplighter_advance(g, s, rng);
  return s;
}

// ---------------------------------------------------------------------------
// Explicit state space (tiny bases only)
// ---------------------------------------------------------------------------

inline constexpr std::size_t kWreathCap = 16;

inline void require_wreath(const GraphTopology& g, std::size_t cap = kWreathCap) {
  if (g.vertex_count() > cap)
    fail(Errc::CapExceeded, "lamplighter state space |V| 2^|V| too large (|V| = " +
                                std::to_string(g.vertex_count()) + ", cap " + std::to_string(cap) + ")");
}

// State index x 2^|V| + f, lamp v in bit v of f.
inline std::uint64_t state_index(std::size_t n, Vertex x, std::uint64_t f) { return (std::uint64_t{x} << n) | f; }

inline std::uint64_t state_index(const LampState& s) {
  std::uint64_t f = 0;
  for (std::size_t v = 0; v < s.lamps.size(); ++v) f |= std::uint64_t{s.lamps[v]} << v;
  return state_index(s.lamps.size(), s.position, f);
}

inline LampState state_from_index(std::size_t n, std::uint64_t idx) {
  LampState s;
  s.position = static_cast<Vertex>(idx >> n);
  s.lamps.resize(n);
  for (std::size_t v = 0; v < n; ++v) s.lamps[v] = (idx >> v) & 1;
  return s;
}

// G^⋄: (f,x) ~ (h,y) iff x ~ y in G and f = h off {x, y}.
inline GraphTopology wreath_graph(const GraphTopology& g) {
  require_wreath(g);
  const std::size_t n = g.vertex_count();
  const std::uint64_t configs = std::uint64_t{1} << n;
  std::vector<Edge> edges;
  edges.reserve(g.edge_count() * static_cast<std::size_t>(configs) * 4);
  for (const auto& [x, y] : g.edges()) {
    const std::uint64_t mask = (std::uint64_t{1} << x) | (std::uint64_t{1} << y);
    for (std::uint64_t base = 0; base < configs; ++base) {
      if (base & mask) continue;
      for (std::uint64_t a = 0; a < 4; ++a)
        for (std::uint64_t b = 0; b < 4; ++b) {
          const std::uint64_t f = base | ((a & 1) << x) | ((a >> 1) << y);
          const std::uint64_t h = base | ((b & 1) << x) | ((b >> 1) << y);
          edges.emplace_back(static_cast<Vertex>(state_index(n, x, f)), static_cast<Vertex>(state_index(n, y, h)));
        }
    }
  }
  return GraphTopology::from_edges(n * configs, edges, Imported{"wreath(" + family_label(g.family()) + ")"});
}

// pi(x) / 2^|V| for every state.
inline std::vector<double> lamplighter_stationary(const GraphTopology& g) {
  require_wreath(g);
  const std::size_t n = g.vertex_count();
  const std::uint64_t configs = std::uint64_t{1} << n;
  std::vector<double> pi(n * configs);
  for (Vertex x = 0; x < n; ++x) {
    const double w = static_cast<double>(g.degree(x)) / static_cast<double>(g.total_degree()) /
                     static_cast<double>(configs);
    std::fill(pi.begin() + static_cast<std::ptrdiff_t>(x * configs),
              pi.begin() + static_cast<std::ptrdiff_t>((x + 1) * configs), w);
  }
  return pi;
}

// mu -> mu P for the lamplighter kernel, without materializing P.
inline std::vector<double> lamplighter_push(const GraphTopology& g, const std::vector<double>& mu) {
  const std::size_t n = g.vertex_count();
  const std::uint64_t configs = std::uint64_t{1} << n;
  std::vector<double> out(mu.size(), 0.0);
  for (Vertex x = 0; x < n; ++x) {
    const std::uint64_t bx = std::uint64_t{1} << x;
    const double move = 1.0 / (8.0 * static_cast<double>(g.degree(x)));
    for (std::uint64_t f = 0; f < configs; ++f) {
      const double m = mu[state_index(n, x, f)];
      if (m == 0.0) continue;
      // Hold: f(x) re-randomized.
      out[state_index(n, x, f & ~bx)] += 0.25 * m;
      out[state_index(n, x, f | bx)] += 0.25 * m;
      for (Vertex y : g.neighbors(x)) {
        const std::uint64_t base = f & ~(bx | (std::uint64_t{1} << y));
        for (std::uint64_t a = 0; a < 4; ++a)
          out[state_index(n, y, base | ((a & 1) << x) | ((a >> 1) << y))] += move * m;
      }
    }
  }
  return out;
}

inline double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

// TV(t), t = 0..t_max, from one start state.
inline std::vector<double> exact_tv_from(const GraphTopology& g, const LampState& start, std::size_t t_max) {
  require_wreath(g);
  validate_state(g, start);
  const auto pi = lamplighter_stationary(g);
  std::vector<double> mu(pi.size(), 0.0);
  mu[state_index(start)] = 1.0;
  std::vector<double> out;
  out.reserve(t_max + 1);
  out.push_back(tv_distance(mu, pi));
  for (std::size_t t = 1; t <= t_max; ++t) {
    mu = lamplighter_push(g, mu);
    out.push_back(tv_distance(mu, pi));
  }
  return out;
}

// Worst-start TV(t). Flipping any fixed set of lamps commutes with the kernel
// and preserves the stationary law, so starts with all lamps off cover every
// start up to that symmetry; only the position is maximized over.
inline std::vector<double> exact_tv_curve(const GraphTopology& g, std::size_t t_max, unsigned threads = 1) {
  require_wreath(g);
  const std::size_t n = g.vertex_count();
  std::vector<std::vector<double>> per(n);
  parallel_for(n, threads, [&](std::size_t x) {
    per[x] = exact_tv_from(g, LampState{std::vector<std::uint8_t>(n, 0), static_cast<Vertex>(x)}, t_max);
  });
  std::vector<double> out(t_max + 1, 0.0);
  for (const auto& c : per)
    for (std::size_t t = 0; t <= t_max; ++t) out[t] = std::max(out[t], c[t]);
  return out;
}

// First t with TV(t) <= eps on a computed curve, if any.
inline std::optional<std::size_t> first_below(const std::vector<double>& curve, double eps) {
  for (std::size_t t = 0; t < curve.size(); ++t)
    if (curve[t] <= eps) return t;
  return std::nullopt;
}

// TV between the empirical law of `replicas` chains and the stationary law, t = 0..t_max.
inline std::vector<double> empirical_tv_curve(const GraphTopology& g, const LampState& start, std::size_t t_max,
                                              std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  require_wreath(g);
  validate_state(g, start);
  const auto pi = lamplighter_stationary(g);
  // Per-replica index sequences, merged in replica order.
  std::vector<std::vector<std::uint64_t>> paths(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    Rng rng(seed, r);
    LampState s = start;
    auto& p = paths[r];
    p.reserve(t_max + 1);
    p.push_back(state_index(s));
    for (std::size_t t = 0; t < t_max; ++t) {
      lamplighter_advance(g, s, rng);
      p.push_back(state_index(s));
    }
  });
  std::vector<double> out;
  std::vector<double> emp(pi.size());
  for (std::size_t t = 0; t <= t_max; ++t) {
    std::fill(emp.begin(), emp.end(), 0.0);
    for (const auto& p : paths) emp[p[t]] += 1.0 / static_cast<double>(replicas);
    out.push_back(tv_distance(emp, pi));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cutoff probe
// ---------------------------------------------------------------------------

struct CutoffConfig {
  double t_cov_ref = 0.0;        // T-hat_cov
  std::size_t samples = 2000;    // markings per side for tv_lower
  std::size_t pairs = 2000;      // replica pairs for the exponential moment
  double zeta = std::numbers::ln2;
  std::size_t bins = 49;
  double bin_width = 0.2;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<std::size_t> t_mix_uniform;  // residual position-mixing budget; oracle if absent

  void validate() const {
    if (!(t_cov_ref > 0.0)) fail(Errc::InvalidSpec, "cutoff probe needs a positive cover-time reference");
    if (samples < 2 || pairs < 2) fail(Errc::InvalidSpec, "cutoff probe needs at least 2 samples and pairs");
    if (bins < 1 || !(bin_width > 0.0)) fail(Errc::InvalidSpec, "cutoff probe needs positive bins");
  }
};

struct CutoffPoint {
  double alpha = 0.0;
  Time horizon = 0;
  Time residual = 0;          // s: steps reserved for position mixing
  double tv_lower = 0.0;
  double tv_upper = 0.0;      // min(1, lamp_tv_upper + base_tv)
  double lamp_tv_upper = 0.0; // exponential-moment bound at horizon - s
  double base_tv = 0.0;       // worst-start base-walk TV at s
  bool overflow = false;
  Estimate m_hat;
  double mean_z_mu = 0.0;
  double mean_z_uniform = 0.0;
};

struct CutoffReport {
  std::vector<double> alpha_grid;
  std::vector<double> tv_lower;
  std::vector<double> tv_upper;
  std::vector<CutoffPoint> points;
  std::optional<double> lower_drop;   // first alpha with tv_lower < 0.5
  std::optional<double> upper_drop;   // first alpha with tv_upper <= 0.25
  std::optional<double> crossing_estimate;
};

// TV between two samples after binning onto `bins` cells of `width` centred on
// zero; values outside are clamped into the end cells.
inline double binned_tv(const std::vector<double>& a, const std::vector<double>& b, std::size_t bins, double width) {
  if (a.empty() || b.empty()) fail(Errc::InsufficientSamples, "binned TV needs two nonempty samples");
  const double lo = -0.5 * static_cast<double>(bins) * width;
  auto cell = [&](double z) {
    const double c = std::floor((z - lo) / width);
    if (!(c >= 0.0)) return std::size_t{0};
    return std::min(bins - 1, static_cast<std::size_t>(c));
  };
  std::vector<double> p(bins, 0.0), q(bins, 0.0);
  for (double z : a) p[cell(z)] += 1.0 / static_cast<double>(a.size());
  for (double z : b) q[cell(z)] += 1.0 / static_cast<double>(b.size());
  return tv_distance(p, q);
}

inline CutoffReport cutoff_probe(const GraphTopology& g, const std::vector<double>& alpha_grid,
                                 const CutoffConfig& config) {
  config.validate();
  if (alpha_grid.empty()) fail(Errc::InvalidSpec, "alpha grid is empty");
  if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end())) fail(Errc::InvalidSpec, "alpha grid must be ascending");
  const std::size_t tu = config.t_mix_uniform ? *config.t_mix_uniform : uniform_mixing_time(g);
  const auto curves = distance_curves(g, 2 * tu);

  // Seeds per role; the same streams are reused at every alpha.
  const std::uint64_t mu_seed = splitmix64(config.seed ^ 0x6c8e9cf570932bd5ULL);
  const std::uint64_t uni_seed = splitmix64(config.seed ^ 0x2545f4914f6cdd1dULL);
  const std::uint64_t pair_seed = splitmix64(config.seed ^ 0x9fb21c651e98df25ULL);

  std::vector<double> z_uniform(config.samples);
  parallel_for(config.samples, config.threads, [&](std::size_t i) {
    Rng rng(uni_seed, i);
    z_uniform[i] = zero_count_statistic(sample_marking_uniform(g, rng));
  });
  double mean_uniform = 0.0;
  for (double z : z_uniform) mean_uniform += z / static_cast<double>(z_uniform.size());

  CutoffReport rep;
  rep.alpha_grid = alpha_grid;
  for (double alpha : alpha_grid) {
    CutoffPoint pt;
    pt.alpha = alpha;
    pt.horizon = horizon_for(alpha, config.t_cov_ref);
    std::vector<double> z_mu(config.samples);
    parallel_for(config.samples, config.threads, [&](std::size_t i) {
      z_mu[i] = zero_count_statistic(sample_marking_mu(g, alpha, config.t_cov_ref, WalkConfig{mu_seed, i, std::nullopt}));
    });
    for (double z : z_mu) pt.mean_z_mu += z / static_cast<double>(z_mu.size());
    pt.mean_z_uniform = mean_uniform;
    pt.tv_lower = std::clamp(binned_tv(z_mu, z_uniform, config.bins, config.bin_width), 0.0, 1.0);

    pt.residual = std::min<Time>(2 * tu, pt.horizon);
    DistinguisherConfig dc;
    dc.zeta = config.zeta;
    dc.pairs = config.pairs;
    dc.seed = pair_seed;
    dc.threads = config.threads;
    const auto em = exp_moment_at(g, pt.horizon - pt.residual, dc);
    pt.m_hat = em.m_hat;
    pt.overflow = em.overflow;
    pt.lamp_tv_upper = em.tv_upper;
    pt.base_tv = curves.tv[pt.residual];
    pt.tv_upper = std::min(1.0, pt.lamp_tv_upper + pt.base_tv);

    rep.tv_lower.push_back(pt.tv_lower);
    rep.tv_upper.push_back(pt.tv_upper);
    if (!rep.lower_drop && pt.tv_lower < 0.5) rep.lower_drop = alpha;
    if (!rep.upper_drop && pt.tv_upper <= 0.25) rep.upper_drop = alpha;
    rep.points.push_back(pt);
  }
  if (rep.lower_drop && rep.upper_drop) rep.crossing_estimate = 0.5 * (*rep.lower_drop + *rep.upper_drop);
  else if (rep.lower_drop) rep.crossing_estimate = rep.lower_drop;
  else if (rep.upper_drop) rep.crossing_estimate = rep.upper_drop;
  return rep;
}

inline void write_tv_curve_csv(std::ostream& os, const std::vector<double>& curve) {
  os << "t,tv\n";
  for (std::size_t t = 0; t < curve.size(); ++t) os << t << ',' << format_double(curve[t]) << '\n';
}

inline void write_cutoff_csv(std::ostream& os, const CutoffReport& rep) {
  os << "alpha,horizon,residual,tv_lower,tv_upper,lamp_tv_upper,base_tv,m_hat,overflow\n";
  for (const auto& p : rep.points)
    os << format_double(p.alpha) << ',' << p.horizon << ',' << p.residual << ',' << format_double(p.tv_lower) << ','
       << format_double(p.tv_upper) << ',' << format_double(p.lamp_tv_upper) << ',' << format_double(p.base_tv)
       << ',' << format_double(p.m_hat.mean) << ',' << (p.overflow ? 1 : 0) << '\n';
}

inline nlohmann::json to_json(const CutoffReport& rep) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    if (v) return *v;
    return nullptr;
  };
  nlohmann::json j;
  j["alpha_grid"] = rep.alpha_grid;
  j["tv_lower"] = rep.tv_lower;
  j["tv_upper"] = rep.tv_upper;
  j["lower_drop"] = opt(rep.lower_drop);
  j["upper_drop"] = opt(rep.upper_drop);
  j["crossing_estimate"] = opt(rep.crossing_estimate);
  auto& pts = j["points"] = nlohmann::json::array();
  for (const auto& p : rep.points)
    pts.push_back({{"alpha", p.alpha},
                   {"horizon", p.horizon},
                   {"residual", p.residual},
                   {"tv_lower", p.tv_lower},
                   {"tv_upper", p.tv_upper},
                   {"lamp_tv_upper", p.lamp_tv_upper},
                   {"base_tv", p.base_tv},
                   {"m_hat", p.m_hat.mean},
                   {"m_hat_stderr", p.m_hat.stderr_},
                   {"overflow", p.overflow},
                   {"mean_z_mu", p.mean_z_mu},
                   {"mean_z_uniform", p.mean_z_uniform}});
  return j;
}

}  // namespace rwlab
