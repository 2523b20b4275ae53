#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "rwlab/excursions.hpp"
#include "rwlab/graph.hpp"
#include "rwlab/lamplighter.hpp"
#include "rwlab/latepoints.hpp"
#include "rwlab/oracle.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/record.hpp"
#include "rwlab/walker.hpp"

namespace rwlab {

inline constexpr int kCriterionCount = 10;  // criterion 11 (replay) lives in the suite driver

struct CriterionResult {
  CriterionResult(int id_, std::string title_) : id(id_), title(std::move(title_)) {}

  int id = 0;
  std::string title;
  bool pass = true;
  std::vector<std::string> failures;
  std::string summary;
  std::vector<RecordedValue> values;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    failures.push_back(what);
  }
};

namespace detail {

inline std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

// T-hat_cov from 1000 stationary-start replicas; the seed depends only on the
// graph so every criterion on the same graph shares one reference.
inline Estimate cover_reference(const GraphTopology& g, std::uint64_t seed, unsigned threads, ValueLog& log) {
  const std::string label = family_label(g.family());
  const std::uint64_t s = derive_seed(seed, "t_cov/" + label);
  const auto e = estimate_cover_time(g, 1000, s, threads);
  log.add(label + " t_cov_ref", e, "walker.estimate_cover_time", s);
  return e;
}

// Vertices v != 0 (or all v) with pairwise distinct values of f(v), smallest index first.
template <typename F>
std::vector<Vertex> value_representatives(std::size_t n, F&& f, bool skip_origin) {
  std::vector<Vertex> out;
  std::vector<double> seen;
  for (Vertex v = 0; v < n; ++v) {
    if (skip_origin && v == 0) continue;
    const double val = f(v);
    bool dup = false;
    for (double s : seen) dup = dup || std::abs(s - val) <= 1e-9 * std::max(1.0, std::abs(val));
    if (dup) continue;
    seen.push_back(val);
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

// 1. Monte Carlo hitting times and Green's-function occupations against the
// exact linear algebra. Pairs (0, y) related by an automorphism fixing 0 share
// their expectation, so one representative per distinct exact value is tested.
inline CriterionResult criterion_oracle_equivalence(std::uint64_t seed, unsigned threads) {
  CriterionResult res(1, "oracle equivalence");
  constexpr std::size_t kReplicas = 10000;
  ValueLog log;
  double worst = 0.0;
  std::size_t comparisons = 0;
  for (const FamilySpec& spec : {FamilySpec{Complete{5}}, FamilySpec{Cycle{6}}, FamilySpec{Torus{2, 4}}}) {
    const auto g = generate(spec);
    const std::string label = family_label(spec);
    const auto h = expected_hitting_times(g);
    const Matrix G = greens_function(g);
    const std::size_t T = uniform_mixing_time(g);

    const std::uint64_t sh = derive_seed(seed, "hit/" + label);
    for (Vertex y : detail::value_representatives(g.vertex_count(), [&](Vertex v) { return h.expected(0, v); }, true)) {
      const std::uint64_t s = stream_seed(sh, y);
      std::vector<Time> t(kReplicas);
      parallel_for(kReplicas, threads, [&](std::size_t r) {
        Rng rng(s, r);
        t[r] = hitting_sample(g, 0, y, rng);
      });
      const auto e = estimate_of(t);
      const double exact = h.expected(0, y);
      const double z = e.zscore(exact);
      worst = std::max(worst, z);
      ++comparisons;
      log.add(label + " E_0 tau(" + std::to_string(y) + ")", e, "walker.hitting_sample", s);
      log.add(label + " exact E_0 tau(" + std::to_string(y) + ")", exact, "oracle.expected_hitting_times", 0, 0);
      res.check(z <= 3.0, label + " hitting 0->" + std::to_string(y) + " off by " + detail::fmt(z) + " SE");
    }

    const auto targets = detail::value_representatives(g.vertex_count(), [&](Vertex v) { return G(0, v); }, false);
    const std::uint64_t sg = derive_seed(seed, "greens/" + label);
    std::vector<std::vector<std::uint32_t>> counts(kReplicas, std::vector<std::uint32_t>(targets.size(), 0));
    parallel_for(kReplicas, threads, [&](std::size_t r) {
      Walk w(g, WalkConfig{sg, r, Vertex{0}});
      for (std::size_t t = 1; t <= T; ++t) {
        const Vertex v = w.advance();
        for (std::size_t i = 0; i < targets.size(); ++i) counts[r][i] += v == targets[i];
      }
    });
    for (std::size_t i = 0; i < targets.size(); ++i) {
      RunningStats occ;
      for (const auto& c : counts) occ.add(c[i]);
      const auto e = occ.estimate();
      const double exact = G(0, targets[i]);
      const double z = e.zscore(exact);
      worst = std::max(worst, z);
      ++comparisons;
      const std::string y = std::to_string(targets[i]);
      log.add(label + " occupation g(0," + y + ")", e, "walker.Walk", sg);
      log.add(label + " exact g(0," + y + ")", exact, "oracle.greens_function", 0, 0);
      res.check(z <= 3.0, label + " occupation of " + y + " off by " + detail::fmt(z) + " SE");
    }
  }
  log.add("max z", worst, "acceptance", seed, comparisons);
  res.summary = std::to_string(comparisons) + " comparisons, max |z| " + detail::fmt(worst, 3);
  res.values = log.take();
  return res;
}

// 2. Closed-form values on K_2 and K_3.
inline CriterionResult criterion_analytic_fixtures(std::uint64_t seed, unsigned threads) {
  CriterionResult res(2, "analytic fixtures");
  ValueLog log;
  const auto k2 = generate(Complete{2});
  const auto k3 = generate(Complete{3});

  const auto h = expected_hitting_times(k3);
  double worst_exact = 0.0;
  for (Eigen::Index x = 0; x < 3; ++x)
    for (Eigen::Index y = 0; y < 3; ++y)
      if (x != y) worst_exact = std::max(worst_exact, std::abs(h.expected(x, y) - 4.0));
  log.add("K3 exact E_0 tau(1)", h.expected(0, 1), "oracle.expected_hitting_times", 0, 0);
  res.check(worst_exact < 1e-12, "K3 exact hitting time differs from 4 by " + detail::fmt(worst_exact));

  constexpr std::size_t kReplicas = 100000;
  const std::uint64_t sh = derive_seed(seed, "k3/hit");
  std::vector<Time> t(kReplicas);
  parallel_for(kReplicas, threads, [&](std::size_t r) {
    Rng rng(sh, r);
    t[r] = hitting_sample(k3, 0, 1, rng);
  });
  const auto hit = estimate_of(t);
  log.add("K3 E_0 tau(1)", hit, "walker.hitting_sample", sh);
  res.check(std::abs(hit.mean / 4.0 - 1.0) <= 0.02, "K3 Monte Carlo hitting time " + detail::fmt(hit.mean));

  const std::uint64_t sc = derive_seed(seed, "k2/cover");
  const auto cov = estimate_cover_time(k2, kReplicas, sc, threads);
  log.add("K2 t_cov", cov, "walker.estimate_cover_time", sc);
  res.check(std::abs(cov.mean / 2.0 - 1.0) <= 0.02, "K2 cover time " + detail::fmt(cov.mean));

  const auto m2 = mixing_time(k2);
  const auto m3 = mixing_time(k3);
  log.add("K2 t_mix", static_cast<double>(m2), "oracle.mixing_time", 0, 0);
  log.add("K3 t_mix", static_cast<double>(m3), "oracle.mixing_time", 0, 0);
  res.check(m2 == 1, "t_mix(K2) = " + std::to_string(m2));
  res.check(m3 == 1, "t_mix(K3) = " + std::to_string(m3));

  res.summary = "K3 hit " + detail::fmt(hit.mean) + ", K2 cover " + detail::fmt(cov.mean) + ", t_mix " +
                std::to_string(m2) + "/" + std::to_string(m3);
  res.values = log.take();
  return res;
}

// 3. T-hat_cov inside the Matthews bracket. The comparison allows 3 standard
// errors of the estimate, since on K_n the lower bound is the exact value.
inline CriterionResult criterion_matthews(std::uint64_t seed, unsigned threads) {
  CriterionResult res(3, "Matthews bracketing");
  ValueLog log;
  std::string summary;
  for (const FamilySpec& spec : {FamilySpec{Complete{5}}, FamilySpec{Cycle{20}}, FamilySpec{Torus{2, 6}},
                                 FamilySpec{Torus{3, 6}}, FamilySpec{Hypercube{6}},
                                 FamilySpec{RandomRegular{3, 50, 1}}}) {
    const auto g = generate(spec);
    const std::string label = family_label(spec);
    const auto b = matthews_bounds(expected_hitting_times(g));
    const auto cov = detail::cover_reference(g, seed, threads, log);
    log.add(label + " matthews lower", b.lower, "oracle.matthews_bounds", 0, 0);
    log.add(label + " matthews upper", b.upper, "oracle.matthews_bounds", 0, 0);
    const double slack = 3.0 * cov.stderr_;
    res.check(cov.mean >= b.lower - slack && cov.mean <= b.upper + slack,
              label + " " + detail::fmt(cov.mean) + " outside [" + detail::fmt(b.lower) + ", " +
                  detail::fmt(b.upper) + "]");
    summary += (summary.empty() ? "" : ", ") + detail::fmt(b.lower, 3) + "<=" + detail::fmt(cov.mean, 3) +
               "<=" + detail::fmt(b.upper, 3);
  }
  res.summary = summary;
  res.values = log.take();
  return res;
}

// 4. log E|L(alpha)| / log |V| against 1 - alpha on Torus(3,8).
inline CriterionResult criterion_late_exponent(std::uint64_t seed, unsigned threads) {
  CriterionResult res(4, "late-set exponent");
  ValueLog log;
  const auto g = generate(Torus{3, 8});
  const auto cov = detail::cover_reference(g, seed, threads, log);
  const double logv = std::log(static_cast<double>(g.vertex_count()));
  std::string summary;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const std::string a = format_short(alpha);
    const std::uint64_t s = derive_seed(seed, "late/" + a);
    const auto sizes = late_set_sizes(g, alpha, cov.mean, 500, s, threads);
    const auto e = estimate_of(sizes);
    const double exponent = std::log(e.mean) / logv;
    log.add("E|L(" + a + ")|", e, "latepoints.late_set_sizes", s);
    log.add("exponent(" + a + ")", exponent, "latepoints.late_set_sizes", s, sizes.size());
    res.check(std::abs(exponent - (1.0 - alpha)) <= 0.15,
              "alpha " + a + ": exponent " + detail::fmt(exponent) + " vs " + detail::fmt(1.0 - alpha));
    summary += (summary.empty() ? "exponents " : ", ") + detail::fmt(exponent, 3);
  }
  res.summary = summary + " (targets 0.75, 0.5, 0.25)";
  res.values = log.take();
  return res;
}

// 5. Zero-count power at alpha = 0.3, exponential-moment bound at 0.9, and the
// false-rejection rate on uniform markings.
inline CriterionResult criterion_threshold_separation(std::uint64_t seed, unsigned threads) {
  CriterionResult res(5, "threshold separation");
  ValueLog log;
  const auto g = generate(Torus{3, 8});
  const auto cov = detail::cover_reference(g, seed, threads, log);

  DistinguisherConfig dc;
  dc.replicas = 1000;
  dc.pairs = 2000;
  dc.threads = threads;
  dc.seed = derive_seed(seed, "distinguish/power");
  const auto power = distinguisher_power(g, 0.3, cov.mean, dc);
  log.add("power(0.3)", power.power, "latepoints.distinguisher_power", dc.seed);
  double mean_z = 0.0;
  for (double z : power.z) mean_z += z / static_cast<double>(power.z.size());
  log.add("mean z(0.3)", mean_z, "latepoints.distinguisher_power", dc.seed, power.z.size());
  res.check(power.power.mean >= 0.9, "rejection frequency at 0.3 is " + detail::fmt(power.power.mean) +
                                         " (mean z " + detail::fmt(mean_z, 3) + ")");

  dc.seed = derive_seed(seed, "distinguish/exp_moment");
  const auto em = exp_moment_estimate(g, 0.9, cov.mean, dc);
  log.add("m_hat(0.9)", em.m_hat, "latepoints.exp_moment_estimate", dc.seed);
  log.add("tv_upper(0.9)", em.tv_upper, "latepoints.exp_moment_estimate", dc.seed, dc.pairs);
  res.check(!em.overflow, "exponential moment overflowed at 0.9");
  res.check(em.tv_upper <= 0.3, "tv_upper at 0.9 is " + detail::fmt(em.tv_upper));

  dc.seed = derive_seed(seed, "distinguish/uniform");
  const auto uni = uniform_rejection(g, dc);
  log.add("uniform rejection", uni.power, "latepoints.uniform_rejection", dc.seed);
  res.check(uni.power.mean <= 0.01, "uniform false rejection " + detail::fmt(uni.power.mean));

  res.summary = "power(0.3) " + detail::fmt(power.power.mean, 3) + ", tv_upper(0.9) " + detail::fmt(em.tv_upper, 3) +
                ", false rejection " + detail::fmt(uni.power.mean, 3);
  res.values = log.take();
  return res;
}

// 6. Two points at distance 5 on Torus(3,10), alpha = 0.5.
inline CriterionResult criterion_correlation(std::uint64_t seed, unsigned threads) {
  CriterionResult res(6, "correlation decay");
  ValueLog log;
  const auto g = generate(Torus{3, 10});
  const auto cov = detail::cover_reference(g, seed, threads, log);
  const auto dist = bfs_distances(g, 0);
  Vertex far = 0;
  while (dist[far] != 5) ++far;
  constexpr double kAlpha = 0.5;
  const std::uint64_t s = derive_seed(seed, "correlation");
  const auto c = correlation_ratio(g, kAlpha, cov.mean, {0, far}, 20000, s, threads);
  log.add("P[both late]", c.p_joint, "latepoints.correlation_ratio", s);
  log.add("ratio", c.ratio, "latepoints.correlation_ratio", s, c.replicas);
  res.check(!c.insufficient_events, "only " + std::to_string(c.joint_count) + " joint events");
  res.check(c.ratio >= 0.5 && c.ratio <= 2.0, "pair ratio " + detail::fmt(c.ratio));
  const double scale = std::pow(static_cast<double>(g.vertex_count()), kAlpha);
  std::string marg;
  for (std::size_t i = 0; i < c.p_single.size(); ++i) {
    const double dev = std::log(c.p_single[i].mean * scale);
    log.add("P[late " + std::to_string(i) + "]", c.p_single[i], "latepoints.correlation_ratio", s);
    res.check(std::abs(dev) <= 0.7, "marginal " + std::to_string(i) + ": log(p |V|^alpha) = " + detail::fmt(dev));
    marg += (marg.empty() ? "" : ", ") + detail::fmt(dev, 3);
  }
  res.summary = "ratio " + detail::fmt(c.ratio, 3) + " at distance 5, log(p |V|^a) " + marg;
  res.values = log.take();
  return res;
}

// 7. Occupation, hitting prediction and excursion counts on Torus(3,10) with
// r = 1, R = 3 and the default gap and window.
inline CriterionResult criterion_excursions(std::uint64_t seed, unsigned threads) {
  CriterionResult res(7, "excursion machinery");
  ValueLog log;
  const auto g = generate(Torus{3, 10});
  ExcursionParams params;
  params.t_mix_uniform = uniform_mixing_time(g);

  const std::uint64_t so = derive_seed(seed, "excursion/occupation");
  constexpr Time kOccupationHorizon = 10'000'000;
  const auto occ = occupation_ratio(g, 0, params, kOccupationHorizon, so);
  log.add("occupation ratio", occ.ratio, "excursions.occupation_ratio", so, occ.excursions);
  res.check(occ.ratio >= 0.85 && occ.ratio <= 1.15, "occupation ratio " + detail::fmt(occ.ratio));

  const std::uint64_t sh = derive_seed(seed, "excursion/hitting");
  const auto hp = hitting_prediction(g, 0, params, 20000, sh, threads);
  log.add("success probability", hp.success, "excursions.hitting_prediction", sh);
  log.add("cycle", hp.cycle, "excursions.hitting_prediction", sh);
  log.add("prediction", hp.prediction, "excursions.hitting_prediction", sh, hp.success.n, hp.prediction_stderr);
  log.add("exact E_pi tau", *hp.exact, "excursions.exact_stationary_hitting", 0, 0);
  res.check(*hp.ratio >= 0.8 && *hp.ratio <= 1.2, "hitting prediction ratio " + detail::fmt(*hp.ratio));

  const auto geo = resolve_geometry(g, {0}, params);
  const double cycle = hp.cycle.mean;
  std::vector<Time> horizons;
  for (int k : {50, 100, 150, 200}) horizons.push_back(static_cast<Time>(std::ceil(k * cycle)));
  const std::uint64_t sn = derive_seed(seed, "excursion/counts");
  double lo = 1e300, hi = -1e300;
  for (std::uint64_t rep = 0; rep < 4; ++rep) {
    const auto N = excursion_counts(g, geo, WalkConfig{sn, rep, std::nullopt}, horizons);
    for (std::size_t i = 0; i < N.size(); ++i) {
      const double ratio = static_cast<double>(N[i]) * cycle / static_cast<double>(horizons[i]);
      log.add("N ratio rep " + std::to_string(rep) + " T " + std::to_string(horizons[i]), ratio,
              "excursions.excursion_counts", sn, 1);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      res.check(ratio >= 0.75 && ratio <= 1.25, "count ratio " + detail::fmt(ratio) + " at T = " +
                                                    std::to_string(horizons[i]));
    }
  }
  res.summary = "occupation " + detail::fmt(occ.ratio, 3) + ", hitting " + detail::fmt(*hp.ratio, 3) +
                ", count ratios in [" + detail::fmt(lo, 3) + ", " + detail::fmt(hi, 3) + "]";
  res.values = log.take();
  return res;
}

// 8. partition_H cover-time predictor and the single class of transitive graphs.
inline CriterionResult criterion_partition(std::uint64_t seed, unsigned threads) {
  CriterionResult res(8, "cover-time predictor");
  ValueLog log;
  const auto g = generate(Torus{3, 8});
  const auto cov = detail::cover_reference(g, seed, threads, log);
  const std::uint64_t s = derive_seed(seed, "partition/torus");
  const auto rep = partition_H(g, 0.005, ExcursionParams{}, 10000, s, threads);
  log.add("C", rep.C, "excursions.partition_H", s, 10000);
  const double ratio = rep.C / cov.mean;
  res.check(ratio >= 0.5 && ratio <= 2.0, "C / T_cov = " + detail::fmt(ratio));
  res.check(rep.classes.size() == 1, "Torus(3,8) has " + std::to_string(rep.classes.size()) + " classes");

  const auto cube = generate(Hypercube{6});
  const std::uint64_t sc = derive_seed(seed, "partition/hypercube");
  const auto rc = partition_H(cube, 0.005, ExcursionParams{}, 2000, sc, threads);
  log.add("hypercube classes", static_cast<double>(rc.classes.size()), "excursions.partition_H", sc, 2000);
  res.check(rc.classes.size() == 1, "Hypercube(6) has " + std::to_string(rc.classes.size()) + " classes");

  res.summary = "C " + detail::fmt(rep.C) + " vs T_cov " + detail::fmt(cov.mean) + " (ratio " + detail::fmt(ratio, 3) +
                "), classes " + std::to_string(rep.classes.size()) + "/" + std::to_string(rc.classes.size());
  res.values = log.take();
  return res;
}

// 9. Exact K_3 lamplighter curve, simulated curve, and lamps against Mu.
inline CriterionResult criterion_lamplighter(std::uint64_t seed, unsigned threads) {
  CriterionResult res(9, "lamplighter exactness");
  ValueLog log;
  const auto k3 = generate(Complete{3});
  const auto worst = exact_tv_curve(k3, 20, threads);
  bool monotone = true;
  for (std::size_t t = 1; t < worst.size(); ++t) monotone = monotone && worst[t] <= worst[t - 1] + 1e-12;
  for (std::size_t t = 0; t < worst.size(); ++t)
    log.add("K3 exact tv(" + std::to_string(t) + ")", worst[t], "lamplighter.exact_tv_curve", 0, 0);
  res.check(monotone, "exact K3 curve increases somewhere");

  const LampState start{{0, 0, 0}, 0};
  const auto exact = exact_tv_from(k3, start, 20);
  const std::uint64_t se = derive_seed(seed, "lamplighter/empirical");
  const auto emp = empirical_tv_curve(k3, start, 20, 100000, se, threads);
  double gap = 0.0;
  for (std::size_t t = 0; t <= 20; ++t) {
    gap = std::max(gap, std::abs(exact[t] - emp[t]));
    log.add("K3 empirical tv(" + std::to_string(t) + ")", emp[t], "lamplighter.empirical_tv_curve", se, 100000);
  }
  res.check(gap <= 0.05, "empirical and exact K3 curves differ by " + detail::fmt(gap));

  // Lamps after T = 40 steps from a stationary start against Mu(0.5) with reference 80.
  const auto g = generate(Torus{2, 5});
  constexpr std::size_t kSamples = 10000;
  constexpr double kAlpha = 0.5, kRef = 80.0;
  const Time T = horizon_for(kAlpha, kRef);
  const std::size_t n = g.vertex_count();
  const std::vector<std::pair<Vertex, Vertex>> pairs{{0, 1}, {0, 5}, {0, 12}, {7, 18}};
  const std::uint64_t sl = derive_seed(seed, "lamplighter/lamps");
  const std::uint64_t sm = derive_seed(seed, "lamplighter/mu");
  std::vector<std::vector<std::uint8_t>> lamps(kSamples), mu(kSamples);
  parallel_for(kSamples, threads, [&](std::size_t i) {
    Rng rng(sl, i);
    LampState s{std::vector<std::uint8_t>(n, 0), sample_stationary(g, rng)};
    for (Time t = 0; t < T; ++t) lamplighter_advance(g, s, rng);
    lamps[i] = std::move(s.lamps);
    mu[i] = sample_marking_mu(g, kAlpha, kRef, WalkConfig{sm, i, std::nullopt}).bits;
  });
  double worst_z = 0.0;
  auto compare = [&](const std::string& name, auto&& event) {
    RunningStats a, b;
    for (std::size_t i = 0; i < kSamples; ++i) {
      a.add(event(lamps[i]) ? 1.0 : 0.0);
      b.add(event(mu[i]) ? 1.0 : 0.0);
    }
    const auto ea = a.estimate(), eb = b.estimate();
    const double se2 = std::hypot(ea.stderr_, eb.stderr_);
    const double z = se2 > 0 ? std::abs(ea.mean - eb.mean) / se2 : (ea.mean == eb.mean ? 0.0 : 1e300);
    worst_z = std::max(worst_z, z);
    log.add("lamps " + name, ea, "lamplighter.lamplighter_advance", sl);
    log.add("mu " + name, eb, "latepoints.sample_marking_mu", sm);
    res.check(z <= 3.0, name + " differs by " + detail::fmt(z) + " sigma");
  };
  for (Vertex v = 0; v < n; ++v) compare("bit " + std::to_string(v), [v](const auto& f) { return f[v] != 0; });
  for (const auto& [u, v] : pairs)
    compare("pair " + std::to_string(u) + "," + std::to_string(v),
            [u, v](const auto& f) { return f[u] != 0 && f[v] != 0; });

  res.summary = "K3 curve " + std::string(monotone ? "monotone" : "not monotone") + ", max gap " + detail::fmt(gap, 3) +
                ", lamps vs Mu max |z| " + detail::fmt(worst_z, 3);
  res.values = log.take();
  return res;
}

// 10. Cutoff probe on the Torus(3,8) lamplighter.
inline CriterionResult criterion_cutoff(std::uint64_t seed, unsigned threads) {
  CriterionResult res(10, "cutoff probe");
  ValueLog log;
  const auto g = generate(Torus{3, 8});
  const auto cov = detail::cover_reference(g, seed, threads, log);
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(k / 20.0);
  CutoffConfig cc;
  cc.t_cov_ref = cov.mean;
  cc.seed = derive_seed(seed, "cutoff");
  cc.threads = threads;
  const auto rep = cutoff_probe(g, grid, cc);
  for (const auto& p : rep.points) {
    const std::string a = format_short(p.alpha);
    log.add("tv_lower(" + a + ")", p.tv_lower, "lamplighter.cutoff_probe", cc.seed, cc.samples);
    log.add("tv_upper(" + a + ")", p.tv_upper, "lamplighter.cutoff_probe", cc.seed, cc.pairs);
  }
  const double lower = rep.points[6].tv_lower;   // alpha = 0.35
  const double upper = rep.points[17].tv_upper;  // alpha = 0.9
  res.check(lower >= 0.9, "tv_lower at 0.35 is " + detail::fmt(lower));
  res.check(upper <= 0.3, "tv_upper at 0.9 is " + detail::fmt(upper));
  const bool crossed = rep.crossing_estimate.has_value();
  const double crossing = crossed ? *rep.crossing_estimate : std::numeric_limits<double>::quiet_NaN();
  log.add("crossing", crossing, "lamplighter.cutoff_probe", cc.seed, cc.samples);
  res.check(crossed && crossing >= 0.35 && crossing <= 0.75, "crossing estimate " + detail::fmt(crossing));
  res.summary = "tv_lower(0.35) " + detail::fmt(lower, 3) + ", tv_upper(0.9) " + detail::fmt(upper, 3) +
                ", crossing " + detail::fmt(crossing, 3);
  res.values = log.take();
  return res;
}

inline CriterionResult run_criterion(int id, std::uint64_t seed, unsigned threads) {
  switch (id) {
    case 1: return criterion_oracle_equivalence(seed, threads);
    case 2: return criterion_analytic_fixtures(seed, threads);
    case 3: return criterion_matthews(seed, threads);
    case 4: return criterion_late_exponent(seed, threads);
    case 5: return criterion_threshold_separation(seed, threads);
    case 6: return criterion_correlation(seed, threads);
    case 7: return criterion_excursions(seed, threads);
    case 8: return criterion_partition(seed, threads);
    case 9: return criterion_lamplighter(seed, threads);
    case 10: return criterion_cutoff(seed, threads);
    default: fail(Errc::InvalidSpec, "no acceptance criterion " + std::to_string(id));
  }
}

}  // namespace rwlab
