#include <catch_amalgamated.hpp>

#include <sstream>

#include "rwlab/excursions.hpp"
#include "support.hpp"

using namespace rwlab;

namespace {

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;
}

// Torus(d,n) graph distance straight from coordinates.
std::uint32_t torus_distance(std::uint32_t d, std::uint32_t n, Vertex a, Vertex b) {
  std::uint32_t s = 0;
  for (std::uint32_t k = 0; k < d; ++k) {
    const std::uint32_t da = a % n, db = b % n;
    const std::uint32_t diff = da > db ? da - db : db - da;
    s += std::min(diff, n - diff);
    a /= n;
    b /= n;
  }
  return s;
}

// Stopping times straight from their definitions, one scan per time.
std::vector<ExcursionRecord> reference_decompose(const std::vector<std::uint32_t>& dist,
                                                 const std::vector<std::uint8_t>& target, std::uint32_t r,
                                                 std::uint32_t R, Time gap, Time window,
                                                 const std::vector<Vertex>& traj) {
  std::vector<ExcursionRecord> out;
  const Time len = traj.size();
  Time from = 0;
  for (;;) {
    Time tau = from;
    while (tau < len && dist[traj[tau]] != r) ++tau;
    if (tau >= len) break;
    Time sigma = tau;
    while (sigma < len && dist[traj[sigma]] <= R) ++sigma;
    if (sigma >= len || sigma + window >= len) break;
    ExcursionRecord e;
    e.tau = tau;
    e.sigma = sigma;
    e.entry = traj[tau];
    e.exit = traj[sigma];
    for (Time t = tau; t <= sigma + window; ++t)
      if (target[traj[t]]) {
        e.hit = true;
        ++e.visits;
      }
    out.push_back(e);
    from = sigma + gap;
  }
  return out;
}

bool same(const ExcursionRecord& a, const ExcursionRecord& b) {
  return a.tau == b.tau && a.sigma == b.sigma && a.entry == b.entry && a.exit == b.exit && a.hit == b.hit &&
         a.visits == b.visits;
}

Vertex tor2(Vertex i, Vertex j, Vertex n) { return i * n + j; }

// Clique on 1..m, each joined to 0, plus a path 0 - m+1 - ... - m+L.
GraphTopology lollipop(Vertex m, Vertex L) {
  std::vector<Edge> e;
  for (Vertex a = 1; a <= m; ++a) {
    e.emplace_back(0, a);
    for (Vertex b = a + 1; b <= m; ++b) e.emplace_back(a, b);
  }
  Vertex prev = 0;
  for (Vertex k = 1; k <= L; ++k) {
    e.emplace_back(prev, m + k);
    prev = m + k;
  }
  return GraphTopology::from_edges(m + L + 1, e, Imported{"lollipop"});
}

// Center 0 with `legs` paths of length `len`.
GraphTopology spider(Vertex legs, Vertex len) {
  std::vector<Edge> e;
  for (Vertex a = 0; a < legs; ++a) {
    Vertex prev = 0;
    for (Vertex k = 1; k <= len; ++k) {
      const Vertex v = 1 + a * len + (k - 1);
      e.emplace_back(prev, v);
      prev = v;
    }
  }
  return GraphTopology::from_edges(1 + legs * len, e, Imported{"spider"});
}

ExcursionParams fixed(std::uint32_t r, std::uint32_t R, double beta, double alpha, std::size_t tu) {
  ExcursionParams p;
  p.r = r;
  p.R = R;
  p.beta = beta;
  p.alpha_window = alpha;
  p.t_mix_uniform = tu;
  return p;
}

}  // namespace

TEST_CASE("excursion params: preconditions") {
  const auto k3 = generate(Complete{3});
  const auto k5 = generate(Complete{5});
  std::vector<Vertex> traj{0, 1, 2};
  CHECK(code_of([&] { decompose(k3, {0}, fixed(0, 2, 1, 1, 1), traj); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { decompose(k3, {0}, fixed(1, 1, 1, 1, 1), traj); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { decompose(k3, {0}, fixed(1, 2, 1, 2, 1), traj); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { mean_excursion_length(k5, {0}, fixed(1, 2, 0, 0, 1), 10, 1); }) ==
        Errc::GeometryDegenerate);
  CHECK(code_of([&] { hitting_prediction(k3, 0, ExcursionParams{}, 10, 1); }) == Errc::GeometryDegenerate);
  CHECK(code_of([&] { estimate_success_prob(generate(Cycle{8}), 0, fixed(1, 4, 1, 1, 1), 10, 1); }) ==
        Errc::GeometryDegenerate);

  const auto t6 = generate(Torus{2, 6});
  CHECK(code_of([&] { resolve_geometry(t6, {0, 1}, fixed(1, 2, 1, 1, 1)); }) == Errc::TargetsTooClose);
  const auto t10 = generate(Torus{2, 10});
  CHECK_NOTHROW(resolve_geometry(t10, {0, tor2(5, 5, 10)}, fixed(1, 2, 1, 1, 1)));

  // Above the dense cap T_mix^U must be supplied.
  const auto big = generate(Torus{2, 65});
  CHECK(code_of([&] { resolve_geometry(big, {0}, ExcursionParams{}); }) == Errc::CapExceeded);
  CHECK_NOTHROW(resolve_geometry(big, {0}, fixed(1, 3, 2, 1, 500)));
}

TEST_CASE("resolve_geometry: gap and window lengths") {
  const auto g = generate(Torus{2, 6});
  const auto geo = resolve_geometry(g, {0}, fixed(1, 2, 1.5, 0.5, 7));
  CHECK(geo.gap == 11);
  CHECK(geo.window == 4);
  const auto t = resolve_geometry(g, {0}, ExcursionParams{});
  CHECK(t.t_mix_uniform == uniform_mixing_time(g));
}

TEST_CASE("decompose: walk that never reaches the inner sphere") {
  const auto g = generate(Torus{2, 6});
  // Stays at distance >= 2 from the origin.
  std::vector<Vertex> traj{tor2(3, 3, 6), tor2(3, 2, 6), tor2(2, 2, 6), tor2(2, 2, 6), tor2(3, 2, 6)};
  const auto trace = decompose(g, {0}, fixed(1, 2, 1, 1, 2), traj);
  CHECK(trace.excursions.empty());
  CHECK(trace.targets == std::vector<Vertex>{0});
}

TEST_CASE("decompose: hand-traced Torus(2,6) fixture") {
  const auto g = generate(Torus{2, 6});
  auto v = [](Vertex i, Vertex j) { return tor2(i, j, 6); };
  // Target (0,0), r = 1, R = 2, T_mix^U = 2 so gap = window = 2.
  const std::vector<Vertex> traj{
      v(0, 3), v(0, 2), v(0, 1), v(0, 0), v(0, 1),  // t = 0..4: enter at t = 2, hit at t = 3
      v(0, 2), v(0, 3), v(0, 3), v(1, 3), v(1, 2),  // t = 5..9: exit at t = 6, window closes at 8
      v(1, 1), v(1, 0), v(1, 0), v(2, 0), v(3, 0),  // t = 10..14: enter at 11, exit at 14
      v(3, 0), v(3, 1), v(2, 1), v(1, 1), v(0, 1)}; // t = 15..19: window closes at 16, entry at 19
  REQUIRE(traj.size() == 20);
  for (std::size_t t = 1; t < traj.size(); ++t)
    REQUIRE((traj[t] == traj[t - 1] || g.has_edge(traj[t], traj[t - 1])));

  const auto geo = resolve_geometry(g, {0}, fixed(1, 2, 1, 1, 2));
  ExcursionTracker tracker(geo);
  for (std::size_t t = 0; t < traj.size(); ++t) tracker.push(t, traj[t]);
  const auto& ex = tracker.completed();
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].tau == 2);
  CHECK(ex[0].sigma == 6);
  CHECK(ex[0].entry == v(0, 1));
  CHECK(ex[0].exit == v(0, 3));
  CHECK(ex[0].hit);
  CHECK(ex[0].visits == 1);
  CHECK(ex[1].tau == 11);
  CHECK(ex[1].sigma == 14);
  CHECK(ex[1].entry == v(1, 0));
  CHECK(ex[1].exit == v(3, 0));
  CHECK_FALSE(ex[1].hit);
  CHECK(ex[1].visits == 0);
  REQUIRE(tracker.open_entry());
  CHECK(*tracker.open_entry() == 19);

  // A gap of 10 pushes the second entry past the return at t = 11.
  const auto wide = decompose(g, {0}, fixed(1, 2, 5, 1, 2), traj);
  REQUIRE(wide.excursions.size() == 1);
  CHECK(wide.excursions[0].tau == 2);
}

TEST_CASE("decompose: entry on the step that closes the window") {
  const auto g = generate(Cycle{12});
  // Target 0, r = 1, R = 2, gap = window = 3. Exit at t = 2; the window closes
  // at t = 5 with the walk on the sphere, which is also the next entry.
  const std::vector<Vertex> traj{1, 2, 3, 3, 2, 1, 2, 3, 4, 4, 4};
  const auto geo = resolve_geometry(g, {0}, fixed(1, 2, 3, 3, 1));
  const auto trace = decompose(geo, traj);
  REQUIRE(trace.excursions.size() == 2);
  CHECK(trace.excursions[0].tau == 0);
  CHECK(trace.excursions[0].sigma == 2);
  CHECK(trace.excursions[1].tau == 5);
  CHECK(trace.excursions[1].sigma == 7);
  CHECK(trace.excursions[1].tau >= trace.excursions[0].sigma + geo.gap);
}

TEST_CASE("decompose: matches the definitional scan on random trajectories") {
  const std::vector<GraphTopology> graphs{generate(Torus{2, 6}), generate(Torus{3, 5}),
                                          generate(PercolationBall{2, 6, 0.75, 3}), generate(Cycle{15})};
  Rng rng(2024, 0);
  std::size_t checked = 0, total_excursions = 0;
  for (const auto& g : graphs) {
    for (int trial = 0; trial < 1000; ++trial) {
      const std::uint32_t r = 1 + static_cast<std::uint32_t>(rng.below(2));
      const std::uint32_t R = r + 1 + static_cast<std::uint32_t>(rng.below(2));
      const std::size_t tu = rng.below(6);
      const double beta = static_cast<double>(rng.below(4));
      const double alpha = beta * static_cast<double>(rng.below(3)) / 2.0;
      const Vertex x = static_cast<Vertex>(rng.below(g.vertex_count()));
      ExcursionGeometry geo;
      try {
        geo = resolve_geometry(g, {x}, fixed(r, R, beta, alpha, tu));
      } catch (const Error& e) {
        REQUIRE(e.code() == Errc::GeometryDegenerate);
        continue;
      }
      const Time len = 1 + rng.below(400);
      const auto traj = trajectory(g, WalkConfig{rng.next(), 0, std::nullopt}, len);
      const auto trace = decompose(geo, traj);
      const auto ref = reference_decompose(geo.dist, geo.is_target, r, R, geo.gap, geo.window, traj);
      REQUIRE(trace.excursions.size() == ref.size());
      const auto& ex = trace.excursions;
      for (std::size_t k = 0; k < ex.size(); ++k) {
        REQUIRE(same(ex[k], ref[k]));
        REQUIRE(ex[k].tau < ex[k].sigma);
        REQUIRE(geo.dist[ex[k].entry] == r);
        REQUIRE(geo.dist[ex[k].exit] > R);
        if (k + 1 < ex.size()) {
          REQUIRE(ex[k].sigma < ex[k + 1].tau);
          REQUIRE(ex[k + 1].tau >= ex[k].sigma + geo.gap);
        }
      }
      total_excursions += ex.size();
      ++checked;
    }
  }
  CHECK(checked > 2000);
  CHECK(total_excursions > 2000);
}

TEST_CASE("trace CSV layout") {
  ExcursionTrace t;
  t.targets = {0};
  t.excursions.push_back({2, 6, 1, 3, true, 1});
  std::ostringstream os;
  write_trace_csv(os, t);
  CHECK(os.str() == "k,tau,sigma,entry,exit,hit,visits\n0,2,6,1,3,1,1\n");
}

TEST_CASE("success probability: absorbing-chain oracle on Torus(2,5)") {
  const auto g = generate(Torus{2, 5});
  const auto params = fixed(1, 2, 2, 1, uniform_mixing_time(g));
  const auto geo = resolve_geometry(g, {0}, params);
  const auto P = testsupport::lazy_kernel(g);
  const std::size_t n = g.vertex_count();
  std::vector<std::uint32_t> d(n);
  for (Vertex v = 0; v < n; ++v) d[v] = torus_distance(2, 5, v, 0);

  // S(z): hit the origin before leaving B(0,2), or from the exit vertex
  // within the window.
  const auto window_hit = testsupport::hit_within(P, 0, geo.window);
  std::vector<bool> stop(n, false);
  std::vector<double> val(n, 0.0);
  stop[0] = true;
  val[0] = 1.0;
  for (Vertex v = 0; v < n; ++v)
    if (d[v] > 2) {
      stop[v] = true;
      val[v] = window_hit[v];
    }
  const auto S = testsupport::absorb(P, stop, val);

  // First entry law from each start, then average over pi.
  std::vector<bool> sphere(n, false);
  for (Vertex v = 0; v < n; ++v) sphere[v] = d[v] == 1;
  std::vector<double> sv(n, 0.0);
  for (Vertex v = 0; v < n; ++v)
    if (sphere[v]) sv[v] = S[v];
  const auto start_value = testsupport::absorb(P, sphere, sv);
  double p_bar = 0.0;
  for (Vertex v = 0; v < n; ++v) p_bar += start_value[v] / static_cast<double>(n);

  const auto est = estimate_success_prob(g, 0, params, 40000, 11);
  INFO("oracle " << p_bar << " estimate " << est.mean << " +- " << est.stderr_);
  CHECK(est.zscore(p_bar) < 3.0);
  CHECK(p_bar > 0.0);
  CHECK(p_bar < 1.0);
}

TEST_CASE("success probability: cut vertex forces a hit") {
  // Nearly all stationary mass sits in the clique, whose only way out passes x.
  const auto g = lollipop(20, 6);
  const auto est = estimate_success_prob(g, 0, fixed(1, 2, 1, 1, uniform_mixing_time(g)), 4000, 3);
  CHECK(est.mean > 0.9);
}

TEST_CASE("success probability: Torus(3,10) decreases in r") {
  const auto g = generate(Torus{3, 10});
  const std::size_t tu = uniform_mixing_time(g);
  const auto p1 = estimate_success_prob(g, 0, fixed(1, 3, 2, 1, tu), 6000, 5);
  const auto p2 = estimate_success_prob(g, 0, fixed(2, 3, 2, 1, tu), 6000, 6);
  CHECK(p1.mean > 0.0);
  CHECK(p1.mean < 1.0);
  CHECK(p2.mean < p1.mean);
}

TEST_CASE("mean excursion length: path bound and start insensitivity") {
  const auto g = generate(Torus{3, 8});
  const auto params = ExcursionParams{};
  const auto a = mean_excursion_length(g, {0}, params, 4000, 21);
  const auto b = mean_excursion_length(g, {0}, params, 4000, 22);
  CHECK(a.mean >= 2.0);
  CHECK(std::abs(a.mean - b.mean) < 3.0 * std::hypot(a.stderr_, b.stderr_));
  // Every individual cycle has length >= 2 (exit then re-enter).
  auto geo = resolve_geometry(g, {0}, without_gap(params));
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto c = run_first_cycles(g, geo, WalkConfig{9, i, std::nullopt}, 1, default_horizon(g));
    CHECK(c.next_entry - c.records[0].tau >= 2);
  }
}

TEST_CASE("occupation ratio on Torus(3,10)") {
  const auto g = generate(Torus{3, 10});
  const std::size_t tu = uniform_mixing_time(g);
  const auto def = occupation_ratio(g, 0, fixed(1, 3, 2, 1, tu), 10'000'000, 31);
  CHECK(def.pi == Catch::Approx(1.0 / 1000.0));
  CHECK(def.ratio >= 0.85);
  CHECK(def.ratio <= 1.15);

  // With the window spanning the whole gap the ratio does not depend on beta.
  auto se = [](const OccupationResult& o) {
    return o.ratio * std::hypot(o.visits.stderr_ / o.visits.mean, o.cycle.stderr_ / o.cycle.mean);
  };
  const auto b1 = occupation_ratio(g, 0, fixed(1, 3, 1, 1, tu), 10'000'000, 32);
  const auto b2 = occupation_ratio(g, 0, fixed(1, 3, 2, 2, tu), 10'000'000, 33);
  INFO("beta=1 " << b1.ratio << " beta=2 " << b2.ratio);
  CHECK(std::abs(b1.ratio - b2.ratio) < 3.0 * std::hypot(se(b1), se(b2)));
}

TEST_CASE("hitting prediction against the linear solve") {
  const auto g = generate(Torus{3, 10});
  const auto h = hitting_prediction(g, 0, ExcursionParams{}, 20000, 41);
  REQUIRE(h.exact);
  INFO("prediction " << h.prediction << " exact " << *h.exact);
  CHECK(*h.ratio >= 0.8);
  CHECK(*h.ratio <= 1.2);

  // Transitivity: two targets on Torus(3,8) give the same prediction.
  const auto t8 = generate(Torus{3, 8});
  const auto a = hitting_prediction(t8, 0, ExcursionParams{}, 8000, 42);
  const auto b = hitting_prediction(t8, 300, ExcursionParams{}, 8000, 43);
  CHECK(std::abs(a.prediction - b.prediction) < 3.0 * std::hypot(a.prediction_stderr, b.prediction_stderr));
  CHECK(*a.exact == Catch::Approx(*b.exact).epsilon(1e-9));
}

TEST_CASE("exact stationary hitting time matches Gauss") {
  const auto g = generate(Torus{2, 4});
  double s = 0.0;
  for (Vertex v = 1; v < g.vertex_count(); ++v) s += testsupport::hitting_by_gauss(g, v, 0);
  CHECK(exact_stationary_hitting(g, 0) == Catch::Approx(s / 16.0).epsilon(1e-9));
}

TEST_CASE("excursion count concentration on Torus(3,10)") {
  const auto g = generate(Torus{3, 10});
  const auto geo = resolve_geometry(g, {0}, ExcursionParams{});
  const double T = sample_first_cycle(g, geo, 2000, 51).cycle.mean;
  std::vector<Time> hs;
  for (int k = 0; k <= 200; ++k) hs.push_back(static_cast<Time>(k * T));
  for (std::uint64_t rep = 0; rep < 4; ++rep) {
    const auto N = excursion_counts(g, geo, WalkConfig{52, rep, std::nullopt}, hs);
    REQUIRE(N.size() == hs.size());
    CHECK(N[0] == 0);
    for (std::size_t i = 1; i < N.size(); ++i) REQUIRE(N[i] >= N[i - 1]);
    for (std::size_t i = 50; i < N.size(); i += 25) {
      const double ratio = static_cast<double>(N[i]) * T / static_cast<double>(hs[i]);
      INFO("T/T_rR = " << i << " ratio " << ratio);
      CHECK(ratio >= 0.75);
      CHECK(ratio <= 1.25);
    }
  }
}

TEST_CASE("partition: bucket edges are half-open") {
  CHECK(partition_bucket(0.5, 1.0) == 0);
  CHECK(partition_bucket(1.0, 1.0) == 0);
  CHECK(partition_bucket(1.0000001, 1.0) == 1);
  CHECK(partition_bucket(3.0, 1.0) == 2);
  CHECK(partition_bucket(0.3, 0.1) == 2);
  for (double w : {0.1, 0.01, 3e-5})
    for (int k = 1; k < 50; ++k) {
      const double lo = k * w;
      const double ratio = lo * (1.0 + 1e-9);
      CHECK(partition_bucket(ratio, w) == k);
      CHECK(partition_bucket(lo, w) == k - 1);
    }
}

TEST_CASE("partition: vertex-transitive graph has one class") {
  const auto g = generate(Torus{3, 8});
  const auto rep = partition_H(g, 0.01, ExcursionParams{}, 6000, 61);
  CHECK(rep.pooled);
  REQUIRE(rep.classes.size() == 1);
  CHECK(rep.classes[0].d == Catch::Approx(1.0));
  CHECK(rep.classes[0].vertices.size() == g.vertex_count());
  CHECK(std::isfinite(rep.C));
  const auto j = to_json(rep);
  CHECK(j["classes"].size() == 1);
  CHECK(j["C"].get<double>() == Catch::Approx(rep.C));
}

TEST_CASE("partition: classes partition a percolation cluster") {
  const auto g = generate(PercolationBall{2, 8, 0.8, 5});
  for (Vertex v = 0; v < g.vertex_count(); ++v) REQUIRE(eccentricity(g, v) > 2);
  const auto rep = partition_H(g, 0.05, fixed(1, 2, 1, 1, uniform_mixing_time(g)), 300, 71);
  CHECK_FALSE(rep.pooled);
  double total = 0.0;
  std::vector<int> seen(g.vertex_count(), 0);
  const double width = rep.min_degree * rep.epsilon / static_cast<double>(g.vertex_count());
  std::map<Vertex, std::int64_t> cls;
  for (const auto& c : rep.classes) {
    total += c.size;
    for (Vertex v : c.vertices) {
      ++seen[v];
      cls[v] = c.k;
    }
  }
  CHECK(total == Catch::Approx(static_cast<double>(g.vertex_count())));
  for (int s : seen) CHECK(s == 1);
  for (const auto& vr : rep.vertices) {
    CHECK(cls[vr.x] == vr.k);
    CHECK(vr.ratio > static_cast<double>(vr.k) * width);
    CHECK(vr.ratio <= static_cast<double>(vr.k + 1) * width);
  }
  double maxC = 0.0;
  for (const auto& c : rep.classes) maxC = std::max(maxC, c.C);
  CHECK(rep.C == maxC);
}

TEST_CASE("partition: cover-time predictor on Torus(3,8)") {
  const auto g = generate(Torus{3, 8});
  const auto rep = partition_H(g, 0.005, ExcursionParams{}, 10000, 81);
  const auto cov = estimate_cover_time(g, 200, 82);
  INFO("C " << rep.C << " cover " << cov.mean);
  CHECK(rep.C >= 0.5 * cov.mean);
  CHECK(rep.C <= 2.0 * cov.mean);
}

TEST_CASE("q: per-pair solve matches a doubled-chain oracle on Torus(2,5)") {
  const auto g = generate(Torus{2, 5});
  const auto geo = resolve_geometry(g, {0}, fixed(1, 2, 2, 1, uniform_mixing_time(g)));
  PairHitSolver solver(g, geo);
  const auto P = testsupport::lazy_kernel(g);
  const std::size_t n = g.vertex_count();
  // State (v, flag) -> v + n flag, flag = the origin has been visited.
  std::vector<std::vector<double>> Q(2 * n, std::vector<double>(2 * n, 0.0));
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t u = 0; u < n; ++u) {
        if (P[v][u] == 0.0) continue;
        const std::size_t g2 = (f == 1 || u == 0) ? 1 : 0;
        Q[v + n * f][u + n * g2] += P[v][u];
      }
  std::vector<bool> stop(2 * n, false);
  for (std::size_t v = 0; v < n; ++v)
    if (torus_distance(2, 5, v, 0) > 2) stop[v] = stop[v + n] = true;
  const auto window_hit = testsupport::hit_within(P, 0, geo.window);
  std::size_t pairs = 0;
  for (Vertex w = 0; w < n; ++w) {
    if (torus_distance(2, 5, w, 0) != 3) continue;
    std::vector<double> hit_val(2 * n, 0.0), any_val(2 * n, 0.0);
    hit_val[w + n] = 1.0;
    any_val[w] = any_val[w + n] = 1.0;
    const auto hit = testsupport::absorb(Q, stop, hit_val);
    const auto any = testsupport::absorb(Q, stop, any_val);
    for (Vertex z = 0; z < n; ++z) {
      if (torus_distance(2, 5, z, 0) != 1) continue;
      const double inside = hit[z] / any[z];
      const double expect = 1.0 - (1.0 - inside) * (1.0 - window_hit[w]);
      CHECK(solver.q(z, w) == Catch::Approx(expect).epsilon(1e-9));
      ++pairs;
    }
  }
  CHECK(pairs == 4 * 8);
}

TEST_CASE("q: averages to the success probability") {
  // E[q(entry, exit)] over first excursions equals P[S_0].
  const auto g = generate(Torus{2, 5});
  const auto geo = resolve_geometry(g, {0}, fixed(1, 2, 2, 1, uniform_mixing_time(g)));
  PairHitSolver solver(g, geo);
  RunningStats q, s;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    const auto c = run_first_cycles(g, geo, WalkConfig{91, i, std::nullopt}, 1, default_horizon(g));
    q.add(solver.q(c.records[0].entry, c.records[0].exit));
    s.add(c.records[0].hit ? 1.0 : 0.0);
  }
  // q is the conditional mean of the hit indicator, so its average has the
  // same expectation and a smaller variance.
  CHECK(std::abs(q.mean() - s.mean()) < 3.0 * s.estimate().stderr_);
  CHECK(q.variance() < s.variance());
}

TEST_CASE("q: Torus(3,8) stays below one and the product decays") {
  const auto g = generate(Torus{3, 8});
  const auto geo = resolve_geometry(g, {0}, ExcursionParams{});
  const auto cov = estimate_cover_time(g, 200, 101);
  const Time horizon = static_cast<Time>(0.6 * cov.mean);
  std::vector<double> products;
  double max_q = 0.0;
  for (std::uint64_t r = 0; r < 201; ++r) {
    const auto traj = trajectory(g, WalkConfig{102, r, std::nullopt}, horizon);
    const auto q = q_statistics(g, geo, decompose(geo, traj));
    CHECK(q.exact);
    CHECK(q.unit_pairs.empty());
    REQUIRE(q.log_product.size() == q.q.size());
    for (std::size_t j = 1; j < q.log_product.size(); ++j) REQUIRE(q.log_product[j] <= q.log_product[j - 1]);
    max_q = std::max(max_q, q.max_q);
    products.push_back(q.product());
  }
  CHECK(max_q < 1.0);
  std::sort(products.begin(), products.end());
  CHECK(products[100] <= std::pow(512.0, -0.4));
}

TEST_CASE("q: spider center has pairs with q = 1") {
  // Leaving through a different leg than the entry leg must cross the center.
  const auto g = spider(3, 5);
  const auto params = fixed(1, 2, 1, 1, uniform_mixing_time(g));
  const auto geo = resolve_geometry(g, {0}, params);
  PairHitSolver solver(g, geo);
  CHECK(solver.q(1, 3 + 5) == Catch::Approx(1.0));  // leg 0 -> leg 1
  CHECK(solver.q(1, 3) < 1.0);                      // same leg
  const auto traj = trajectory(g, WalkConfig{111, 0, std::nullopt}, 20000);
  const auto q = q_statistics(g, 0, params, traj);
  CHECK_FALSE(q.unit_pairs.empty());
  CHECK(q.max_q == Catch::Approx(1.0));
  CHECK(std::isinf(q.log_product.back()));
  CHECK(q.product() == 0.0);
  for (const auto& [z, w] : q.unit_pairs) CHECK((z - 1) / 5 != (w - 1) / 5);
}

TEST_CASE("p_j: averages concentrate like 1/k") {
  const auto g = generate(Torus{3, 6});
  const auto geo = resolve_geometry(g, {0}, fixed(1, 2, 2, 1, uniform_mixing_time(g)));
  EntryPairTable table;
  {
    const auto traj = trajectory(g, WalkConfig{121, 0, std::nullopt}, 2'000'000);
    table.add(decompose(geo, traj));
  }
  REQUIRE(table.pairs() > 10);
  RunningStats v8, v64;
  for (std::uint64_t r = 0; r < 400; ++r) {
    const auto c = run_first_cycles(g, geo, WalkConfig{122, r, std::nullopt}, 65, default_horizon(g));
    ExcursionTrace t{{0}, c.records};
    const auto p = table.sequence(t);
    REQUIRE(p.size() == 64);
    double s8 = 0.0, s64 = 0.0;
    for (std::size_t j = 0; j < 64; ++j) {
      if (j < 8) s8 += p[j];
      s64 += p[j];
    }
    v8.add(s8 / 8.0);
    v64.add(s64 / 64.0);
  }
  INFO("var8 " << v8.variance() << " var64 " << v64.variance());
  CHECK(v64.variance() <= v8.variance() / 3.0);
}
