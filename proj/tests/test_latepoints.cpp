#include <catch_amalgamated.hpp>

#include <map>
#include <random>

#include "rwlab/latepoints.hpp"
#include "rwlab/oracle.hpp"
#include "support.hpp"

using namespace rwlab;

namespace {

// Exact law of the range mask of X(0..T) from pi, by enumerating lazy paths.
std::map<unsigned, double> range_law(const GraphTopology& g, int T) {
  const auto P = testsupport::lazy_kernel(g);
  const std::size_t n = g.vertex_count();
  std::map<std::pair<std::size_t, unsigned>, double> dist;
  for (std::size_t x = 0; x < n; ++x)
    dist[{x, 1u << x}] += double(g.degree(Vertex(x))) / double(g.total_degree());
  for (int t = 0; t < T; ++t) {
    std::map<std::pair<std::size_t, unsigned>, double> next;
    for (const auto& [s, p] : dist)
      for (std::size_t y = 0; y < n; ++y)
        if (P[s.first][y] > 0) next[{y, s.second | (1u << y)}] += p * P[s.first][y];
    dist.swap(next);
  }
  std::map<unsigned, double> law;
  for (const auto& [s, p] : dist) law[s.second] += p;
  return law;
}

struct ExactMoments {
  double tv = 0.0;
  double m = 0.0;
};

ExactMoments exact_tv_and_moment(const GraphTopology& g, int T) {
  const auto law = range_law(g, T);
  const std::size_t n = g.vertex_count();
  const unsigned full = (1u << n) - 1;
  ExactMoments out;
  for (unsigned f = 0; f <= full; ++f) {
    double mu = 0.0;
    for (const auto& [R, p] : law)
      if ((f & ~R) == 0) mu += p * std::pow(0.5, __builtin_popcount(R));
    out.tv += 0.5 * std::abs(mu - std::pow(0.5, double(n)));
  }
  for (const auto& [R, p] : law)
    for (const auto& [S, q] : law) out.m += p * q * std::pow(2.0, __builtin_popcount(~R & ~S & full));
  return out;
}

}  // namespace

TEST_CASE("late_set: trivial regimes") {
  const auto g = generate(Torus{2, 4});
  Rng rng(1);
  CHECK(late_set(g, 1000.0, 100.0, rng).vertices.empty());
  const auto l0 = late_set(g, 0.0, 100.0, WalkConfig{4, 0, std::nullopt});
  CHECK(l0.vertices.size() == g.vertex_count() - 1);
  const auto start = run_range(g, WalkConfig{4, 0, std::nullopt}, 0).start;
  CHECK(std::find(l0.vertices.begin(), l0.vertices.end(), start) == l0.vertices.end());
  CHECK(horizon_for(0.5, 101.0) == 50);
  CHECK_THROWS_AS(horizon_for(-0.1, 10.0), Error);
  CHECK_THROWS_AS(horizon_for(0.1, 0.0), Error);
}

TEST_CASE("late_set: exponent on Torus(3,8) at alpha = 0.5") {
  const auto g = generate(Torus{3, 8});
  const double t_cov = estimate_cover_time(g, 200, 100).mean;
  const auto sizes = late_set_sizes(g, 0.5, t_cov, 500, 101);
  const double mean = estimate_of(sizes).mean;
  const double expo = std::log2(mean) / std::log2(double(g.vertex_count()));
  INFO("E|L| " << mean << " exponent " << expo);
  CHECK(std::abs(expo - 0.5) <= 0.15);
}

TEST_CASE("sample_marking_mu: trivial regimes") {
  const auto k5 = generate(Complete{5});
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto m = sample_marking_mu(k5, 0.0, 10.0, rng);
    CHECK(k5.vertex_count() - m.zeros() <= 1);
  }
  // Full coverage: bits marginally fair.
  std::vector<RunningStats> means(5);
  for (std::uint64_t r = 0; r < 10'000; ++r) {
    const auto m = sample_marking_mu(k5, 50.0, 100.0, WalkConfig{8, r, std::nullopt});
    for (int v = 0; v < 5; ++v) means[v].add(m.bits[v]);
  }
  for (int v = 0; v < 5; ++v) CHECK(means[v].estimate().zscore(0.5) < 3.0);
}

TEST_CASE("sample_marking_mu: zeros at least the late set, and P[bit] = coverage / 2") {
  const auto g = generate(Torus{2, 5});
  const double t_ref = 60.0;
  std::vector<RunningStats> bit(g.vertex_count()), cov(g.vertex_count());
  for (std::uint64_t r = 0; r < 10'000; ++r) {
    const WalkConfig wc{21, r, std::nullopt};
    const auto m = sample_marking_mu(g, 0.5, t_ref, wc);
    const auto range = run_range(g, wc, horizon_for(0.5, t_ref));
    CHECK(m.zeros() >= g.vertex_count() - range.visited_count);
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      CHECK((m.bits[v] == 0 || range.visited[v]));
      bit[v].add(m.bits[v]);
      cov[v].add(range.visited[v]);
    }
  }
  // Coins are independent of the range, so Var(bit - cov/2) is known per replica.
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    const double c = cov[v].mean();
    const double se = std::sqrt(c / 4.0 / 10'000.0);
    INFO("vertex " << v);
    CHECK(std::abs(bit[v].mean() - 0.5 * c) <= 3 * se);
  }
}

TEST_CASE("sample_marking_uniform: fair, independent, normal zero count") {
  const auto g = generate(Torus{3, 8});
  Rng rng(11);
  RunningStats b0, b1, prod;
  std::vector<double> zs;
  std::mt19937_64 jitter_src(5);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const double spacing = 2.0 / std::sqrt(512.0);
  for (int i = 0; i < 10'000; ++i) {
    const auto m = sample_marking_uniform(g, rng);
    b0.add(m.bits[0]);
    b1.add(m.bits[300]);
    prod.add((m.bits[0] - 0.5) * (m.bits[300] - 0.5));
    // z lives on a lattice of spacing 2/sqrt|V|; spreading each value over its
    // cell makes it continuous so the KS comparison to N(0,1) is fair.
    zs.push_back(zero_count_statistic(m) + spacing * jitter(jitter_src));
  }
  CHECK(b0.estimate().zscore(0.5) < 3.0);
  CHECK(b1.estimate().zscore(0.5) < 3.0);
  CHECK(prod.estimate().zscore(0.0) < 3.0);
  CHECK(testsupport::ks_pvalue(zs, [](double x) { return normal_cdf(x); }) > 0.01);
}

TEST_CASE("zero_count_statistic examples") {
  std::vector<std::uint8_t> zeros(100, 0), ones(100, 1), half(100, 0);
  for (int i = 0; i < 50; ++i) half[i] = 1;
  CHECK(zero_count_statistic(zeros) == 10.0);
  CHECK(zero_count_statistic(ones) == -10.0);
  CHECK(zero_count_statistic(half) == 0.0);
}

TEST_CASE("distinguisher: nominal level on uniform markings and covered graphs") {
  const auto g = generate(Torus{3, 8});
  DistinguisherConfig cfg;
  cfg.replicas = 10'000;
  cfg.seed = 3;
  CHECK(uniform_rejection(g, cfg).power.mean <= 0.005);

  const double t_cov = estimate_cover_time(g, 200, 100).mean;
  cfg.replicas = 1000;
  const auto covered = distinguisher_power(g, 1.2, t_cov, cfg);
  INFO("alpha 1.2 power " << covered.power.mean);
  CHECK(covered.power.mean <= 0.01);
}

TEST_CASE("distinguisher: mean z equals E|L| / sqrt|V|") {
  // zeros = |L| + Binomial(|V| - |L|, 1/2), so E z = E|L| / sqrt|V|.
  const auto g = generate(Torus{3, 8});
  const double t_cov = estimate_cover_time(g, 200, 100).mean;
  DistinguisherConfig cfg;
  cfg.replicas = 1000;
  cfg.seed = 5;
  const auto res = distinguisher_power(g, 0.3, t_cov, cfg);
  RunningStats diff;
  for (std::size_t i = 0; i < res.z.size(); ++i) diff.add(res.z[i] - double(res.late[i]) / std::sqrt(512.0));
  CHECK(diff.estimate().zscore(0.0) < 3.0);
}

TEST_CASE("distinguisher: power nonincreasing in alpha under common random numbers") {
  const auto g = generate(Torus{3, 6});
  const double t_cov = estimate_cover_time(g, 200, 9).mean;
  DistinguisherConfig cfg;
  cfg.replicas = 400;
  cfg.seed = 12;
  std::size_t prev = cfg.replicas + 1;
  std::vector<double> prev_z;
  for (double a : {0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2}) {
    const auto r = distinguisher_power(g, a, t_cov, cfg);
    CHECK(r.rejections <= prev);
    // Pathwise: each replica's zero count can only fall as the range grows.
    for (std::size_t i = 0; i < prev_z.size(); ++i) CHECK(r.z[i] <= prev_z[i]);
    prev = r.rejections;
    prev_z = r.z;
  }
}

TEST_CASE("zero-count mean grows with n on Torus(3,n) at alpha = 0.3") {
  double prev = -1e9;
  for (int n : {6, 8, 10}) {
    const auto g = generate(Torus{3, n});
    const double t_cov = estimate_cover_time(g, 100, 40 + n).mean;
    DistinguisherConfig cfg;
    cfg.replicas = 300;
    cfg.seed = 41;
    const double mean_z = estimate_of(distinguisher_power(g, 0.3, t_cov, cfg).z).mean;
    INFO("n " << n << " mean z " << mean_z);
    CHECK(mean_z > prev);
    prev = mean_z;
  }
}

TEST_CASE("exp moment: trivial cases") {
  const auto none = exp_moment_from_intersections({0, 0, 0, 0}, std::numbers::ln2);
  CHECK(none.m_hat.mean == 1.0);
  CHECK(none.tv_upper == 0.0);
  CHECK_FALSE(none.overflow);
  const auto all = exp_moment_from_intersections({7, 7}, std::numbers::ln2);
  CHECK(all.m_hat.mean == Catch::Approx(128.0).epsilon(1e-13));
  CHECK(exp_moment_from_intersections({501, 3}, std::numbers::ln2).overflow);

  // alpha = 0: both late sets are V minus one vertex.
  const auto k5 = generate(Complete{5});
  DistinguisherConfig cfg;
  cfg.pairs = 200;
  const auto r = exp_moment_estimate(k5, 0.0, 10.0, cfg);
  for (auto k : r.intersections) CHECK((k == 3 || k == 4));
}

TEST_CASE("exp moment: exact TV <= (1/2) sqrt(m - 1) on K_2 and K_3, and MC m matches exact m") {
  for (int n : {2, 3}) {
    const auto g = generate(Complete{n});
    for (int T = 0; T <= 5; ++T) {
      const auto ex = exact_tv_and_moment(g, T);
      INFO("K_" << n << " T=" << T << " tv " << ex.tv << " m " << ex.m);
      CHECK(ex.tv <= 0.5 * std::sqrt(std::max(ex.m - 1.0, 0.0)) + 1e-15);
      DistinguisherConfig cfg;
      cfg.pairs = 20'000;
      cfg.seed = std::uint64_t(10 * n + T);
      // alpha = T with reference 1 gives horizon T.
      const auto mc = exp_moment_estimate(g, double(T), 1.0, cfg);
      CHECK(mc.m_hat.zscore(ex.m) < 3.5);
    }
  }
}

TEST_CASE("correlation_ratio: single point and sparse joint events") {
  const auto g = generate(Torus{3, 6});
  const double t_cov = estimate_cover_time(g, 100, 2).mean;
  const auto one = correlation_ratio(g, 0.3, t_cov, {5}, 2000, 3);
  CHECK(one.ratio == 1.0);
  CHECK(one.reference == Catch::Approx(std::pow(216.0, -0.3)));

  const auto sparse = correlation_ratio(g, 0.7, t_cov, {0, 100, 200}, 400, 4);
  CHECK(sparse.insufficient_events);
  CHECK(std::isnan(sparse.ratio));
  CHECK(sparse.ratio_interval.hi > sparse.ratio_interval.lo);
  CHECK_THROWS_AS(correlation_ratio(g, 0.5, t_cov, {1, 1}, 10, 0), Error);
  try {
    correlation_ratio(g, 5.0, t_cov, {0, 100}, 50, 0);
    FAIL("expected InsufficientEvents");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientEvents);
  }
}

TEST_CASE("latepoints: results independent of thread count") {
  const auto g = generate(Torus{3, 6});
  DistinguisherConfig cfg;
  cfg.replicas = 64;
  cfg.pairs = 64;
  cfg.seed = 77;
  const auto a = exp_moment_estimate(g, 0.6, 4000.0, cfg);
  const auto d1 = distinguisher_power(g, 0.3, 4000.0, cfg);
  cfg.threads = 3;
  const auto b = exp_moment_estimate(g, 0.6, 4000.0, cfg);
  const auto d2 = distinguisher_power(g, 0.3, 4000.0, cfg);
  CHECK(a.intersections == b.intersections);
  CHECK(a.m_hat.mean == b.m_hat.mean);
  CHECK(d1.z == d2.z);
}
