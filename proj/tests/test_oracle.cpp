#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "treepark/analytic.hpp"
#include "treepark/oracle.hpp"
#include "treepark/parking.hpp"
#include "treepark/trees.hpp"

using namespace treepark;
using namespace treepark::oracle;

namespace {

RootedTree complete_binary(int depth) {
  int n = (1 << (depth + 1)) - 1;
  RootedTree t;
  t.n_vertices = n;
  t.root = 0;
  t.parent.assign(static_cast<std::size_t>(n), RootedTree::kNoParent);
  for (int v = 1; v < n; ++v) t.parent[static_cast<std::size_t>(v)] = (v - 1) / 2;
  rebuild_children(t);
  t.origin_tag = origin::CompleteBinary{depth};
  return t;
}

}  // namespace

TEST_CASE("rde iterates increase stochastically and converge monotonically") {
  const int K = 128;
  Pmf arrival = ArrivalLaw::poisson(0.3).as_pmf(K);
  auto offspring = OffspringLaw::poisson(1.0);
  Pmf cur = Pmf::delta(0, K);
  Pmf prev = cur;
  double prev_tv = 2.0;
  for (int it = 0; it < 30; ++it) {
    Pmf next = rde_step(cur, arrival, offspring, K);
    // Stochastic monotonicity: the CDF never increases from one iterate to
    // the next (the map is monotone and delta_0 is the minimal start).
    double cdf_prev = 0.0, cdf_next = 0.0;
    for (int k = 0; k < K; ++k) {
      cdf_prev += cur.at(k);
      cdf_next += next.at(k);
      CHECK(cdf_next <= cdf_prev + 1e-13);
    }
    double tv = cur.tv_distance(next);
    CHECK(tv <= prev_tv + 1e-13);
    prev_tv = tv;
    prev = cur;
    cur = next;
  }
}

TEST_CASE("fixed point reproduces the subcritical closed forms") {
  const int K = 256;
  for (double alpha : {0.1, 0.25, 0.4}) {
    auto result = rde_fixed_point(ArrivalLaw::poisson(alpha).as_pmf(K),
                                  OffspringLaw::poisson(1.0), K, 1e-12, 100000);
    REQUIRE(result.converged);
    CHECK(result.pmf.at(0) == doctest::Approx(1.0 - alpha).epsilon(1e-8));
    auto hi = result.pmf.mean_upper();
    REQUIRE(hi.has_value());
    double exact = 1.0 - std::sqrt(1.0 - 2.0 * alpha);
    CHECK(result.pmf.mean_lower() <= exact + 1e-8);
    CHECK(*hi >= exact - 1e-8);
    CHECK(*hi - result.pmf.mean_lower() <= 1e-7);
  }
}

TEST_CASE("panjer and generic convolution paths agree for poisson offspring") {
  const int K = 96;
  Pmf arrival = ArrivalLaw::two_point(0.4).as_pmf(K);
  Pmf x = rde_fixed_point(arrival, OffspringLaw::poisson(1.0), K, 1e-10, 10000).pmf;
  Pmf via_panjer = rde_step(x, arrival, OffspringLaw::poisson(1.0), K);
  Pmf via_generic = rde_step(x, arrival, OffspringLaw::poisson(1.0).as_pmf(K), K);
  for (int k = 0; k <= K; ++k) {
    CHECK(via_panjer.at(k) == doctest::Approx(via_generic.at(k)).epsilon(1e-9));
  }
}

TEST_CASE("supercritical fixed point keeps tail mass and matches solve_p") {
  auto r512 = rde_fixed_point(ArrivalLaw::poisson(0.6).as_pmf(512),
                              OffspringLaw::poisson(1.0), 512, 1e-12, 100000);
  auto r1024 = rde_fixed_point(ArrivalLaw::poisson(0.6).as_pmf(1024),
                               OffspringLaw::poisson(1.0), 1024, 1e-12, 100000);
  // Divergent mean: the tail does not vanish under refinement and the
  // in-range partial mean keeps growing.
  CHECK(r512.pmf.tail_mass > 1e-4);
  CHECK(r1024.pmf.tail_mass > 1e-4);
  CHECK(!r512.pmf.mean_upper().has_value());
  CHECK(r1024.pmf.mean_lower() > r512.pmf.mean_lower() + 0.01);
  double p = analytic::solve_p(0.6).p;
  CHECK(r1024.pmf.at(0) == doctest::Approx(p).epsilon(1e-6));
}

TEST_CASE("jones fixed point reproduces the closed-form mean") {
  const int K = 512;
  auto result = rde_fixed_point(ArrivalLaw::two_point(0.3).as_pmf(K),
                                OffspringLaw::binary(0.25), K, 1e-13, 200000);
  REQUIRE(result.converged);
  auto hi = result.pmf.mean_upper();
  REQUIRE(hi.has_value());
  auto exact = analytic::jones_mean_X(0.3, 0.25);
  REQUIRE(exact.has_value());
  CHECK(result.pmf.mean_lower() <= *exact + 1e-7);
  CHECK(*hi >= *exact - 1e-7);
}

TEST_CASE("pgf bracket of the fixed point matches the analytic pgf") {
  const int K = 512;
  for (double alpha : {0.2, 0.4}) {
    Pmf fp = rde_fixed_point(ArrivalLaw::poisson(alpha).as_pmf(K),
                             OffspringLaw::poisson(1.0), K, 1e-13, 100000)
                 .pmf;
    for (double s = 0.1; s <= 0.9 + 1e-12; s += 0.1) {
      auto [lo, hi] = pgf_of_pmf(fp, s);
      CHECK(lo <= hi + 1e-15);
      double mid = 0.5 * (lo + hi);
      CHECK(std::abs(analytic::pgf(s, alpha) - mid) <= 1e-6);
    }
  }
}

TEST_CASE("enumerate_exact on a two-vertex path") {
  RootedTree t;
  t.n_vertices = 2;
  t.root = 0;
  t.parent = {RootedTree::kNoParent, 0};
  rebuild_children(t);
  double q = 0.3;
  Pmf law = enumerate_exact(t, {{0, q}, {1, 1.0 - q}});
  // chi = a_root: the single child's car parks on the child vertex.
  CHECK(law.at(0) == doctest::Approx(q).epsilon(1e-14));
  CHECK(law.at(1) == doctest::Approx(1.0 - q).epsilon(1e-14));
  CHECK(law.at(2) == doctest::Approx(0.0));
}

TEST_CASE("enumerate_exact matches empirical frequencies on a random tree") {
  Rng rng(321);
  RootedTree t = sample_cayley_tree(6, rng);
  std::vector<std::pair<int, double>> support{{0, 0.6}, {1, 0.25}, {2, 0.15}};
  Pmf exact = enumerate_exact(t, support);
  CHECK_NOTHROW(exact.validate(1e-9));

  const int trials = 200000;
  std::vector<long long> counts(16, 0);
  std::vector<double> cum;
  double c = 0.0;
  for (auto [v, prob] : support) {
    c += prob;
    cum.push_back(c);
  }
  for (int trial = 0; trial < trials; ++trial) {
    ArrivalConfig cfg;
    cfg.counts.resize(6);
    cfg.total = 0;
    for (auto& cnt : cfg.counts) {
      double u = uniform01(rng);
      std::size_t idx = 0;
      while (idx + 1 < cum.size() && u > cum[idx]) ++idx;
      cnt = support[idx].first;
      cfg.total += cnt;
    }
    auto out = park_recursive(t, cfg);
    ++counts[static_cast<std::size_t>(std::min(out.root_visits, 15))];
  }
  double chi2 = 0.0;
  int cells = 0;
  for (int k = 0; k <= 12; ++k) {
    double expected = exact.at(k) * trials;
    if (expected < 10.0) continue;
    double d = static_cast<double>(counts[static_cast<std::size_t>(k)]) - expected;
    chi2 += d * d / expected;
    ++cells;
  }
  REQUIRE(cells >= 2);
  CHECK(chi2 < 4.0 * cells + 25.0);
}

TEST_CASE("enumerate_exact agrees with the depth recursion on binary trees") {
  for (int depth : {1, 2, 3}) {
    RootedTree t = complete_binary(depth);
    Pmf by_enum = enumerate_exact(t, {{0, 0.85}, {2, 0.15}});
    Pmf by_recursion = binary_tree_exact_pmf(depth, 0.3, 64);
    for (int k = 0; k <= 10; ++k) {
      CHECK(by_enum.at(k) == doctest::Approx(by_recursion.at(k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("enumerate_exact rejects oversized instances") {
  RootedTree t = complete_binary(4);  // 31 vertices
  std::vector<std::pair<int, double>> support{{0, 0.5}, {1, 0.3}, {2, 0.2}};
  CHECK_THROWS_AS(enumerate_exact(t, support), validation_error);  // 3^31 configs
}

TEST_CASE("walk examples: constant increments") {
  Rng rng(1);
  auto zero = walk_simulate([](Rng&) { return 0; }, 20, rng);
  CHECK(!zero.failed_within_horizon);
  CHECK(zero.min_C == 1);  // C_n = n, minimum at n = 1
  CHECK(zero.root_visits_bound == 0);

  auto ones = walk_simulate([](Rng&) { return 1; }, 20, rng);
  CHECK(!ones.failed_within_horizon);
  CHECK(ones.min_C == 0);
  CHECK(ones.root_visits_bound == 1);

  auto twos = walk_simulate([](Rng&) { return 2; }, 20, rng);
  CHECK(twos.failed_within_horizon);
  CHECK(twos.first_failure_step == 1);
  CHECK(twos.root_visits_bound >= 2);
}

TEST_CASE("walk with a scripted burst fails exactly when the deficit appears") {
  int step = 0;
  auto sampler = [&step](Rng&) {
    ++step;
    return step == 3 ? 5 : 0;  // C: 1, 2, -2, -1, 0, ...
  };
  Rng rng(2);
  auto r = walk_simulate(sampler, 10, rng);
  CHECK(r.failed_within_horizon);
  CHECK(r.first_failure_step == 3);
  CHECK(r.min_C == -2);
  CHECK(r.root_visits_bound == 3);
}

TEST_CASE("skip-free formula agrees with the subcritical parking probability") {
  const int K = 512;
  for (double alpha : {0.1, 0.25, 0.4}) {
    Pmf fp = rde_fixed_point(ArrivalLaw::poisson(alpha).as_pmf(K),
                             OffspringLaw::poisson(1.0), K, 1e-13, 100000)
                 .pmf;
    CHECK(skip_free_parking_prob(fp) ==
          doctest::Approx(analytic::parking_prob_limit(alpha)).epsilon(1e-8));
  }
  CHECK(skip_free_parking_prob(Pmf::delta(0, 8)) == doctest::Approx(1.0));
  CHECK(skip_free_parking_prob(Pmf::delta(1, 8)) == doctest::Approx(0.0));
  CHECK(skip_free_parking_prob(Pmf::delta(3, 8)) == doctest::Approx(0.0));
  Pmf no_zero(8);
  no_zero.probs[1] = 0.9;
  no_zero.probs[2] = 0.1;  // mean 1.1 >= 1 -> 0
  CHECK(skip_free_parking_prob(no_zero) == doctest::Approx(0.0));
}

TEST_CASE("pmf sampler reproduces its distribution") {
  Pmf pmf(4);
  pmf.probs = {0.4, 0.0, 0.35, 0.0, 0.25};
  pmf.tail_mass = 0.0;
  PmfSampler sampler(pmf);
  Rng rng(9);
  std::array<long long, 5> counts{};
  const int trials = 300000;
  for (int t = 0; t < trials; ++t) ++counts[static_cast<std::size_t>(sampler(rng))];
  CHECK(static_cast<double>(counts[0]) / trials == doctest::Approx(0.4).epsilon(0.01));
  CHECK(counts[1] == 0);
  CHECK(static_cast<double>(counts[2]) / trials == doctest::Approx(0.35).epsilon(0.01));
  CHECK(static_cast<double>(counts[4]) / trials == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("binary tree monte carlo agrees with the exact depth recursion") {
  const int depth = 6;
  const double alpha = 0.3;
  Pmf exact = binary_tree_exact_pmf(depth, alpha, 128);
  double exact_mean = exact.mean_lower();
  REQUIRE(exact.tail_mass < 1e-9);
  Rng rng(77);
  auto mc = binary_tree_root_visits(depth, alpha, 40000, rng);
  CHECK(std::abs(mc.mean - exact_mean) <= 4.0 * mc.stderr_);
  // MC on the same tree shape agrees with direct parking simulation too.
  Rng rng2(78);
  RootedTree t = complete_binary(depth);
  auto law = ArrivalLaw::two_point(alpha);
  long long visits = 0;
  const int trials = 40000;
  for (int trial = 0; trial < trials; ++trial) {
    auto cfg = assign_arrivals_iid(t, law, rng2);
    visits += park_recursive(t, cfg).root_visits;
  }
  double direct = static_cast<double>(visits) / trials;
  CHECK(std::abs(direct - exact_mean) <= 5.0 * mc.stderr_);
}
