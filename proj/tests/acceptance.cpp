// Acceptance suite: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "treepark/analytic.hpp"
#include "treepark/harness.hpp"
#include "treepark/oracle.hpp"
#include "treepark/parking.hpp"
#include "treepark/trees.hpp"

using namespace treepark;
namespace an = treepark::analytic;
namespace oc = treepark::oracle;
namespace hn = treepark::harness;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %-38s %s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

void criterion_1_path_counts() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  for (int n = 1; n <= 7 && ok; ++n) {
    for (int m = 1; m <= n && ok; ++m) {
      auto [count, total] = count_path_parking_functions(n, m);
      std::uint64_t expected = static_cast<std::uint64_t>(n + 1 - m);
      for (int i = 0; i < m - 1; ++i) expected *= static_cast<std::uint64_t>(n + 1);
      ok = count == expected;
      std::uint64_t pow = 1;
      for (int i = 0; i < m; ++i) pow *= static_cast<std::uint64_t>(n);
      ok = ok && total == pow;
    }
  }
  double secs = seconds_since(start);
  ok = ok && secs < 5.0;
  report(1, "exact path parking counts", ok, "all n<=7, " + fmt(secs) + " s");
}

void criterion_2_subcritical_fixed_point() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  double worst_p = 0.0, worst_mean = 0.0;
  for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.45}) {
    auto result = oc::rde_fixed_point(ArrivalLaw::poisson(alpha).as_pmf(512),
                                      OffspringLaw::poisson(1.0), 512, 1e-12, 200000);
    ok = ok && result.converged;
    double p_err = std::abs(result.pmf.at(0) - (1.0 - alpha));
    worst_p = std::max(worst_p, p_err);
    double exact = 1.0 - std::sqrt(1.0 - 2.0 * alpha);
    auto hi = result.pmf.mean_upper();
    ok = ok && hi.has_value();
    double lo = result.pmf.mean_lower();
    double mean_err = std::max(std::max(lo - exact, 0.0), hi ? std::max(exact - *hi, 0.0) : 1.0);
    worst_mean = std::max(worst_mean, mean_err);
    ok = ok && p_err <= 1e-6 && mean_err <= 1e-6;
  }
  double secs = seconds_since(start);
  ok = ok && secs < 30.0;
  report(2, "rde fixed point vs closed forms", ok,
         "max |dp|=" + fmt(worst_p) + ", mean defect=" + fmt(worst_mean) + ", " + fmt(secs) +
             " s");
}

void criterion_3_pgf_cross_validation() {
  bool ok = true;
  double worst_gap = 0.0, worst_residual = 0.0, worst_deriv = 0.0;
  for (double alpha : {0.2, 0.4}) {
    Pmf fp = oc::rde_fixed_point(ArrivalLaw::poisson(alpha).as_pmf(512),
                                 OffspringLaw::poisson(1.0), 512, 1e-13, 200000)
                 .pmf;
    an::Pgf pg = an::make_pgf(alpha);
    for (double s = 0.1; s <= 0.9 + 1e-12; s += 0.1) {
      double G = an::pgf_eval(pg, s);
      auto [lo, hi] = oc::pgf_of_pmf(fp, s);
      worst_gap = std::max(worst_gap, std::abs(G - 0.5 * (lo + hi)));
      worst_residual =
          std::max(worst_residual, std::abs(an::functional_equation_residual(s, alpha, pg.p, G)));
      double h = 1e-5;
      double fd = (an::pgf_eval(pg, s + h) - an::pgf_eval(pg, s - h)) / (2.0 * h);
      worst_deriv = std::max(worst_deriv, std::abs(an::pgf_derivative(s, alpha, pg.p, G) - fd));
    }
  }
  ok = worst_gap <= 1e-6 && worst_residual <= 1e-10 && worst_deriv <= 1e-6;
  report(3, "pgf vs oracle, residual, derivative", ok,
         "gap=" + fmt(worst_gap) + ", resid=" + fmt(worst_residual) + ", dG=" + fmt(worst_deriv));
}

void criterion_4_supercritical_constants() {
  auto sol = an::solve_p(0.9);
  bool ok = std::abs(sol.p - 0.251042) <= 1e-4 && std::abs(sol.s_prime - 0.3832) <= 1e-3;
  double worst_meet = 0.0;
  for (double alpha : {0.6, 0.75, 0.9}) {
    auto s = an::solve_p(alpha);
    worst_meet = std::max(worst_meet, std::abs(an::pgf_branch(s.s_prime, alpha, s.p, -1) -
                                               an::pgf_branch(s.s_prime, alpha, s.p, 0)));
  }
  ok = ok && worst_meet <= 1e-8;
  for (double alpha = 0.51; alpha <= 0.99 + 1e-12; alpha += 0.01) {
    auto s = an::solve_p(alpha);
    ok = ok && s.p > 1.0 - alpha && s.p < 1.0 / (4.0 * alpha);
  }
  report(4, "supercritical p and branch switch", ok,
         "p(0.9)=" + fmt(sol.p) + ", s'=" + fmt(sol.s_prime) + ", meet=" + fmt(worst_meet));
}

void criterion_5_lambert() {
  bool ok = true;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double x = -std::exp(-1.0) + (i + 0.5) * (20.0 + std::exp(-1.0)) / 1000.0;
    double w = an::lambert_w0(x);
    worst = std::max(worst, std::abs(w * std::exp(w) - x) / std::max(1.0, std::abs(x)));
  }
  for (int i = 0; i < 1000; ++i) {
    double x = -std::exp(-1.0) * std::pow(10.0, -8.0 * (i + 0.5) / 1000.0);
    double w = an::lambert_wm1(x);
    worst = std::max(worst, std::abs(w * std::exp(w) - x) / std::max(std::abs(x), 1e-300));
  }
  ok = worst <= 1e-12;
  double worst_fact = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    double x = -20.0 + 19.0 * i / 1000.0;
    worst_fact = std::max(worst_fact, std::abs(an::lambert_wm1(x * std::exp(x)) - x));
  }
  ok = ok && worst_fact <= 1e-10;
  report(5, "lambert w identities", ok,
         "residual=" + fmt(worst) + ", inverse defect=" + fmt(worst_fact));
}

void criterion_6_cayley_monte_carlo() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (double alpha : {0.1, 0.25, 0.4}) {
    auto rec = hn::estimate_parking_prob_cayley(2000, alpha, 20000, 1001, 1);
    double err = std::abs(rec.estimate - an::parking_prob_limit(alpha));
    ok = ok && err <= 0.02;
    detail += "e(" + fmt(alpha) + ")=" + fmt(err) + " ";
  }
  double prev = 2.0;
  for (int n : {500, 2000, 8000}) {
    auto rec = hn::estimate_parking_prob_cayley(n, 0.55, 20000, 1002, 1);
    ok = ok && rec.estimate < prev;
    prev = rec.estimate;
  }
  double secs = seconds_since(start);
  ok = ok && secs < 600.0;
  report(6, "cayley estimates vs limit law", ok, detail + fmt(secs) + " s");
}

void criterion_7_spine_decomposition() {
  const double alpha = 0.25;
  const double limit = an::parking_prob_limit(alpha);
  Pmf fp = oc::rde_fixed_point(ArrivalLaw::poisson(alpha).as_pmf(512),
                               OffspringLaw::poisson(1.0), 512, 1e-13, 200000)
               .pmf;
  double formula = oc::skip_free_parking_prob(fp);
  hn::ModelSpec model{OffspringLaw::poisson(1.0), ArrivalLaw::poisson(alpha)};
  auto rec = hn::estimate_parking_prob_spine(model, 10000, 10000, 7001, 1, 4096);
  bool ok = std::abs(rec.estimate - limit) <= 0.015 && std::abs(formula - limit) <= 0.015;
  double gap = std::abs(rec.estimate - formula);
  ok = ok && gap <= 3.0 * rec.stderr_;
  report(7, "spine walk vs skip-free formula", ok,
         "mc=" + fmt(rec.estimate) + ", formula=" + fmt(formula) + ", limit=" + fmt(limit) +
             ", gap=" + fmt(gap) + " (3sigma=" + fmt(3.0 * rec.stderr_) + ")");
}

void criterion_8_jones_model() {
  bool ok = std::abs(an::jones_alpha_c(0.25) - 0.5) <= 1e-12;
  auto mean_at_c = an::jones_mean_X(0.5, 0.25);
  ok = ok && mean_at_c.has_value() && std::abs(*mean_at_c - 1.5) <= 1e-12;
  hn::ModelSpec model{OffspringLaw::binary(0.25), ArrivalLaw::two_point(0.3)};
  auto est = hn::estimate_mean_root_visits_gw(model, 1 << 22, 1000000, 8001, 1);
  double gap = std::abs(est.record.estimate - 0.5338096);
  ok = ok && gap <= 3.0 * est.record.stderr_;
  report(8, "jones constants and monte carlo", ok,
         "mean=" + fmt(est.record.estimate) + ", gap=" + fmt(gap) +
             " (3sigma=" + fmt(3.0 * est.record.stderr_) +
             ", excluded=" + std::to_string(est.record.excluded_truncated) + ")");
}

void criterion_9_conjecture_consistency() {
  bool ok = true;
  double worst = 0.0;
  for (double alpha = 0.05; alpha <= 0.45 + 1e-12; alpha += 0.05) {
    auto c = an::conjecture_mean_X(alpha, 1.0, alpha * alpha);
    auto m = an::mean_X(alpha);
    ok = ok && c.has_value() && m.has_value();
    if (c && m) worst = std::max(worst, std::abs(*c - *m));
  }
  for (double beta : {0.1, 0.2, 0.25}) {
    for (double alpha = 0.05; alpha <= an::jones_alpha_c(beta) - 0.03; alpha += 0.05) {
      auto c = an::conjecture_mean_X(alpha, 2.0 * beta, alpha);
      auto j = an::jones_mean_X(alpha, beta);
      ok = ok && c.has_value() && j.has_value();
      if (c && j) worst = std::max(worst, std::abs(*c - *j));
    }
  }
  ok = ok && worst <= 1e-12;
  double worst_ac = 0.0;
  for (double beta : {0.1, 0.2, 0.25}) {
    auto r = an::conjecture_alpha_c(2.0 * beta, [](double a) { return a; });
    ok = ok && r.transition_found;
    worst_ac = std::max(worst_ac, std::abs(r.alpha_c - an::jones_alpha_c(beta)));
  }
  auto rp = an::conjecture_alpha_c(1.0, [](double a) { return a * a; });
  ok = ok && rp.transition_found;
  worst_ac = std::max(worst_ac, std::abs(rp.alpha_c - 0.5));
  ok = ok && worst_ac <= 1e-10;
  report(9, "conjecture reductions", ok,
         "mean defect=" + fmt(worst) + ", alpha_c defect=" + fmt(worst_ac));
}

void criterion_10_binary_tree() {
  bool ok = true;
  // alpha = 0.6: mean root visits strictly increases in depth, beyond CI.
  double prev_hi = -1.0;
  std::string detail;
  Rng rng(10001);
  for (int depth : {10, 14, 18}) {
    auto est = oc::binary_tree_root_visits(depth, 0.6, depth == 18 ? 2000 : 8000, rng);
    ok = ok && est.ci_lo > prev_hi;
    prev_hi = est.ci_hi;
    detail += "m(" + std::to_string(depth) + ")=" + fmt(est.mean) + " ";
  }
  // alpha = 0.02: the exact depth recursion stabilizes below 2 - alpha.
  double m18 = oc::binary_tree_exact_pmf(18, 0.02, 64).mean_lower();
  double m22 = oc::binary_tree_exact_pmf(22, 0.02, 64).mean_lower();
  double rel = std::abs(m22 - m18) / m18;
  ok = ok && rel <= 0.01 && m22 < 2.0 - 0.02;
  report(10, "binary tree phase behaviour", ok,
         detail + "rel(18->22)=" + fmt(rel) + ", m22=" + fmt(m22));
}

void criterion_11_properties_and_determinism() {
  bool ok = true;
  Rng rng(11001);
  // Abelian suite: order invariance on randomized small instances.
  for (int rep = 0; rep < 10000 && ok; ++rep) {
    int n = 2 + static_cast<int>(rng() % 7);
    RootedTree t = sample_cayley_tree(n, rng);
    std::vector<int> counts(static_cast<std::size_t>(n));
    ArrivalConfig cfg;
    cfg.total = 0;
    for (auto& c : counts) {
      c = static_cast<int>(rng() % 3);
      cfg.total += c;
    }
    cfg.counts = counts;
    auto reference = park_recursive(t, cfg);
    auto shuffled = park_sequential(t, cfg, rng);
    ok = shuffled.root_visits == reference.root_visits &&
         shuffled.occupied == reference.occupied;
  }
  // Monotonicity suite: one extra car never lowers chi.
  for (int rep = 0; rep < 10000 && ok; ++rep) {
    int n = 2 + static_cast<int>(rng() % 7);
    RootedTree t = sample_cayley_tree(n, rng);
    ArrivalConfig cfg;
    cfg.counts.assign(static_cast<std::size_t>(n), 0);
    cfg.total = 0;
    for (auto& c : cfg.counts) {
      c = static_cast<int>(rng() % 3);
      cfg.total += c;
    }
    int before = park_recursive(t, cfg).root_visits;
    ++cfg.counts[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n))];
    ++cfg.total;
    ok = park_recursive(t, cfg).root_visits >= before;
  }
  // Determinism: byte-identical CSV across repeated seeded runs and job counts.
  hn::ExperimentConfig config;
  config.ensemble = hn::EnsembleKind::Cayley;
  config.size = 150;
  config.alpha_grid = {0.2, 0.5};
  config.trials = 400;
  config.seed = 31415;
  config.record_timing = false;
  config.jobs = 1;
  auto r1 = hn::run_sweep(config, nullptr);
  config.jobs = 3;
  auto r2 = hn::run_sweep(config, nullptr);
  ok = ok && hn::records_to_csv(r1, false) == hn::records_to_csv(r2, false);
  report(11, "abelian, monotone, deterministic", ok, "10^4 instances per suite");
}

}  // namespace

int main() {
  criterion_1_path_counts();
  criterion_2_subcritical_fixed_point();
  criterion_3_pgf_cross_validation();
  criterion_4_supercritical_constants();
  criterion_5_lambert();
  criterion_6_cayley_monte_carlo();
  criterion_7_spine_decomposition();
  criterion_8_jones_model();
  criterion_9_conjecture_consistency();
  criterion_10_binary_tree();
  criterion_11_properties_and_determinism();
  if (failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
  } else {
    std::printf("acceptance: %d criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
