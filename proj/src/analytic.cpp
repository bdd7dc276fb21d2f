#include "treepark/analytic.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace treepark::analytic {

namespace {

constexpr double kBranchPoint = -0.36787944117144233;  // -1/e
constexpr int kMaxHalley = 50;

// Halley refinement of w*e^w = x from a branch-appropriate starting point.
// Near w = -1 the derivative vanishes and the update is skipped; the
// branch-point series start is already accurate there.
double halley_w(double x, double w) {
  for (int iter = 0; iter < kMaxHalley; ++iter) {
    if (std::abs(w + 1.0) < 1e-6) break;
    double ew = std::exp(w);
    double f = w * ew - x;
    double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    if (denom == 0.0) break;
    double dw = f / denom;
    w -= dw;
    if (std::abs(dw) <= 1e-14 * (1.0 + std::abs(w))) break;
  }
  return w;
}

// Series around the branch point: w = -1 + q - q^2/3 + 11 q^3/72, q = sqrt(2(e x + 1)).
double branch_point_series(double x, int branch) {
  double q = std::sqrt(std::max(0.0, 2.0 * (std::exp(1.0) * x + 1.0)));
  if (branch == -1) q = -q;
  return -1.0 + q - q * q / 3.0 + 11.0 * q * q * q / 72.0;
}

}  // namespace

double lambert_w0(double x) {
  if (x < kBranchPoint) {
    if (x > kBranchPoint - 1e-12) x = kBranchPoint;
    else throw std::domain_error("lambert_w0: argument below -1/e");
  }
  if (x == 0.0) return 0.0;
  if (x < kBranchPoint + 4e-13) return branch_point_series(x, 0);
  double w;
  if (x < kBranchPoint + 0.04) {
    w = branch_point_series(x, 0);
  } else if (x < 0.5) {
    // series around 0: w = x - x^2 + 3/2 x^3
    w = x * (1.0 - x * (1.0 - 1.5 * x));
  } else if (x < 2.0) {
    w = std::log(x / std::log1p(x));
  } else {
    double l1 = std::log(x);
    double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  w = halley_w(x, w);
  return std::max(w, -1.0);
}

double lambert_wm1(double x) {
  if (x >= 0.0) throw std::domain_error("lambert_wm1: argument must be negative");
  if (x < kBranchPoint) {
    if (x > kBranchPoint - 1e-12) x = kBranchPoint;
    else throw std::domain_error("lambert_wm1: argument below -1/e");
  }
  if (x < kBranchPoint + 4e-13) return branch_point_series(x, -1);
  double w;
  if (x < kBranchPoint + 0.04) {
    w = branch_point_series(x, -1);
  } else {
    double l1 = std::log(-x);
    double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  w = halley_w(x, std::min(w, -1.0));
  return std::min(w, -1.0);
}

double g_p(double s, double alpha, double p) {
  if (s <= 0.0) throw std::domain_error("g_p: s must be positive");
  return alpha * s - alpha - 1.0 + (1.0 - 1.0 / s) * p;
}

double h_p(double s, double alpha, double p) {
  if (s <= 0.0) throw std::domain_error("h_p: s must be positive");
  return -std::exp(g_p(s, alpha, p)) / s;
}

double h_p_prime(double s, double alpha, double p) {
  if (s <= 0.0) throw std::domain_error("h_p_prime: s must be positive");
  double s2 = s * s;
  return std::exp(g_p(s, alpha, p)) * (1.0 / s2 - (alpha + p / s2) / s);
}

namespace {

// Residual of 1/s_p * exp(alpha*s_p - alpha + (1 - 1/s_p) p) = 1; the root in
// (1 - alpha, 1/(4 alpha)) is the supercritical P(X=0).
double p_residual(double p, double alpha) {
  double disc = std::max(0.0, 1.0 - 4.0 * p * alpha);
  double sp = (1.0 - std::sqrt(disc)) / (2.0 * alpha);
  return std::exp(alpha * sp - alpha + (1.0 - 1.0 / sp) * p) / sp - 1.0;
}

// Same residual in extended precision, written as expm1 of the log-residual
// so it keeps relative accuracy near the root.
long double p_residual_l(long double p, long double alpha) {
  long double disc = 1.0L - 4.0L * p * alpha;
  if (disc < 0.0L) disc = 0.0L;
  long double sp = (1.0L - sqrtl(disc)) / (2.0L * alpha);
  return expm1l(alpha * sp - alpha + (1.0L - 1.0L / sp) * p - logl(sp));
}

// e * h_p(s) + 1, the offset of the W argument from the branch point, in
// extended precision.  At the root p this vanishes identically at s = s'.
long double branch_offset_l(long double s, long double alpha, long double p) {
  return -expm1l(alpha * s - alpha + (1.0L - 1.0L / s) * p - logl(s));
}

}  // namespace

PSolution solve_p(double alpha) {
  if (alpha <= 0.5) throw std::domain_error("solve_p: alpha must be > 1/2");
  const double delta = 1e-12;
  double lo = 1.0 - alpha + delta;
  double hi = 1.0 / (4.0 * alpha) - delta;
  if (lo >= hi) throw numerical_error("solve_p: empty bracket");

  // Scan for sign changes; exactly one root should exist in the open
  // interval, and anything else is reported instead of silently picked.
  const int kScan = 64;
  std::vector<std::pair<double, double>> brackets;
  double prev_p = lo;
  double prev_r = p_residual(prev_p, alpha);
  for (int i = 1; i <= kScan; ++i) {
    double cur_p = lo + (hi - lo) * static_cast<double>(i) / kScan;
    double cur_r = p_residual(cur_p, alpha);
    if ((prev_r <= 0.0) != (cur_r <= 0.0)) brackets.emplace_back(prev_p, cur_p);
    prev_p = cur_p;
    prev_r = cur_r;
  }
  if (brackets.empty()) {
    throw numerical_error("solve_p: no sign change in (1-alpha, 1/(4 alpha)) at alpha=" +
                          std::to_string(alpha));
  }
  if (brackets.size() > 1) {
    throw numerical_error("solve_p: multiple candidate roots (" +
                          std::to_string(brackets.size()) + ") at alpha=" + std::to_string(alpha));
  }

  auto [a, b] = brackets.front();
  double fa = p_residual(a, alpha);
  while (b - a > 1e-12) {
    double mid = 0.5 * (a + b);
    double fm = p_residual(mid, alpha);
    if ((fa <= 0.0) == (fm <= 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  // Newton polish in extended precision; d(residual)/dp = (r+1)(1 - 1/s_p)
  // by the envelope property (s_p is a stationary point of the exponent).
  long double pl = 0.5 * (a + b);
  const long double al = alpha;
  for (int iter = 0; iter < 4; ++iter) {
    long double r = p_residual_l(pl, al);
    long double disc = 1.0L - 4.0L * pl * al;
    if (disc < 0.0L) disc = 0.0L;
    long double sp = (1.0L - sqrtl(disc)) / (2.0L * al);
    pl -= r / ((r + 1.0L) * (1.0L - 1.0L / sp));
  }
  // Among the neighboring doubles, pick one where the W argument at s' does
  // not overshoot the branch point (offset <= 0), so both branches meet there
  // cleanly instead of straddling -1/e by a rounding error.
  double p = static_cast<double>(pl);
  auto offset_at = [&](double cand) {
    long double disc = 1.0L - 4.0L * static_cast<long double>(cand) * al;
    if (disc < 0.0L) disc = 0.0L;
    long double sp = (1.0L - sqrtl(disc)) / (2.0L * al);
    return branch_offset_l(sp, al, cand);
  };
  for (int step = 0; step < 8 && offset_at(p) > 0.0L; ++step) {
    double up = std::nextafter(p, 2.0);
    double down = std::nextafter(p, 0.0);
    p = offset_at(up) < offset_at(down) ? up : down;
  }
  double s_prime = (1.0 - std::sqrt(std::max(0.0, 1.0 - 4.0 * p * alpha))) / (2.0 * alpha);
  return {p, s_prime};
}

Pgf make_pgf(double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) throw std::domain_error("make_pgf: alpha must be in (0,1)");
  if (alpha <= 0.5) {
    return Pgf{alpha, 1.0 - alpha, 1.0, Regime::Subcritical};
  }
  PSolution sol = solve_p(alpha);
  return Pgf{alpha, sol.p, sol.s_prime, Regime::Supercritical};
}

double pgf_branch(double s, double alpha, double p, int branch) {
  // Near the branch point, q = sqrt(2(e h + 1)) computed from the raw double
  // h loses half its digits; go through the extended-precision offset and the
  // series instead.
  long double t = branch_offset_l(s, alpha, p);
  if (t < 1e-10L) {
    if (t < -1e-9L) {
      throw numerical_error("pgf: W argument below -1/e beyond tolerance (inconsistent p)");
    }
    double q = std::sqrt(2.0 * static_cast<double>(std::max(t, 0.0L)));
    if (branch == -1) q = -q;
    double w = -1.0 + q - q * q / 3.0 + 11.0 * q * q * q / 72.0;
    return -s * w;
  }
  double arg = h_p(s, alpha, p);
  double w = (branch == -1) ? lambert_wm1(arg) : lambert_w0(arg);
  return -s * w;
}

double pgf_eval(const Pgf& pgf, double s) {
  if (s <= 0.0 || s > 1.0) throw std::domain_error("pgf: s must be in (0,1]");
  // As s -> 0 the W argument -e^y underflows (y = log(-h) -> -inf); use the
  // asymptotic W_{-1}(-e^y) from the fixed point w = y - log(-w).
  double y = g_p(s, pgf.alpha, pgf.p) - std::log(s);
  if (y < -30.0) {
    double w = y - std::log(-y);
    for (int i = 0; i < 5; ++i) w = y - std::log(-w);
    return -s * w;
  }
  int branch = (s <= pgf.s_prime) ? -1 : 0;
  return pgf_branch(s, pgf.alpha, pgf.p, branch);
}

double pgf(double s, double alpha) { return pgf_eval(make_pgf(alpha), s); }

double functional_equation_residual(double s, double alpha, double p, double G_val) {
  if (s <= 0.0) throw std::domain_error("functional_equation_residual: s must be positive");
  return G_val - std::exp(G_val / s + alpha * s - alpha - 1.0 + (1.0 - 1.0 / s) * p);
}

double pgf_derivative(double s, double alpha, double p, double G_val) {
  if (s <= 0.0 || s >= 1.0) throw std::domain_error("pgf_derivative: s must be in (0,1)");
  if (std::abs(s - G_val) < 1e-14) throw numerical_error("pgf_derivative: singular at s == G(s)");
  return (alpha * s * s + p - G_val) * G_val / (s * (s - G_val));
}

std::optional<double> mean_X(double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) throw std::domain_error("mean_X: alpha must be in (0,1)");
  if (alpha > 0.5) return std::nullopt;
  return 1.0 - std::sqrt(1.0 - 2.0 * alpha);
}

double parking_prob_limit(double alpha) {
  if (alpha < 0.0 || alpha >= 1.0) throw std::domain_error("parking_prob_limit: alpha must be in [0,1)");
  if (alpha > 0.5) return 0.0;
  return std::sqrt(1.0 - 2.0 * alpha) / (1.0 - alpha);
}

double jones_alpha_c(double beta) {
  if (beta <= 0.0 || beta > 0.25) throw std::domain_error("jones_alpha_c: beta must be in (0, 1/4]");
  return 1.0 + beta - std::sqrt(beta * (2.0 + beta));
}

std::optional<double> jones_mean_X(double alpha, double beta) {
  if (beta <= 0.0 || beta > 0.25) throw std::domain_error("jones_mean_X: beta must be in (0, 1/4]");
  if (alpha <= 0.0 || alpha >= 2.0) throw std::domain_error("jones_mean_X: alpha must be in (0,2)");
  if (alpha > jones_alpha_c(beta)) return std::nullopt;
  double radicand = 1.0 - 2.0 * alpha * (1.0 - alpha / 2.0 + beta);
  return (1.0 - alpha + 2.0 * alpha * beta - std::sqrt(std::max(0.0, radicand))) / (2.0 * beta);
}

double conditioned_mean_threshold(double mean_P, double var_N) {
  if (var_N <= 0.0) throw std::domain_error("conditioned_mean_threshold: var_N must be positive");
  return (mean_P * var_N + 1.0 - mean_P) / var_N;
}

std::optional<double> conjecture_mean_X(double alpha, double var_N, double h_alpha) {
  if (var_N <= 0.0 || var_N > 1.0) throw std::domain_error("conjecture_mean_X: var_N must be in (0,1]");
  if (h_alpha < 0.0) throw std::domain_error("conjecture_mean_X: h_alpha must be >= 0");
  double disc = (1.0 - alpha) * (1.0 - alpha) - var_N * h_alpha;
  if (disc < 0.0) return std::nullopt;
  return (1.0 - alpha + alpha * var_N - std::sqrt(disc)) / var_N;
}

AlphaCResult conjecture_alpha_c(double var_N, const std::function<double(double)>& h) {
  if (var_N <= 0.0 || var_N > 1.0) throw std::domain_error("conjecture_alpha_c: var_N must be in (0,1]");
  auto phi = [&](double a) { return a - (1.0 - std::sqrt(std::max(0.0, var_N * h(a)))); };
  // find the first sign change of phi on [0,1]; phi(0) = -1
  const int kScan = 1024;
  double lo = 0.0;
  double flo = phi(lo);
  double hi = 1.0;
  bool found = false;
  for (int i = 1; i <= kScan; ++i) {
    double a = static_cast<double>(i) / kScan;
    double fa = phi(a);
    if ((flo <= 0.0) != (fa <= 0.0)) {
      hi = a;
      found = true;
      break;
    }
    lo = a;
    flo = fa;
  }
  if (!found) return {1.0, false};
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if ((phi(mid) <= 0.0) == (flo <= 0.0)) {
      lo = mid;
      flo = phi(lo);
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), true};
}

double supercritical_mean(double lambda, double alpha, double p_lambda) {
  if (lambda <= 1.0) throw std::domain_error("supercritical_mean: lambda must be > 1");
  if (p_lambda < 0.0 || p_lambda > 1.0) throw std::domain_error("supercritical_mean: p must be in [0,1]");
  return (lambda - alpha - lambda * p_lambda) / (lambda - 1.0);
}

}  // namespace treepark::analytic
