#pragma once

#include <functional>
#include <optional>

#include "treepark/common.hpp"

namespace treepark::analytic {

/// Principal branch W_0: [-1/e, inf) -> [-1, inf).
double lambert_w0(double x);

/// Lower branch W_{-1}: [-1/e, 0) -> (-inf, -1].
double lambert_wm1(double x);

// Auxiliary functions of the generating-function analysis:
//   g_p(s) = alpha*s - alpha - 1 + (1 - 1/s) * p
//   h_p(s) = -exp(g_p(s)) / s
// G(s) = -s * W_i(h_p(s)) on the appropriate branch i.
double g_p(double s, double alpha, double p);
double h_p(double s, double alpha, double p);
double h_p_prime(double s, double alpha, double p);

struct PSolution {
  double p;        // P(X = 0)
  double s_prime;  // branch switch point (1 - sqrt(1 - 4 p alpha)) / (2 alpha)
};

/// Solves the defining equation for p = P(X=0) in the supercritical phase
/// (alpha > 1/2): bisection on the residual of
///   s_p^{-1} exp(alpha s_p - alpha + (1 - s_p^{-1}) p) = 1
/// over (1-alpha, 1/(4 alpha)).  Fails loudly if the scan finds no sign
/// change or more than one.
PSolution solve_p(double alpha);

enum class Regime { Subcritical, Supercritical };

/// Prepared evaluator for the PGF of the root-visit count X; solving for p
/// happens once at construction.
struct Pgf {
  double alpha;
  double p;
  double s_prime;  // 1 in the subcritical regime
  Regime regime;
};

Pgf make_pgf(double alpha);

/// G(s) for s in (0, 1].  Uses the W_{-1} branch below the switch point and
/// W_0 above it; for alpha <= 1/2 the switch point is 1 and only W_{-1} is
/// used, with p = 1 - alpha.
double pgf_eval(const Pgf& pgf, double s);
double pgf(double s, double alpha);

/// Branch evaluators f_i(s) = -s W_i(h_p(s)).
double pgf_branch(double s, double alpha, double p, int branch);

/// Residual of the functional equation
///   G(s) = exp(s^{-1} G(s) + alpha*s - alpha - 1 + (1 - s^{-1}) p).
double functional_equation_residual(double s, double alpha, double p, double G_val);

/// G'(s) = (alpha*s^2 + p - G(s)) G(s) / (s (s - G(s))).
double pgf_derivative(double s, double alpha, double p, double G_val);

/// E[X] for the Poisson(1)/Poisson(alpha) model: 1 - sqrt(1 - 2 alpha) for
/// alpha <= 1/2, infinite (nullopt) above.
std::optional<double> mean_X(double alpha);

/// Limit parking probability sqrt(1 - 2 alpha) / (1 - alpha), 0 above 1/2.
double parking_prob_limit(double alpha);

/// Jones model critical density alpha_c(beta) = 1 + beta - sqrt(beta(2+beta)).
double jones_alpha_c(double beta);

/// Jones model mean root visits; infinite (nullopt) above alpha_c(beta).
std::optional<double> jones_mean_X(double alpha, double beta);

/// Finiteness threshold for the mean on the spine-conditioned tree:
/// (mean_P * var_N + 1 - mean_P) / var_N.
double conditioned_mean_threshold(double mean_P, double var_N);

/// Conjectured general critical-offspring mean: smaller root of the variance
/// quadratic, infinite (nullopt) when the discriminant is negative.
/// h_alpha = E[P(P-1)] for the arrival law.
std::optional<double> conjecture_mean_X(double alpha, double var_N, double h_alpha);

struct AlphaCResult {
  double alpha_c;
  bool transition_found;  // false => no crossing on [0,1], alpha_c reported as 1
};

/// Smallest solution of alpha = 1 - sqrt(var_N * h(alpha)) on [0, 1].
AlphaCResult conjecture_alpha_c(double var_N, const std::function<double(double)>& h);

/// Supercritical-offspring mean identity (lambda - alpha - lambda p) / (lambda - 1),
/// valid whenever the mean is finite.
double supercritical_mean(double lambda, double alpha, double p_lambda);

}  // namespace treepark::analytic
