#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "treepark/parking.hpp"
#include "treepark/pmf.hpp"
#include "treepark/trees.hpp"

namespace treepark::oracle {

/// One application of the distributional recursion
///   X' = P + sum_{i=1}^{N} (X_i - 1)^+
/// on truncated pmfs.  In-range entries are exact (any configuration touching
/// a truncated value lands past K and is folded into tail_mass); tail mass
/// in the inputs propagates conservatively into the output tail.
Pmf rde_step(const Pmf& x_pmf, const Pmf& arrival, const Pmf& offspring, int K);

/// Same, dispatching to an exact compound-Poisson (Panjer) recursion when the
/// offspring law is Poisson; other families go through the generic pmf path.
Pmf rde_step(const Pmf& x_pmf, const Pmf& arrival, const OffspringLaw& offspring, int K);

struct FixedPointResult {
  Pmf pmf;
  int iterations = 0;
  bool converged = false;
};

/// Iterates rde_step from delta_0 until the total-variation distance between
/// successive iterates drops to tol.  The k-th iterate is exactly the law of
/// root visits on the depth-k truncated tree, so convergence is monotone.
FixedPointResult rde_fixed_point(const Pmf& arrival, const OffspringLaw& offspring, int K,
                                 double tol, int max_iter);
FixedPointResult rde_fixed_point(const Pmf& arrival, const Pmf& offspring, int K, double tol,
                                 int max_iter);

/// PGF bracket [lo, hi] of a truncated pmf at s: the true value lies between
/// sum p_k s^k and that plus tail_mass * s^K.
std::pair<double, double> pgf_of_pmf(const Pmf& pmf, double s);

/// Exact law of the root-visit count chi on a fixed tree: iterates over every
/// arrival configuration in support^n, weighting by product probability.
/// Guarded at |support|^n <= 1e7 configurations.
Pmf enumerate_exact(const RootedTree& tree, const std::vector<std::pair<int, double>>& arrival_support);

struct WalkResult {
  bool failed_within_horizon = false;
  int first_failure_step = -1;  // smallest n with C_n < 0, if any
  long long min_C = 0;          // minimum over n >= 1
  long long root_visits_bound = 0;  // 1 - min_C (exact chi for the length-L prefix)
  int horizon = 0;
};

/// Simulates C_n = n - sum_{k<=n} X_k for L steps with i.i.d. draws from
/// x_sampler; records the first failure (C_n < 0) and the running minimum
/// over n >= 1.
WalkResult walk_simulate(const std::function<int(Rng&)>& x_sampler, int horizon, Rng& rng);

/// Hitting formula for the skip-free walk: (1 - E[X]) / P(X = 0), clamped to
/// [0, 1]; 0 when the mean is >= 1.  Requires a nearly tail-free pmf.
double skip_free_parking_prob(const Pmf& x_pmf);

/// Alias sampler over a pmf (tail mass must be negligible; it is assigned to
/// the largest in-range value).
class PmfSampler {
 public:
  explicit PmfSampler(const Pmf& pmf);
  int operator()(Rng& rng) const;

 private:
  std::vector<double> cum_;
};

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  long long trials = 0;
};

/// Monte Carlo mean of chi on the complete binary tree of the given depth
/// with TwoPoint(alpha) arrivals, folding levels bottom-up without
/// materializing the tree.  depth <= 26 (memory guard).
MeanEstimate binary_tree_root_visits(int depth, double alpha, long long trials, Rng& rng);

/// Exact pmf of chi on the complete binary tree of the given depth with
/// TwoPoint(alpha) arrivals (depth-k iterate of the recursion with
/// deterministic-2 offspring).
Pmf binary_tree_exact_pmf(int depth, double alpha, int K);

}  // namespace treepark::oracle
