#include "treepark/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace treepark::oracle {

namespace {

// Law of (X-1)^+ from the law of X; K -> K-1 shift keeps in-range exactness.
std::vector<double> shift_minus_one_plus(const Pmf& x_pmf) {
  std::vector<double> y(x_pmf.probs.size(), 0.0);
  if (!x_pmf.probs.empty()) {
    y[0] = x_pmf.at(0) + x_pmf.at(1);
    for (std::size_t k = 1; k + 1 < x_pmf.probs.size(); ++k) y[k] = x_pmf.probs[k + 1];
  }
  return y;
}

// c[k] = sum_j a[j] b[k-j] for k <= K; overflow is implicitly tail mass.
std::vector<double> convolve_truncated(const std::vector<double>& a, const std::vector<double>& b,
                                       int K) {
  std::vector<double> c(static_cast<std::size_t>(K) + 1, 0.0);
  for (std::size_t j = 0; j < a.size() && j <= static_cast<std::size_t>(K); ++j) {
    double aj = a[j];
    if (aj == 0.0) continue;
    std::size_t top = std::min(b.size(), static_cast<std::size_t>(K) + 1 - j);
    for (std::size_t i = 0; i < top; ++i) c[j + i] += aj * b[i];
  }
  return c;
}

// Compound sum over N via weighted convolution powers, early exit once the
// residual offspring mass drops below 1e-16.
std::vector<double> compound_generic(const std::vector<double>& severity, const Pmf& offspring,
                                     int K) {
  std::vector<double> out(static_cast<std::size_t>(K) + 1, 0.0);
  std::vector<double> power(static_cast<std::size_t>(K) + 1, 0.0);
  power[0] = 1.0;  // severity^{*0}
  double remaining = 1.0;
  for (int j = 0; j <= offspring.max_value(); ++j) {
    double nu_j = offspring.at(j);
    if (nu_j > 0.0) {
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += nu_j * power[k];
      remaining -= nu_j;
    }
    if (remaining < 1e-16) break;
    if (j < offspring.max_value()) power = convolve_truncated(power, severity, K);
  }
  return out;
}

// Panjer recursion for a compound Poisson(lambda) sum; exact for untruncated
// Poisson N, in-range entries exact under a defective severity.
std::vector<double> compound_poisson(const std::vector<double>& severity, double lambda, int K) {
  std::vector<double> g(static_cast<std::size_t>(K) + 1, 0.0);
  g[0] = std::exp(-lambda * (1.0 - severity[0]));
  for (int k = 1; k <= K; ++k) {
    double acc = 0.0;
    int top = std::min<int>(k, static_cast<int>(severity.size()) - 1);
    for (int j = 1; j <= top; ++j) {
      acc += static_cast<double>(j) * severity[static_cast<std::size_t>(j)] *
             g[static_cast<std::size_t>(k - j)];
    }
    g[static_cast<std::size_t>(k)] = lambda / k * acc;
  }
  return g;
}

Pmf finish_step(std::vector<double> probs) {
  Pmf out;
  out.probs = std::move(probs);
  double sum = out.in_range_mass();
  out.tail_mass = std::max(0.0, 1.0 - sum);
  return out;
}

}  // namespace

Pmf rde_step(const Pmf& x_pmf, const Pmf& arrival, const Pmf& offspring, int K) {
  if (K < 1) throw validation_error("rde_step: K must be >= 1");
  std::vector<double> severity = shift_minus_one_plus(x_pmf);
  std::vector<double> compound = compound_generic(severity, offspring, K);
  return finish_step(convolve_truncated(compound, arrival.probs, K));
}

Pmf rde_step(const Pmf& x_pmf, const Pmf& arrival, const OffspringLaw& offspring, int K) {
  if (K < 1) throw validation_error("rde_step: K must be >= 1");
  std::vector<double> severity = shift_minus_one_plus(x_pmf);
  std::vector<double> compound;
  if (offspring.family() == OffspringLaw::Family::Poisson) {
    compound = compound_poisson(severity, offspring.param(), K);
  } else {
    compound = compound_generic(severity, offspring.as_pmf(K), K);
  }
  return finish_step(convolve_truncated(compound, arrival.probs, K));
}

namespace {

template <typename Offspring>
FixedPointResult fixed_point_impl(const Pmf& arrival, const Offspring& offspring, int K, double tol,
                                  int max_iter) {
  if (tol <= 0.0) throw validation_error("rde_fixed_point: tol must be positive");
  FixedPointResult result;
  result.pmf = Pmf::delta(0, K);
  for (int iter = 1; iter <= max_iter; ++iter) {
    Pmf next = rde_step(result.pmf, arrival, offspring, K);
    double dist = next.tv_distance(result.pmf);
    result.pmf = std::move(next);
    result.iterations = iter;
    if (dist <= tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace

FixedPointResult rde_fixed_point(const Pmf& arrival, const OffspringLaw& offspring, int K,
                                 double tol, int max_iter) {
  return fixed_point_impl(arrival, offspring, K, tol, max_iter);
}

FixedPointResult rde_fixed_point(const Pmf& arrival, const Pmf& offspring, int K, double tol,
                                 int max_iter) {
  return fixed_point_impl(arrival, offspring, K, tol, max_iter);
}

std::pair<double, double> pgf_of_pmf(const Pmf& pmf, double s) {
  if (s < 0.0 || s > 1.0) throw std::domain_error("pgf_of_pmf: s must be in [0,1]");
  double lo = 0.0;
  double sk = 1.0;
  for (double p : pmf.probs) {
    lo += p * sk;
    sk *= s;
  }
  double hi = lo + pmf.tail_mass * std::pow(s, pmf.max_value());
  return {lo, hi};
}

Pmf enumerate_exact(const RootedTree& tree,
                    const std::vector<std::pair<int, double>>& arrival_support) {
  if (arrival_support.empty()) throw validation_error("enumerate_exact: empty support");
  double configs = std::pow(static_cast<double>(arrival_support.size()),
                            static_cast<double>(tree.n_vertices));
  if (configs > 1e7) throw validation_error("enumerate_exact: configuration count exceeds 1e7");

  const std::size_t n = static_cast<std::size_t>(tree.n_vertices);
  const std::size_t base = arrival_support.size();
  std::vector<std::size_t> digits(n, 0);
  ArrivalConfig arrivals;
  arrivals.counts.resize(n);

  std::vector<double> chi_weight;
  while (true) {
    double weight = 1.0;
    long long total = 0;
    for (std::size_t v = 0; v < n; ++v) {
      const auto& [value, prob] = arrival_support[digits[v]];
      arrivals.counts[v] = value;
      total += value;
      weight *= prob;
    }
    arrivals.total = total;
    if (weight > 0.0) {
      ParkingOutcome outcome = park_recursive(tree, arrivals);
      if (outcome.root_visits >= static_cast<int>(chi_weight.size())) {
        chi_weight.resize(static_cast<std::size_t>(outcome.root_visits) + 1, 0.0);
      }
      chi_weight[static_cast<std::size_t>(outcome.root_visits)] += weight;
    }
    // odometer increment
    std::size_t pos = 0;
    while (pos < n && ++digits[pos] == base) {
      digits[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }

  Pmf out;
  out.probs = std::move(chi_weight);
  if (out.probs.empty()) out.probs.push_back(0.0);
  out.tail_mass = std::max(0.0, 1.0 - out.in_range_mass());
  return out;
}

WalkResult walk_simulate(const std::function<int(Rng&)>& x_sampler, int horizon, Rng& rng) {
  if (horizon < 1) throw validation_error("walk_simulate: horizon must be >= 1");
  WalkResult result;
  result.horizon = horizon;
  long long C = 0;
  long long min_C = std::numeric_limits<long long>::max();
  for (int n = 1; n <= horizon; ++n) {
    C += 1 - x_sampler(rng);
    if (C < min_C) {
      min_C = C;
      if (C < 0 && !result.failed_within_horizon) {
        result.failed_within_horizon = true;
        result.first_failure_step = n;
      }
    }
  }
  result.min_C = min_C;
  result.root_visits_bound = 1 - min_C;
  return result;
}

double skip_free_parking_prob(const Pmf& x_pmf) {
  if (x_pmf.tail_mass > 1e-9) {
    throw validation_error("skip_free_parking_prob: tail mass too large for a reliable mean");
  }
  double mean = x_pmf.mean_lower();
  if (mean >= 1.0) return 0.0;
  double p0 = x_pmf.at(0);
  if (p0 <= 0.0) throw validation_error("skip_free_parking_prob: degenerate pmf with P(X=0)=0");
  return std::min(1.0, std::max(0.0, (1.0 - mean) / p0));
}

PmfSampler::PmfSampler(const Pmf& pmf) {
  double c = 0.0;
  cum_.reserve(pmf.probs.size());
  for (double p : pmf.probs) {
    c += p;
    cum_.push_back(c);
  }
  if (!cum_.empty()) cum_.back() = std::max(cum_.back(), 1.0);  // fold tail into K
}

int PmfSampler::operator()(Rng& rng) const {
  double u = uniform01(rng);
  auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
  if (it == cum_.end()) return static_cast<int>(cum_.size()) - 1;
  return static_cast<int>(it - cum_.begin());
}

MeanEstimate binary_tree_root_visits(int depth, double alpha, long long trials, Rng& rng) {
  if (depth < 0 || depth > 26) throw validation_error("binary_tree_root_visits: depth must be in [0,26]");
  if (trials < 1) throw validation_error("binary_tree_root_visits: trials must be >= 1");
  if (alpha <= 0.0 || alpha >= 2.0) throw validation_error("binary_tree_root_visits: alpha must be in (0,2)");

  const double p2 = alpha / 2.0;
  double sum = 0.0, sum_sq = 0.0;
  std::vector<long long> level(static_cast<std::size_t>(1) << depth);
  for (long long t = 0; t < trials; ++t) {
    // leaves first, then fold levels toward the root
    for (auto& x : level) x = uniform01(rng) < p2 ? 2 : 0;
    for (int d = depth - 1; d >= 0; --d) {
      std::size_t width = static_cast<std::size_t>(1) << d;
      for (std::size_t i = 0; i < width; ++i) {
        long long arrivals = uniform01(rng) < p2 ? 2 : 0;
        level[i] = arrivals + std::max<long long>(0, level[2 * i] - 1) +
                   std::max<long long>(0, level[2 * i + 1] - 1);
      }
    }
    double chi = static_cast<double>(level[0]);
    sum += chi;
    sum_sq += chi * chi;
  }
  MeanEstimate est;
  est.trials = trials;
  est.mean = sum / static_cast<double>(trials);
  double var = std::max(0.0, sum_sq / static_cast<double>(trials) - est.mean * est.mean);
  est.stderr_ = std::sqrt(var / static_cast<double>(trials));
  est.ci_lo = est.mean - 1.959963984540054 * est.stderr_;
  est.ci_hi = est.mean + 1.959963984540054 * est.stderr_;
  return est;
}

Pmf binary_tree_exact_pmf(int depth, double alpha, int K) {
  if (depth < 0 || depth > 26) throw validation_error("binary_tree_exact_pmf: depth must be in [0,26]");
  Pmf arrival = Pmf::two_point(alpha, K);
  Pmf offspring = Pmf::delta(2, 2);
  Pmf x = Pmf::delta(0, K);
  // depth-d tree = d+1 levels of the recursion starting from "no subtree"
  for (int d = 0; d <= depth; ++d) x = rde_step(x, arrival, offspring, K);
  return x;
}

}  // namespace treepark::oracle
