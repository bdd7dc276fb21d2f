#pragma once

#include <optional>
#include <vector>

#include "treepark/common.hpp"

namespace treepark {

/// Truncated probability mass function on {0,...,K} with explicit tail mass.
///
/// Entries beyond the truncation bound are folded into tail_mass rather than
/// dropped, so mass is conserved and an infinite mean stays detectable: the
/// mean accessor returns a bracket whose upper end is absent (infinite)
/// whenever tail_mass is positive.
struct Pmf {
  std::vector<double> probs;  // index k = P(value == k), k in 0..K
  double tail_mass = 0.0;     // P(value > K)

  Pmf() = default;
  explicit Pmf(int K) : probs(static_cast<std::size_t>(K) + 1, 0.0) {}

  int max_value() const { return static_cast<int>(probs.size()) - 1; }

  double at(int k) const {
    return (k >= 0 && k < static_cast<int>(probs.size())) ? probs[static_cast<std::size_t>(k)] : 0.0;
  }

  double in_range_mass() const;
  double total_mass() const { return in_range_mass() + tail_mass; }

  /// Lower bound on the mean (tail contributes at least (K+1)*tail_mass, but
  /// we count only the in-range part plus that floor).
  double mean_lower() const;
  /// Upper bound; nullopt when tail_mass > 0 (tail values are unbounded).
  std::optional<double> mean_upper() const;

  double variance_in_range() const;

  /// Throws validation_error unless entries are nonnegative and mass sums to
  /// 1 within tol.
  void validate(double tol = 1e-12) const;

  void normalize();

  /// Total variation distance; tail masses compared as a single bucket.
  double tv_distance(const Pmf& other) const;

  /// CDF value P(X <= k), in-range part only.
  double cdf(int k) const;

  static Pmf delta(int value, int K);
  /// Poisson(mu) truncated at K, remainder in the tail.
  static Pmf poisson(double mu, int K);
  /// Value 2 with probability alpha/2, else 0.  Requires alpha in (0,2).
  static Pmf two_point(double alpha, int K);
};

}  // namespace treepark
