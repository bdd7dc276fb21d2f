#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "treepark/pmf.hpp"
#include "treepark/trees.hpp"

namespace treepark {

/// Per-vertex arrival distribution.  TwoPoint{alpha} puts 2 cars with
/// probability alpha/2 and 0 otherwise, so the mean is alpha.
class ArrivalLaw {
 public:
  enum class Family { Poisson, TwoPoint, Explicit };

  static ArrivalLaw poisson(double alpha);
  static ArrivalLaw two_point(double alpha);
  static ArrivalLaw explicit_pmf(Pmf pmf);

  Family family() const { return family_; }
  double mean() const { return mean_; }
  double param() const { return param_; }

  int sample(Rng& rng) const;
  Pmf as_pmf(int K) const;

 private:
  ArrivalLaw() = default;
  Family family_ = Family::Poisson;
  double param_ = 0.0;
  double mean_ = 0.0;
  Pmf pmf_;
  std::vector<double> cum_;
};

enum class ArrivalMode { IidLaw, Multinomial };

/// Per-vertex car counts pi(v).
struct ArrivalConfig {
  std::vector<int> counts;
  ArrivalMode mode = ArrivalMode::IidLaw;
  long long total = 0;
};

/// Result of the parking process.  visits[v] counts every car that reaches v
/// (including the one that may park there); root_visits is the chi statistic.
struct ParkingOutcome {
  std::vector<int> visits;
  std::vector<char> occupied;
  int root_visits = 0;
  int departed = 0;  // cars driven past the root, (chi - 1)^+
  bool all_parked = true;
};

ArrivalConfig assign_arrivals_iid(const RootedTree& tree, const ArrivalLaw& law, Rng& rng);

/// m cars placed independently and uniformly over the vertices.
ArrivalConfig assign_arrivals_multinomial(const RootedTree& tree, long long m, Rng& rng);

/// Literal car-by-car simulation: cars drive toward the root in the given
/// order (car_order lists starting vertices), each occupying the first empty
/// vertex on its path or departing past the root.  Oracle duty only; may be
/// O(n * m).
ParkingOutcome park_sequential(const RootedTree& tree, const ArrivalConfig& arrivals,
                               const std::vector<int>& car_order);

/// Same, with a uniformly random car order.
ParkingOutcome park_sequential(const RootedTree& tree, const ArrivalConfig& arrivals, Rng& rng);

/// Production path: visits[v] = counts[v] + sum over children c of
/// (visits[c] - 1)^+, evaluated leaf-to-root without call recursion.  Agrees
/// with park_sequential by the abelian property.
ParkingOutcome park_recursive(const RootedTree& tree, const ArrivalConfig& arrivals);

/// The event that all cars park: chi <= 1.
inline bool parking_event(const ParkingOutcome& outcome) { return outcome.root_visits <= 1; }

/// Enumerates all n^m preference sequences on the directed path of n vertices
/// and counts the parking functions among them by sequential simulation.
/// Returns (parking function count, n^m).  The first component equals
/// (n+1-m)(n+1)^{m-1}.  Requires 1 <= m <= n <= 8.
std::pair<std::uint64_t, std::uint64_t> count_path_parking_functions(int n, int m);

/// Throws validation_error unless the outcome satisfies the car-conservation
/// and local-recursion invariants for the given instance.
void check_outcome_invariants(const RootedTree& tree, const ArrivalConfig& arrivals,
                              const ParkingOutcome& outcome);

}  // namespace treepark
