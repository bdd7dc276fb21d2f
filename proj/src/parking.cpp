#include "treepark/parking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treepark {

ArrivalLaw ArrivalLaw::poisson(double alpha) {
  if (alpha < 0.0) throw validation_error("ArrivalLaw::poisson: alpha must be >= 0");
  ArrivalLaw law;
  law.family_ = Family::Poisson;
  law.param_ = alpha;
  law.mean_ = alpha;
  return law;
}

ArrivalLaw ArrivalLaw::two_point(double alpha) {
  if (alpha <= 0.0 || alpha >= 2.0) throw validation_error("ArrivalLaw::two_point: alpha must be in (0,2)");
  ArrivalLaw law;
  law.family_ = Family::TwoPoint;
  law.param_ = alpha;
  law.mean_ = alpha;
  return law;
}

ArrivalLaw ArrivalLaw::explicit_pmf(Pmf pmf) {
  pmf.validate(1e-12);
  if (pmf.tail_mass > 1e-12) throw validation_error("ArrivalLaw::explicit_pmf: tail mass not allowed");
  ArrivalLaw law;
  law.family_ = Family::Explicit;
  double c = 0.0;
  for (std::size_t k = 0; k < pmf.probs.size(); ++k) {
    law.mean_ += static_cast<double>(k) * pmf.probs[k];
    c += pmf.probs[k];
    law.cum_.push_back(c);
  }
  law.pmf_ = std::move(pmf);
  return law;
}

int ArrivalLaw::sample(Rng& rng) const {
  switch (family_) {
    case Family::Poisson:
      return sample_poisson(param_, rng);
    case Family::TwoPoint:
      return uniform01(rng) < param_ / 2.0 ? 2 : 0;
    case Family::Explicit: {
      double u = uniform01(rng);
      auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
      return static_cast<int>(it - cum_.begin());
    }
  }
  throw numerical_error("ArrivalLaw::sample: unreachable");
}

Pmf ArrivalLaw::as_pmf(int K) const {
  switch (family_) {
    case Family::Poisson:
      return Pmf::poisson(param_, K);
    case Family::TwoPoint:
      return Pmf::two_point(param_, std::max(K, 2));
    case Family::Explicit: {
      Pmf out(std::max(K, pmf_.max_value()));
      std::copy(pmf_.probs.begin(), pmf_.probs.end(), out.probs.begin());
      return out;
    }
  }
  throw numerical_error("ArrivalLaw::as_pmf: unreachable");
}

ArrivalConfig assign_arrivals_iid(const RootedTree& tree, const ArrivalLaw& law, Rng& rng) {
  ArrivalConfig config;
  config.mode = ArrivalMode::IidLaw;
  config.counts.resize(static_cast<std::size_t>(tree.n_vertices));
  for (int& c : config.counts) {
    c = law.sample(rng);
    config.total += c;
  }
  return config;
}

ArrivalConfig assign_arrivals_multinomial(const RootedTree& tree, long long m, Rng& rng) {
  if (m < 0) throw validation_error("assign_arrivals_multinomial: m must be >= 0");
  ArrivalConfig config;
  config.mode = ArrivalMode::Multinomial;
  config.counts.assign(static_cast<std::size_t>(tree.n_vertices), 0);
  for (long long i = 0; i < m; ++i) {
    auto v = rng() % static_cast<std::uint64_t>(tree.n_vertices);
    ++config.counts[static_cast<std::size_t>(v)];
  }
  config.total = m;
  return config;
}

ParkingOutcome park_sequential(const RootedTree& tree, const ArrivalConfig& arrivals,
                               const std::vector<int>& car_order) {
  if (static_cast<long long>(car_order.size()) != arrivals.total) {
    throw validation_error("park_sequential: car order size does not match arrival total");
  }
  ParkingOutcome outcome;
  outcome.visits.assign(static_cast<std::size_t>(tree.n_vertices), 0);
  outcome.occupied.assign(static_cast<std::size_t>(tree.n_vertices), 0);
  for (int start : car_order) {
    if (start < 0 || start >= tree.n_vertices) {
      throw validation_error("park_sequential: car starts outside the tree");
    }
    int v = start;
    while (true) {
      ++outcome.visits[static_cast<std::size_t>(v)];
      if (!outcome.occupied[static_cast<std::size_t>(v)]) {
        outcome.occupied[static_cast<std::size_t>(v)] = 1;
        break;
      }
      int p = tree.parent[static_cast<std::size_t>(v)];
      if (p == RootedTree::kNoParent) {
        ++outcome.departed;
        break;
      }
      v = p;
    }
  }
  outcome.root_visits = outcome.visits[static_cast<std::size_t>(tree.root)];
  outcome.all_parked = outcome.root_visits <= 1;
  return outcome;
}

ParkingOutcome park_sequential(const RootedTree& tree, const ArrivalConfig& arrivals, Rng& rng) {
  std::vector<int> cars;
  cars.reserve(static_cast<std::size_t>(arrivals.total));
  for (int v = 0; v < tree.n_vertices; ++v) {
    for (int i = 0; i < arrivals.counts[static_cast<std::size_t>(v)]; ++i) cars.push_back(v);
  }
  std::shuffle(cars.begin(), cars.end(), rng);
  return park_sequential(tree, arrivals, cars);
}

ParkingOutcome park_recursive(const RootedTree& tree, const ArrivalConfig& arrivals) {
  if (static_cast<int>(arrivals.counts.size()) != tree.n_vertices) {
    throw validation_error("park_recursive: arrival counts do not match the tree");
  }
  for (int c : arrivals.counts) {
    if (c < 0) throw validation_error("park_recursive: negative arrival count");
  }
  // BFS order from the root; its reverse is leaf-to-root.
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(tree.n_vertices));
  order.push_back(tree.root);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : tree.children[static_cast<std::size_t>(order[i])]) order.push_back(c);
  }

  ParkingOutcome outcome;
  outcome.visits = arrivals.counts;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    int p = tree.parent[static_cast<std::size_t>(v)];
    int surplus = outcome.visits[static_cast<std::size_t>(v)] - 1;
    if (surplus > 0 && p != RootedTree::kNoParent) {
      outcome.visits[static_cast<std::size_t>(p)] += surplus;
    }
  }
  outcome.occupied.resize(static_cast<std::size_t>(tree.n_vertices));
  for (int v = 0; v < tree.n_vertices; ++v) {
    outcome.occupied[static_cast<std::size_t>(v)] = outcome.visits[static_cast<std::size_t>(v)] >= 1;
  }
  outcome.root_visits = outcome.visits[static_cast<std::size_t>(tree.root)];
  outcome.departed = std::max(0, outcome.root_visits - 1);
  outcome.all_parked = outcome.root_visits <= 1;
  return outcome;
}

std::pair<std::uint64_t, std::uint64_t> count_path_parking_functions(int n, int m) {
  if (n < 1 || n > 8 || m < 1 || m > n) {
    throw validation_error("count_path_parking_functions: need 1 <= m <= n <= 8");
  }
  // Directed path with root at vertex 0: parent[i] = i - 1.
  RootedTree path;
  path.n_vertices = n;
  path.root = 0;
  path.parent.assign(static_cast<std::size_t>(n), RootedTree::kNoParent);
  for (int i = 1; i < n; ++i) path.parent[static_cast<std::size_t>(i)] = i - 1;
  rebuild_children(path);

  std::uint64_t total = 1;
  for (int i = 0; i < m; ++i) total *= static_cast<std::uint64_t>(n);

  std::vector<int> prefs(static_cast<std::size_t>(m), 0);
  ArrivalConfig arrivals;
  arrivals.total = m;
  std::uint64_t parking = 0;
  for (std::uint64_t seq = 0; seq < total; ++seq) {
    std::uint64_t code = seq;
    arrivals.counts.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < m; ++i) {
      prefs[static_cast<std::size_t>(i)] = static_cast<int>(code % static_cast<std::uint64_t>(n));
      code /= static_cast<std::uint64_t>(n);
      ++arrivals.counts[static_cast<std::size_t>(prefs[static_cast<std::size_t>(i)])];
    }
    ParkingOutcome outcome = park_sequential(path, arrivals, prefs);
    if (outcome.departed == 0) ++parking;
  }
  return {parking, total};
}

void check_outcome_invariants(const RootedTree& tree, const ArrivalConfig& arrivals,
                              const ParkingOutcome& outcome) {
  long long parked = 0;
  for (int v = 0; v < tree.n_vertices; ++v) {
    bool occ = outcome.occupied[static_cast<std::size_t>(v)];
    if (occ != (outcome.visits[static_cast<std::size_t>(v)] >= 1)) {
      throw validation_error("outcome: occupied flag disagrees with visits");
    }
    parked += occ ? 1 : 0;
    long long expected = arrivals.counts[static_cast<std::size_t>(v)];
    for (int c : tree.children[static_cast<std::size_t>(v)]) {
      expected += std::max(0, outcome.visits[static_cast<std::size_t>(c)] - 1);
    }
    if (expected != outcome.visits[static_cast<std::size_t>(v)]) {
      throw validation_error("outcome: local recursion identity violated");
    }
  }
  if (parked + outcome.departed != arrivals.total) {
    throw validation_error("outcome: car conservation violated");
  }
}

}  // namespace treepark
