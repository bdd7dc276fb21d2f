#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "treepark/common.hpp"
#include "treepark/pmf.hpp"

namespace treepark {

namespace origin {
struct Cayley {
  int n;
};
struct GaltonWatson {
  bool truncated;
};
struct Spine {
  int spine_len;
};
struct CompleteBinary {
  int depth;
};
}  // namespace origin

using TreeOrigin =
    std::variant<origin::Cayley, origin::GaltonWatson, origin::Spine, origin::CompleteBinary>;

/// Array-indexed rooted tree with parent links directed toward the root.
/// parent[root] == kNoParent; children lists are kept consistent with the
/// parent array and stored in generation order (no ordering semantics).
struct RootedTree {
  static constexpr int kNoParent = -1;

  int n_vertices = 0;
  int root = 0;
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  TreeOrigin origin_tag = origin::GaltonWatson{false};

  bool truncated() const {
    const auto* gw = std::get_if<origin::GaltonWatson>(&origin_tag);
    return gw != nullptr && gw->truncated;
  }
};

/// Rebuilds children lists from the parent array.
void rebuild_children(RootedTree& tree);

/// Checks all RootedTree invariants (single root, acyclicity, parent/children
/// consistency, spine path shape); throws validation_error on violation.
void validate_tree(const RootedTree& tree);

/// Offspring distribution of the branching process.  Binary{beta} is the
/// Jones law nu(0)=beta, nu(1)=1-2beta, nu(2)=beta with beta in (0,1/4].
class OffspringLaw {
 public:
  enum class Family { Poisson, Binary, Deterministic, Explicit };

  static OffspringLaw poisson(double mu);
  static OffspringLaw binary(double beta);
  static OffspringLaw deterministic(int d);
  static OffspringLaw explicit_pmf(Pmf pmf);

  Family family() const { return family_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double param() const { return param_; }

  int sample(Rng& rng) const;

  /// Pmf truncated at K (Poisson tail folded into tail_mass).
  Pmf as_pmf(int K) const;

 private:
  OffspringLaw() = default;

  Family family_ = Family::Deterministic;
  double param_ = 0.0;  // mu, beta, or d depending on family
  double mean_ = 0.0;
  double variance_ = 0.0;
  Pmf pmf_;                        // Explicit only
  std::vector<double> cum_;        // sampling table for Explicit
};

/// Uniform rooted labelled tree on n vertices (n^{n-1} equally likely trees),
/// sampled via a uniform Pruefer sequence plus a uniform root.
RootedTree sample_cayley_tree(int n, Rng& rng);

/// Galton-Watson family tree, generated breadth-first.  If the population
/// would exceed max_vertices, generation stops and the origin records
/// truncated = true; untruncated samples are exact GW draws.
RootedTree sample_gw_tree(const OffspringLaw& offspring, int max_vertices, Rng& rng);

/// Size-biased offspring law nu_hat(k) = (k+1) nu(k+1) / mean.
/// Requires mean in (0,1] and nu not concentrated at 0.
Pmf size_biased_law(const OffspringLaw& offspring);

/// Kesten spine prefix: a directed path of spine_len vertices rooted at one
/// end; each spine vertex gets an independent nu_hat number of off-spine
/// children, each carrying an independent unconditioned GW(nu) tree.
/// Each attached bush is truncated at bush_max_vertices (flagged via the
/// returned tree's origin only through validate; bushes are a.s. finite).
RootedTree sample_spine_tree(const OffspringLaw& offspring, int spine_len, Rng& rng,
                             int bush_max_vertices = 1 << 22);

/// Text edge-list format: first line "n root", then n-1 lines "child parent".
std::string to_edge_list(const RootedTree& tree);
RootedTree parse_edge_list(std::istream& in);

}  // namespace treepark
