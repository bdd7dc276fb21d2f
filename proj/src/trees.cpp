#include "treepark/trees.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <sstream>

namespace treepark {

void rebuild_children(RootedTree& tree) {
  tree.children.assign(static_cast<std::size_t>(tree.n_vertices), {});
  for (int v = 0; v < tree.n_vertices; ++v) {
    int p = tree.parent[static_cast<std::size_t>(v)];
    if (p != RootedTree::kNoParent) {
      tree.children[static_cast<std::size_t>(p)].push_back(v);
    }
  }
}

void validate_tree(const RootedTree& tree) {
  const int n = tree.n_vertices;
  if (n < 1) throw validation_error("tree: empty");
  if (static_cast<int>(tree.parent.size()) != n || static_cast<int>(tree.children.size()) != n) {
    throw validation_error("tree: array sizes inconsistent with n_vertices");
  }
  int roots = 0;
  for (int v = 0; v < n; ++v) {
    int p = tree.parent[static_cast<std::size_t>(v)];
    if (p == RootedTree::kNoParent) {
      ++roots;
      if (v != tree.root) throw validation_error("tree: sentinel at non-root vertex");
    } else if (p < 0 || p >= n) {
      throw validation_error("tree: parent index out of range");
    }
  }
  if (roots != 1) throw validation_error("tree: root sentinel count != 1");

  // Acyclicity: every vertex reaches the root in < n steps.
  for (int v = 0; v < n; ++v) {
    int cur = v;
    int steps = 0;
    while (cur != tree.root) {
      cur = tree.parent[static_cast<std::size_t>(cur)];
      if (++steps >= n) throw validation_error("tree: parent chain does not reach root");
    }
  }

  // parent/children consistency.
  std::size_t edge_count = 0;
  for (int u = 0; u < n; ++u) {
    for (int c : tree.children[static_cast<std::size_t>(u)]) {
      if (c < 0 || c >= n || tree.parent[static_cast<std::size_t>(c)] != u) {
        throw validation_error("tree: children list disagrees with parent array");
      }
      ++edge_count;
    }
  }
  if (edge_count != static_cast<std::size_t>(n - 1)) {
    throw validation_error("tree: edge count != n - 1");
  }

  if (const auto* sp = std::get_if<origin::Spine>(&tree.origin_tag)) {
    if (sp->spine_len < 1 || sp->spine_len > n) throw validation_error("tree: bad spine length");
    if (tree.root != 0) throw validation_error("tree: spine must be rooted at 0");
    for (int i = 1; i < sp->spine_len; ++i) {
      if (tree.parent[static_cast<std::size_t>(i)] != i - 1) {
        throw validation_error("tree: spine vertices must form a path");
      }
    }
  }
}

OffspringLaw OffspringLaw::poisson(double mu) {
  if (mu <= 0.0) throw validation_error("OffspringLaw::poisson: mu must be > 0");
  OffspringLaw law;
  law.family_ = Family::Poisson;
  law.param_ = mu;
  law.mean_ = mu;
  law.variance_ = mu;
  return law;
}

OffspringLaw OffspringLaw::binary(double beta) {
  if (beta <= 0.0 || beta > 0.25) throw validation_error("OffspringLaw::binary: beta must be in (0, 1/4]");
  OffspringLaw law;
  law.family_ = Family::Binary;
  law.param_ = beta;
  law.mean_ = 1.0;            // beta*0 + (1-2beta)*1 + beta*2
  law.variance_ = 2.0 * beta; // E[N^2] = 1 + 2beta
  return law;
}

OffspringLaw OffspringLaw::deterministic(int d) {
  if (d < 0) throw validation_error("OffspringLaw::deterministic: d must be >= 0");
  OffspringLaw law;
  law.family_ = Family::Deterministic;
  law.param_ = d;
  law.mean_ = d;
  law.variance_ = 0.0;
  return law;
}

OffspringLaw OffspringLaw::explicit_pmf(Pmf pmf) {
  pmf.validate(1e-12);
  if (pmf.tail_mass > 1e-12) {
    throw validation_error("OffspringLaw::explicit_pmf: tail mass not allowed");
  }
  OffspringLaw law;
  law.family_ = Family::Explicit;
  double mean = 0.0, m2 = 0.0;
  law.cum_.reserve(pmf.probs.size());
  double c = 0.0;
  for (std::size_t k = 0; k < pmf.probs.size(); ++k) {
    mean += static_cast<double>(k) * pmf.probs[k];
    m2 += static_cast<double>(k) * static_cast<double>(k) * pmf.probs[k];
    c += pmf.probs[k];
    law.cum_.push_back(c);
  }
  law.mean_ = mean;
  law.variance_ = m2 - mean * mean;
  law.pmf_ = std::move(pmf);
  return law;
}

int OffspringLaw::sample(Rng& rng) const {
  switch (family_) {
    case Family::Poisson:
      return sample_poisson(param_, rng);
    case Family::Binary: {
      double u = uniform01(rng);
      if (u < param_) return 0;
      if (u < 1.0 - param_) return 1;
      return 2;
    }
    case Family::Deterministic:
      return static_cast<int>(param_);
    case Family::Explicit: {
      double u = uniform01(rng);
      auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
      return static_cast<int>(it - cum_.begin());
    }
  }
  throw numerical_error("OffspringLaw::sample: unreachable");
}

Pmf OffspringLaw::as_pmf(int K) const {
  switch (family_) {
    case Family::Poisson:
      return Pmf::poisson(param_, K);
    case Family::Binary: {
      Pmf out(std::max(K, 2));
      out.probs[0] = param_;
      out.probs[1] = 1.0 - 2.0 * param_;
      out.probs[2] = param_;
      return out;
    }
    case Family::Deterministic:
      return Pmf::delta(static_cast<int>(param_), std::max(K, static_cast<int>(param_)));
    case Family::Explicit: {
      Pmf out(std::max(K, pmf_.max_value()));
      std::copy(pmf_.probs.begin(), pmf_.probs.end(), out.probs.begin());
      return out;
    }
  }
  throw numerical_error("OffspringLaw::as_pmf: unreachable");
}

namespace {

// Linear-time Pruefer decode: leaf pointer sweep over vertex indices.
// Produces the parent-toward-root orientation directly via a BFS from root.
RootedTree tree_from_pruefer(const std::vector<int>& code, int root, int n) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (int a : code) degree[static_cast<std::size_t>(a)]++;

  int ptr = 0;
  while (degree[static_cast<std::size_t>(ptr)] != 1) ++ptr;
  int leaf = ptr;
  for (int a : code) {
    adj[static_cast<std::size_t>(leaf)].push_back(a);
    adj[static_cast<std::size_t>(a)].push_back(leaf);
    if (--degree[static_cast<std::size_t>(a)] == 1 && a < ptr) {
      leaf = a;
    } else {
      ++ptr;
      while (degree[static_cast<std::size_t>(ptr)] != 1) ++ptr;
      leaf = ptr;
    }
  }
  adj[static_cast<std::size_t>(leaf)].push_back(n - 1);
  adj[static_cast<std::size_t>(n - 1)].push_back(leaf);

  RootedTree tree;
  tree.n_vertices = n;
  tree.root = root;
  tree.origin_tag = origin::Cayley{n};
  tree.parent.assign(static_cast<std::size_t>(n), RootedTree::kNoParent);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  order.push_back(root);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  seen[static_cast<std::size_t>(root)] = 1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    int u = order[i];
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        tree.parent[static_cast<std::size_t>(v)] = u;
        order.push_back(v);
      }
    }
  }
  rebuild_children(tree);
  return tree;
}

}  // namespace

RootedTree sample_cayley_tree(int n, Rng& rng) {
  if (n < 1) throw validation_error("sample_cayley_tree: n must be >= 1");
  int root = (n == 1) ? 0 : static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  if (n == 1) {
    RootedTree tree;
    tree.n_vertices = 1;
    tree.root = 0;
    tree.parent = {RootedTree::kNoParent};
    tree.children = {{}};
    tree.origin_tag = origin::Cayley{1};
    return tree;
  }
  std::vector<int> code(static_cast<std::size_t>(n - 2));
  for (int& a : code) a = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  return tree_from_pruefer(code, root, n);
}

RootedTree sample_gw_tree(const OffspringLaw& offspring, int max_vertices, Rng& rng) {
  if (max_vertices < 1) throw validation_error("sample_gw_tree: max_vertices must be >= 1");
  RootedTree tree;
  tree.root = 0;
  tree.parent.push_back(RootedTree::kNoParent);
  bool truncated = false;
  // breadth-first generation; queue positions double as vertex indices
  for (std::size_t head = 0; head < tree.parent.size(); ++head) {
    int kids = offspring.sample(rng);
    if (static_cast<int>(tree.parent.size()) + kids > max_vertices) {
      truncated = true;
      break;
    }
    for (int j = 0; j < kids; ++j) {
      tree.parent.push_back(static_cast<int>(head));
    }
  }
  tree.n_vertices = static_cast<int>(tree.parent.size());
  tree.origin_tag = origin::GaltonWatson{truncated};
  rebuild_children(tree);
  return tree;
}

Pmf size_biased_law(const OffspringLaw& offspring) {
  double mu = offspring.mean();
  if (mu <= 0.0) throw validation_error("size_biased_law: offspring mean must be positive");
  if (mu > 1.0 + 1e-12) throw validation_error("size_biased_law: offspring mean must be <= 1");
  // Truncate where the parent law's upper tail is negligible.
  int K;
  switch (offspring.family()) {
    case OffspringLaw::Family::Poisson:
      K = 64;
      while (true) {
        Pmf base = Pmf::poisson(offspring.param(), K);
        if (base.tail_mass < 1e-18) break;
        K *= 2;
      }
      break;
    case OffspringLaw::Family::Binary:
      K = 2;
      break;
    default:
      K = std::max(1, offspring.as_pmf(1).max_value());
      K = offspring.as_pmf(K).max_value();
      break;
  }
  Pmf base = offspring.as_pmf(K + 1);
  Pmf out(K);
  for (int k = 0; k <= K; ++k) {
    out.probs[static_cast<std::size_t>(k)] = (k + 1) * base.at(k + 1) / mu;
  }
  double mass = out.in_range_mass();
  if (mass <= 0.0) throw validation_error("size_biased_law: offspring concentrated at 0");
  out.normalize();
  return out;
}

RootedTree sample_spine_tree(const OffspringLaw& offspring, int spine_len, Rng& rng,
                             int bush_max_vertices) {
  if (spine_len < 1) throw validation_error("sample_spine_tree: spine_len must be >= 1");
  if (offspring.mean() > 1.0 + 1e-12) {
    throw validation_error("sample_spine_tree: offspring must be critical or subcritical");
  }
  Pmf nu_hat = size_biased_law(offspring);
  std::vector<double> cum;
  double c = 0.0;
  for (double p : nu_hat.probs) {
    c += p;
    cum.push_back(c);
  }

  RootedTree tree;
  tree.root = 0;
  tree.parent.assign(static_cast<std::size_t>(spine_len), 0);
  tree.parent[0] = RootedTree::kNoParent;
  for (int i = 1; i < spine_len; ++i) tree.parent[static_cast<std::size_t>(i)] = i - 1;

  for (int s = 0; s < spine_len; ++s) {
    double u = uniform01(rng);
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    int bushes = static_cast<int>(it - cum.begin());
    for (int b = 0; b < bushes; ++b) {
      // attach an independent unconditioned GW(nu) tree under spine vertex s
      int bush_root = static_cast<int>(tree.parent.size());
      tree.parent.push_back(s);
      std::size_t head = static_cast<std::size_t>(bush_root);
      int bush_size = 1;
      for (; head < tree.parent.size(); ++head) {
        int kids = offspring.sample(rng);
        if (bush_size + kids > bush_max_vertices) break;
        for (int j = 0; j < kids; ++j) {
          tree.parent.push_back(static_cast<int>(head));
          ++bush_size;
        }
      }
    }
  }
  tree.n_vertices = static_cast<int>(tree.parent.size());
  tree.origin_tag = origin::Spine{spine_len};
  rebuild_children(tree);
  return tree;
}

std::string to_edge_list(const RootedTree& tree) {
  std::ostringstream out;
  out << tree.n_vertices << ' ' << tree.root << '\n';
  for (int v = 0; v < tree.n_vertices; ++v) {
    int p = tree.parent[static_cast<std::size_t>(v)];
    if (p != RootedTree::kNoParent) out << v << ' ' << p << '\n';
  }
  return out.str();
}

RootedTree parse_edge_list(std::istream& in) {
  RootedTree tree;
  if (!(in >> tree.n_vertices >> tree.root)) throw io_error("edge list: bad header");
  if (tree.n_vertices < 1) throw io_error("edge list: n must be >= 1");
  tree.parent.assign(static_cast<std::size_t>(tree.n_vertices), RootedTree::kNoParent);
  std::vector<char> has_parent(static_cast<std::size_t>(tree.n_vertices), 0);
  for (int i = 0; i < tree.n_vertices - 1; ++i) {
    int child = 0, par = 0;
    if (!(in >> child >> par)) throw io_error("edge list: truncated edge lines");
    if (child < 0 || child >= tree.n_vertices || par < 0 || par >= tree.n_vertices) {
      throw io_error("edge list: vertex index out of range");
    }
    if (has_parent[static_cast<std::size_t>(child)]) throw io_error("edge list: duplicate child");
    has_parent[static_cast<std::size_t>(child)] = 1;
    tree.parent[static_cast<std::size_t>(child)] = par;
  }
  rebuild_children(tree);
  validate_tree(tree);
  return tree;
}

}  // namespace treepark
