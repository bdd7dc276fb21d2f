#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace treepark {

using Rng = std::mt19937_64;

// Thrown when a configuration or argument fails validation (CLI exit code 2).
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iterative scheme cannot reach its tolerance or a bracket
// contains no root (CLI exit code 3).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64; used to derive independent per-trial seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) {
  // 53-bit mantissa, value in [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Poisson sampling: inversion by sequential search for small means,
// mean-halving split for large ones (Po(mu) = Po(mu/2) + Po(mu/2)).
inline int sample_poisson(double mu, Rng& rng) {
  if (mu <= 0.0) return 0;
  if (mu > 10.0) return sample_poisson(mu / 2, rng) + sample_poisson(mu / 2, rng);
  double p = std::exp(-mu);
  double cum = p;
  double u = uniform01(rng);
  int k = 0;
  while (u > cum && k < 1000) {
    ++k;
    p *= mu / k;
    cum += p;
  }
  return k;
}

}  // namespace treepark
