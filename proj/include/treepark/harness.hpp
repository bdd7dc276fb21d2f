#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treepark/parking.hpp"
#include "treepark/trees.hpp"

namespace treepark::harness {

/// (offspring law, arrival law) pair fixing one branching-plus-arrivals model.
struct ModelSpec {
  OffspringLaw offspring;
  ArrivalLaw arrival;
};

enum class EnsembleKind { Cayley, GaltonWatson, Spine, CompleteBinary };

struct ExperimentConfig {
  EnsembleKind ensemble = EnsembleKind::Cayley;
  ArrivalMode arrivals_mode = ArrivalMode::Multinomial;
  std::optional<ModelSpec> model;  // required for GW/Spine ensembles
  long long size = 0;              // n, max_vertices, L, or depth
  std::vector<double> alpha_grid;
  long long trials = 0;
  std::uint64_t seed = 0;
  std::string output_path;
  int jobs = 1;
  bool record_timing = true;  // false pins wall_millis to 0 for byte-stable output
};

/// Lists every violation rather than stopping at the first.
void validate_config(const ExperimentConfig& config);

struct EstimateRecord {
  std::string estimator;
  double alpha = 0.0;
  long long size = 0;  // n, depth, or L
  long long trials = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0;  // 95%: Wilson for proportions, normal for means
  double ci_hi = 0.0;
  long long excluded_truncated = 0;
  std::uint64_t seed = 0;
  long long wall_millis = 0;
};

/// Wilson score interval for a binomial proportion at 95%.
void wilson_interval(long long successes, long long trials, double& lo, double& hi);

/// Extra summaries co-reported for heavy-tailed chi samples.
struct GwEstimate {
  EstimateRecord record;
  double median = 0.0;
  double p0 = 0.0;  // empirical P(chi = 0)
  double kurtosis = 0.0;
  bool heavy_tail_warning = false;  // sample kurtosis > 10
};

/// Parking-probability experiment: per trial, a uniform Cayley tree on n vertices,
/// multinomial floor(alpha*n) arrivals, and the parking event chi <= 1.
EstimateRecord estimate_parking_prob_cayley(int n, double alpha, long long trials,
                                            std::uint64_t seed, int jobs = 1);

/// Same tree ensemble with i.i.d. arrivals instead of multinomial counts
/// (the Poissonization comparison).
EstimateRecord estimate_parking_prob_cayley_iid(int n, const ArrivalLaw& arrival, long long trials,
                                                std::uint64_t seed, int jobs = 1);

/// Mean root visits on Galton-Watson trees with i.i.d. arrivals.  Trials whose
/// tree generation hits max_vertices are excluded and counted.
GwEstimate estimate_mean_root_visits_gw(const ModelSpec& model, int max_vertices, long long trials,
                                        std::uint64_t seed, int jobs = 1);

/// Spine experiment for the limit model: success iff C_n >= 0 for all
/// n <= L, with per-spine-vertex subtree root visits generated on the fly
/// (bushes explored depth-first up to bush_cap vertices each).
EstimateRecord estimate_parking_prob_spine(const ModelSpec& model, int L, long long trials,
                                           std::uint64_t seed, int jobs = 1,
                                           int bush_cap = 1 << 15);

/// Single root-visit draw for a GW tree generated and parked on the fly
/// (depth-first, never materialized).  Returns nullopt when generation hits
/// max_vertices.  Distributionally identical to sample_gw_tree +
/// assign_arrivals_iid + park_recursive.
std::optional<long long> simulate_gw_root_visits(const OffspringLaw& offspring,
                                                 const ArrivalLaw& arrival, int max_vertices,
                                                 Rng& rng);

/// Runs the configured estimator per alpha-grid point and, when output_path
/// is set, writes the CSV atomically (temp file + rename).
std::vector<EstimateRecord> run_sweep(const ExperimentConfig& config, std::ostream* log = nullptr);

std::string records_to_csv(const std::vector<EstimateRecord>& records, bool include_timing = true);
void write_csv_atomic(const std::string& path, const std::string& contents);

}  // namespace treepark::harness
