#include "treepark/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "treepark/oracle.hpp"

namespace treepark::harness {

namespace {

constexpr double kZ95 = 1.959963984540054;

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

// Runs trials split into one contiguous block per worker.  Accumulators must
// merge with exact (integer) arithmetic so results are independent of the
// worker count.
template <typename Acc, typename TrialFn>
Acc run_trials(long long trials, int jobs, const TrialFn& trial_fn) {
  jobs = static_cast<int>(std::max<long long>(1, std::min<long long>(jobs, trials)));
  std::vector<Acc> accs(static_cast<std::size_t>(jobs));
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    long long lo = trials * w / jobs;
    long long hi = trials * (w + 1) / jobs;
    workers.emplace_back([&, w, lo, hi] {
      for (long long t = lo; t < hi; ++t) trial_fn(t, accs[static_cast<std::size_t>(w)]);
    });
  }
  for (auto& th : workers) th.join();
  Acc total;
  for (const Acc& a : accs) total.merge(a);
  return total;
}

struct ProportionAcc {
  long long successes = 0;
  void merge(const ProportionAcc& o) { successes += o.successes; }
};

EstimateRecord proportion_record(std::string estimator, double alpha, long long size,
                                 long long trials, long long successes, std::uint64_t seed,
                                 long long wall) {
  EstimateRecord rec;
  rec.estimator = std::move(estimator);
  rec.alpha = alpha;
  rec.size = size;
  rec.trials = trials;
  rec.seed = seed;
  rec.wall_millis = wall;
  double p = static_cast<double>(successes) / static_cast<double>(trials);
  rec.estimate = p;
  rec.stderr_ = std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(trials)));
  wilson_interval(successes, trials, rec.ci_lo, rec.ci_hi);
  return rec;
}

ArrivalLaw arrival_with_mean(const ArrivalLaw& base, double alpha) {
  switch (base.family()) {
    case ArrivalLaw::Family::Poisson:
      return ArrivalLaw::poisson(alpha);
    case ArrivalLaw::Family::TwoPoint:
      return ArrivalLaw::two_point(alpha);
    case ArrivalLaw::Family::Explicit:
      throw validation_error("cannot sweep alpha with an explicit arrival pmf");
  }
  throw validation_error("arrival_with_mean: unreachable");
}

}  // namespace

void wilson_interval(long long successes, long long trials, double& lo, double& hi) {
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = kZ95 * kZ95;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  lo = std::max(0.0, center - half);
  hi = std::min(1.0, center + half);
}

EstimateRecord estimate_parking_prob_cayley(int n, double alpha, long long trials,
                                            std::uint64_t seed, int jobs) {
  if (n < 1) throw validation_error("estimate_parking_prob_cayley: n must be >= 1");
  if (alpha < 0.0 || alpha >= 1.0) throw validation_error("estimate_parking_prob_cayley: alpha in [0,1)");
  if (trials < 1) throw validation_error("estimate_parking_prob_cayley: trials must be >= 1");
  auto start = Clock::now();
  long long m = static_cast<long long>(std::floor(alpha * n));
  auto acc = run_trials<ProportionAcc>(trials, jobs, [&](long long t, ProportionAcc& a) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    RootedTree tree = sample_cayley_tree(n, rng);
    ArrivalConfig arrivals = assign_arrivals_multinomial(tree, m, rng);
    ParkingOutcome outcome = park_recursive(tree, arrivals);
    if (parking_event(outcome)) ++a.successes;
  });
  return proportion_record("cayley", alpha, n, trials, acc.successes, seed, elapsed_ms(start));
}

EstimateRecord estimate_parking_prob_cayley_iid(int n, const ArrivalLaw& arrival, long long trials,
                                                std::uint64_t seed, int jobs) {
  if (n < 1 || trials < 1) throw validation_error("estimate_parking_prob_cayley_iid: bad arguments");
  auto start = Clock::now();
  auto acc = run_trials<ProportionAcc>(trials, jobs, [&](long long t, ProportionAcc& a) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    RootedTree tree = sample_cayley_tree(n, rng);
    ArrivalConfig arrivals = assign_arrivals_iid(tree, arrival, rng);
    ParkingOutcome outcome = park_recursive(tree, arrivals);
    if (parking_event(outcome)) ++a.successes;
  });
  return proportion_record("cayley_iid", arrival.mean(), n, trials, acc.successes, seed,
                           elapsed_ms(start));
}

std::optional<long long> simulate_gw_root_visits(const OffspringLaw& offspring,
                                                 const ArrivalLaw& arrival, int max_vertices,
                                                 Rng& rng) {
  struct Frame {
    int remaining;
    long long acc;
  };
  std::vector<Frame> stack;
  int vertices = 1;
  stack.push_back({offspring.sample(rng), static_cast<long long>(arrival.sample(rng))});
  while (true) {
    Frame& top = stack.back();
    if (top.remaining > 0) {
      --top.remaining;
      if (++vertices > max_vertices) return std::nullopt;
      stack.push_back({offspring.sample(rng), static_cast<long long>(arrival.sample(rng))});
    } else {
      long long chi = top.acc;
      stack.pop_back();
      if (stack.empty()) return chi;
      stack.back().acc += std::max<long long>(0, chi - 1);
    }
  }
}

namespace {

constexpr std::size_t kHistSize = 4096;

struct GwAcc {
  long long included = 0;
  long long excluded = 0;
  unsigned long long sum = 0;
  unsigned __int128 sum2 = 0;
  unsigned __int128 sum3 = 0;
  unsigned __int128 sum4 = 0;
  std::vector<long long> hist = std::vector<long long>(kHistSize + 1, 0);  // last = overflow

  void add(long long chi) {
    ++included;
    auto c = static_cast<unsigned long long>(chi);
    sum += c;
    unsigned __int128 c2 = static_cast<unsigned __int128>(c) * c;
    sum2 += c2;
    sum3 += c2 * c;
    sum4 += c2 * c2;
    std::size_t bucket = std::min<std::size_t>(static_cast<std::size_t>(chi), kHistSize);
    ++hist[bucket];
  }
  void merge(const GwAcc& o) {
    included += o.included;
    excluded += o.excluded;
    sum += o.sum;
    sum2 += o.sum2;
    sum3 += o.sum3;
    sum4 += o.sum4;
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += o.hist[i];
  }
};

}  // namespace

GwEstimate estimate_mean_root_visits_gw(const ModelSpec& model, int max_vertices, long long trials,
                                        std::uint64_t seed, int jobs) {
  if (trials < 1) throw validation_error("estimate_mean_root_visits_gw: trials must be >= 1");
  if (max_vertices < 1) throw validation_error("estimate_mean_root_visits_gw: max_vertices must be >= 1");
  auto start = Clock::now();
  auto acc = run_trials<GwAcc>(trials, jobs, [&](long long t, GwAcc& a) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    auto chi = simulate_gw_root_visits(model.offspring, model.arrival, max_vertices, rng);
    if (chi) {
      a.add(*chi);
    } else {
      ++a.excluded;
    }
  });

  GwEstimate out;
  EstimateRecord& rec = out.record;
  rec.estimator = "gw_mean";
  rec.alpha = model.arrival.mean();
  rec.size = max_vertices;
  rec.trials = trials;
  rec.excluded_truncated = acc.excluded;
  rec.seed = seed;
  double n = static_cast<double>(acc.included);
  if (acc.included > 0) {
    double m1 = static_cast<double>(acc.sum) / n;
    double m2 = static_cast<double>(acc.sum2) / n;
    double m3 = static_cast<double>(acc.sum3) / n;
    double m4 = static_cast<double>(acc.sum4) / n;
    double var = std::max(0.0, m2 - m1 * m1);
    rec.estimate = m1;
    rec.stderr_ = std::sqrt(var / n);
    rec.ci_lo = m1 - kZ95 * rec.stderr_;
    rec.ci_hi = m1 + kZ95 * rec.stderr_;
    double mu4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1 * m1 * m1 * m1;
    out.kurtosis = var > 0.0 ? mu4 / (var * var) : 0.0;
    out.heavy_tail_warning = out.kurtosis > 10.0;
    out.p0 = static_cast<double>(acc.hist[0]) / n;
    long long half = (acc.included + 1) / 2;
    long long running = 0;
    for (std::size_t k = 0; k < acc.hist.size(); ++k) {
      running += acc.hist[k];
      if (running >= half) {
        out.median = static_cast<double>(k);
        break;
      }
    }
  }
  rec.wall_millis = elapsed_ms(start);
  return out;
}

namespace {

// Poisson inversion with the exp(-mu) factor cached, for the per-vertex hot
// loop of the bush kernel.
class CachedPoisson {
 public:
  explicit CachedPoisson(double mu) : mu_(mu), exp_neg_mu_(std::exp(-mu)) {}
  int operator()(Rng& rng) const {
    double p = exp_neg_mu_;
    double cum = p;
    double u = uniform01(rng);
    int k = 0;
    while (u > cum && k < 1000) {
      ++k;
      p *= mu_ / k;
      cum += p;
    }
    return k;
  }

 private:
  double mu_;
  double exp_neg_mu_;
};

// Root visits of one GW bush, generated depth-first on the fly.  Exploration
// is capped at bush_cap vertices: beyond the cap the frontier becomes leaves,
// which can only lose cars (bias noted in the experiment docs).
template <typename OffFn, typename ArrFn>
long long bush_root_visits_impl(const OffFn& offspring, const ArrFn& arrival, int bush_cap,
                                Rng& rng) {
  struct Frame {
    int remaining;
    long long acc;
  };
  thread_local std::vector<Frame> stack;
  stack.clear();
  int vertices = 1;
  stack.push_back({offspring(rng), static_cast<long long>(arrival(rng))});
  while (true) {
    Frame& top = stack.back();
    if (top.remaining > 0 && vertices < bush_cap) {
      --top.remaining;
      ++vertices;
      stack.push_back({offspring(rng), static_cast<long long>(arrival(rng))});
    } else {
      long long chi = top.acc;
      stack.pop_back();
      if (stack.empty()) return chi;
      stack.back().acc += std::max<long long>(0, chi - 1);
    }
  }
}

long long bush_root_visits(const OffspringLaw& offspring, const ArrivalLaw& arrival, int bush_cap,
                           Rng& rng) {
  return bush_root_visits_impl([&](Rng& r) { return offspring.sample(r); },
                               [&](Rng& r) { return arrival.sample(r); }, bush_cap, rng);
}

}  // namespace

EstimateRecord estimate_parking_prob_spine(const ModelSpec& model, int L, long long trials,
                                           std::uint64_t seed, int jobs, int bush_cap) {
  if (L < 1) throw validation_error("estimate_parking_prob_spine: L must be >= 1");
  if (trials < 1) throw validation_error("estimate_parking_prob_spine: trials must be >= 1");
  auto start = Clock::now();
  Pmf nu_hat = size_biased_law(model.offspring);
  std::vector<double> cum;
  double c = 0.0;
  for (double p : nu_hat.probs) {
    c += p;
    cum.push_back(c);
  }

  const bool poisson_fast = model.offspring.family() == OffspringLaw::Family::Poisson &&
                            model.arrival.family() == ArrivalLaw::Family::Poisson;
  CachedPoisson off_fast(poisson_fast ? model.offspring.mean() : 1.0);
  CachedPoisson arr_fast(poisson_fast ? model.arrival.mean() : 1.0);

  auto acc = run_trials<ProportionAcc>(trials, jobs, [&](long long t, ProportionAcc& a) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    long long C = 0;
    bool ok = true;
    for (int n = 0; n < L; ++n) {
      long long X = model.arrival.sample(rng);
      double u = uniform01(rng);
      int bushes = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      for (int b = 0; b < bushes; ++b) {
        long long chi = poisson_fast
                            ? bush_root_visits_impl(off_fast, arr_fast, bush_cap, rng)
                            : bush_root_visits(model.offspring, model.arrival, bush_cap, rng);
        X += std::max<long long>(0, chi - 1);
      }
      C += 1 - X;
      if (C < 0) {
        ok = false;
        break;
      }
    }
    if (ok) ++a.successes;
  });
  EstimateRecord rec = proportion_record("spine", model.arrival.mean(), L, trials, acc.successes,
                                         seed, elapsed_ms(start));
  return rec;
}

void validate_config(const ExperimentConfig& config) {
  std::vector<std::string> violations;
  if (config.trials < 1) violations.push_back("trials must be >= 1");
  if (config.alpha_grid.empty()) violations.push_back("alpha_grid must be nonempty");
  for (double a : config.alpha_grid) {
    bool two_point = config.model && config.model->arrival.family() == ArrivalLaw::Family::TwoPoint;
    double hi = two_point || config.ensemble == EnsembleKind::CompleteBinary ? 2.0 : 1.0;
    if (a < 0.0 || a >= hi) {
      violations.push_back("alpha " + std::to_string(a) + " outside the model's valid range");
    }
  }
  if (config.size < 1) violations.push_back("size (n/max_vertices/L/depth) must be >= 1");
  if (config.ensemble == EnsembleKind::CompleteBinary && config.size > 26) {
    violations.push_back("binary-tree depth must be <= 26");
  }
  if (config.arrivals_mode == ArrivalMode::Multinomial && config.ensemble != EnsembleKind::Cayley) {
    violations.push_back("multinomial arrivals are only valid with the Cayley ensemble");
  }
  if ((config.ensemble == EnsembleKind::GaltonWatson || config.ensemble == EnsembleKind::Spine) &&
      !config.model) {
    violations.push_back("GW and spine ensembles require a model (offspring + arrival laws)");
  }
  if (config.jobs < 1) violations.push_back("jobs must be >= 1");
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw validation_error(msg);
  }
}

std::vector<EstimateRecord> run_sweep(const ExperimentConfig& config, std::ostream* log) {
  validate_config(config);
  std::vector<EstimateRecord> records;
  for (double alpha : config.alpha_grid) {
    EstimateRecord rec;
    switch (config.ensemble) {
      case EnsembleKind::Cayley:
        if (config.arrivals_mode == ArrivalMode::Multinomial) {
          rec = estimate_parking_prob_cayley(static_cast<int>(config.size), alpha, config.trials,
                                             config.seed, config.jobs);
        } else {
          ArrivalLaw law = config.model ? arrival_with_mean(config.model->arrival, alpha)
                                        : ArrivalLaw::poisson(alpha);
          rec = estimate_parking_prob_cayley_iid(static_cast<int>(config.size), law, config.trials,
                                                 config.seed, config.jobs);
        }
        break;
      case EnsembleKind::GaltonWatson: {
        ModelSpec model{config.model->offspring, arrival_with_mean(config.model->arrival, alpha)};
        rec = estimate_mean_root_visits_gw(model, static_cast<int>(config.size), config.trials,
                                           config.seed, config.jobs)
                  .record;
        break;
      }
      case EnsembleKind::Spine: {
        ModelSpec model{config.model->offspring, arrival_with_mean(config.model->arrival, alpha)};
        rec = estimate_parking_prob_spine(model, static_cast<int>(config.size), config.trials,
                                          config.seed, config.jobs);
        break;
      }
      case EnsembleKind::CompleteBinary: {
        Rng rng(mix_seed(config.seed, 0));
        auto est = oracle::binary_tree_root_visits(static_cast<int>(config.size), alpha,
                                                   config.trials, rng);
        rec.estimator = "binary";
        rec.alpha = alpha;
        rec.size = config.size;
        rec.trials = config.trials;
        rec.estimate = est.mean;
        rec.stderr_ = est.stderr_;
        rec.ci_lo = est.ci_lo;
        rec.ci_hi = est.ci_hi;
        rec.seed = config.seed;
        break;
      }
    }
    if (!config.record_timing) rec.wall_millis = 0;
    if (log) {
      *log << rec.estimator << " alpha=" << rec.alpha << " estimate=" << rec.estimate << " ["
           << rec.ci_lo << ", " << rec.ci_hi << "]\n";
    }
    records.push_back(std::move(rec));
  }
  if (!config.output_path.empty()) {
    write_csv_atomic(config.output_path, records_to_csv(records, config.record_timing));
  }
  return records;
}

namespace {

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace

std::string records_to_csv(const std::vector<EstimateRecord>& records, bool include_timing) {
  std::ostringstream out;
  out << "estimator,alpha,size,trials,estimate,stderr,ci_lo,ci_hi,excluded,seed,wall_millis\n";
  for (const auto& r : records) {
    out << r.estimator << ',' << fmt9(r.alpha) << ',' << r.size << ',' << r.trials << ','
        << fmt9(r.estimate) << ',' << fmt9(r.stderr_) << ',' << fmt9(r.ci_lo) << ','
        << fmt9(r.ci_hi) << ',' << r.excluded_truncated << ',' << r.seed << ','
        << (include_timing ? r.wall_millis : 0) << '\n';
  }
  return out.str();
}

void write_csv_atomic(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open temp file for writing: " + tmp);
    out << contents;
    if (!out.flush()) throw io_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("rename failed for " + path + ": " + ec.message());
}

}  // namespace treepark::harness
