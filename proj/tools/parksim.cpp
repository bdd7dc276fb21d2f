#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "treepark/analytic.hpp"
#include "treepark/harness.hpp"
#include "treepark/oracle.hpp"
#include "treepark/parking.hpp"
#include "treepark/trees.hpp"

using nlohmann::json;
using namespace treepark;

namespace {

// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

Pmf load_pmf_csv(const std::string& path, int K) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open pmf file: " + path);
  Pmf pmf(K);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int k = 0;
    char comma = 0;
    double prob = 0.0;
    if (!(ls >> k >> comma >> prob) || comma != ',') throw io_error("bad pmf line: " + line);
    if (k < 0) throw io_error("negative pmf index in " + path);
    if (k > K) {
      pmf.tail_mass += prob;
    } else {
      pmf.probs[static_cast<std::size_t>(k)] += prob;
    }
  }
  pmf.validate(1e-9);
  return pmf;
}

// Law spec syntax: poisson:<mu> | twopoint:<alpha> | binary:<beta> |
// deterministic:<d> | file:<pmf.csv>
std::pair<std::string, std::string> split_spec(const std::string& spec) {
  auto pos = spec.find(':');
  if (pos == std::string::npos) throw validation_error("bad law spec (want kind:value): " + spec);
  return {spec.substr(0, pos), spec.substr(pos + 1)};
}

OffspringLaw parse_offspring(const std::string& spec, int K) {
  auto [kind, value] = split_spec(spec);
  if (kind == "poisson") return OffspringLaw::poisson(std::stod(value));
  if (kind == "binary") return OffspringLaw::binary(std::stod(value));
  if (kind == "deterministic") return OffspringLaw::deterministic(std::stoi(value));
  if (kind == "file") return OffspringLaw::explicit_pmf(load_pmf_csv(value, K));
  throw validation_error("unknown offspring law: " + spec);
}

ArrivalLaw parse_arrival(const std::string& spec, int K) {
  auto [kind, value] = split_spec(spec);
  if (kind == "poisson") return ArrivalLaw::poisson(std::stod(value));
  if (kind == "twopoint") return ArrivalLaw::two_point(std::stod(value));
  if (kind == "file") return ArrivalLaw::explicit_pmf(load_pmf_csv(value, K));
  throw validation_error("unknown arrival law: " + spec);
}

void emit(const std::string& out_path, const std::string& contents) {
  if (out_path.empty()) {
    std::cout << contents;
  } else {
    harness::write_csv_atomic(out_path, contents);
  }
}

void emit_records(const std::vector<harness::EstimateRecord>& records, const std::string& out_path,
                  const std::string& format, bool timing) {
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : records) {
      arr.push_back({{"estimator", r.estimator},
                     {"alpha", r.alpha},
                     {"size", r.size},
                     {"trials", r.trials},
                     {"estimate", r.estimate},
                     {"stderr", r.stderr_},
                     {"ci_lo", r.ci_lo},
                     {"ci_hi", r.ci_hi},
                     {"excluded", r.excluded_truncated},
                     {"seed", r.seed},
                     {"wall_millis", timing ? r.wall_millis : 0}});
    }
    emit(out_path, arr.dump(2) + "\n");
  } else {
    emit(out_path, harness::records_to_csv(records, timing));
  }
}

void maybe_dump_tree(const std::string& path, const RootedTree& tree) {
  if (path.empty()) return;
  harness::write_csv_atomic(path, to_edge_list(tree));
}

int run(int argc, char** argv) {
  CLI::App app{"Parking on random trees: simulation, oracle, and analytic toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  long long trials = 10000;
  int jobs = 1;
  std::string out_path;
  std::string format = "csv";
  std::string dump_tree_path;
  bool no_timing = false;
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--trials", trials, "Monte Carlo trials")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads")->capture_default_str();
  app.add_option("--out", out_path, "output path (default stdout)");
  app.add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--no-timing", no_timing, "write wall_millis as 0 for byte-stable output");

  auto* cayley = app.add_subcommand("simulate-cayley", "parking probability on uniform Cayley trees");
  int cayley_n = 2000;
  double cayley_alpha = 0.25;
  bool cayley_poisson = false;
  cayley->add_option("--n", cayley_n, "tree size")->capture_default_str();
  cayley->add_option("--alpha", cayley_alpha, "car density")->capture_default_str();
  cayley->add_flag("--poisson-arrivals", cayley_poisson,
                   "use i.i.d. Poisson(alpha) arrivals instead of multinomial floor(alpha n)");
  cayley->add_option("--dump-tree", dump_tree_path, "write one sampled tree as an edge list");

  auto* gw = app.add_subcommand("simulate-gw", "mean root visits on Galton-Watson trees");
  std::string gw_offspring = "poisson:1";
  std::string gw_arrival = "poisson:0.3";
  int gw_max_vertices = 1 << 22;
  gw->add_option("--offspring", gw_offspring, "offspring law")->capture_default_str();
  gw->add_option("--arrival", gw_arrival, "arrival law")->capture_default_str();
  gw->add_option("--max-vertices", gw_max_vertices, "truncation guard (trials hitting it are excluded)")
      ->capture_default_str();
  gw->add_option("--dump-tree", dump_tree_path, "write one sampled tree as an edge list");

  auto* spine = app.add_subcommand("simulate-spine", "parking probability on the spine limit model");
  double spine_alpha = 0.25;
  int spine_L = 10000;
  int spine_bush_cap = 1 << 15;
  std::string spine_offspring = "poisson:1";
  spine->add_option("--alpha", spine_alpha, "arrival mean")->capture_default_str();
  spine->add_option("--L", spine_L, "spine horizon")->capture_default_str();
  spine->add_option("--offspring", spine_offspring, "offspring law (critical or subcritical)")
      ->capture_default_str();
  spine->add_option("--bush-cap", spine_bush_cap, "per-bush exploration cap")->capture_default_str();
  spine->add_option("--dump-tree", dump_tree_path, "write one sampled spine tree as an edge list");

  auto* binary = app.add_subcommand("simulate-binary", "root visits on the complete binary tree");
  int binary_depth = 14;
  double binary_alpha = 0.1;
  binary->add_option("--depth", binary_depth, "tree depth (<= 26)")->capture_default_str();
  binary->add_option("--alpha", binary_alpha, "TwoPoint arrival mean")->capture_default_str();

  auto* rde = app.add_subcommand("rde", "distributional fixed point of the parking recursion");
  std::string rde_arrival = "poisson:0.3";
  std::string rde_offspring = "poisson:1";
  int rde_K = 512;
  double rde_tol = 1e-12;
  int rde_max_iter = 100000;
  rde->add_option("--arrival", rde_arrival, "arrival law")->capture_default_str();
  rde->add_option("--offspring", rde_offspring, "offspring law")->capture_default_str();
  rde->add_option("--K", rde_K, "pmf truncation bound")->capture_default_str();
  rde->add_option("--tol", rde_tol, "TV convergence tolerance")->capture_default_str();
  rde->add_option("--max-iter", rde_max_iter, "iteration cap")->capture_default_str();

  auto* table = app.add_subcommand("analytic-table", "closed-form quantities over an alpha grid");
  double table_from = 0.05, table_to = 0.95, table_step = 0.05;
  bool table_jones = false;
  double table_beta = 0.25;
  table->add_option("--from", table_from)->capture_default_str();
  table->add_option("--to", table_to)->capture_default_str();
  table->add_option("--step", table_step)->capture_default_str();
  table->add_flag("--jones", table_jones, "emit the Jones-model columns");
  table->add_option("--beta", table_beta, "Jones offspring parameter")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "run a configured experiment sweep");
  std::string sweep_config_path;
  sweep->add_option("--config", sweep_config_path, "flat JSON config file")->required();

  auto* path_count = app.add_subcommand("path-count", "Konheim-Weiss parking function counts");
  int pc_n = 7;
  path_count->add_option("--n", pc_n, "check all 1 <= m <= n' <= n")->capture_default_str();

  for (CLI::App* sub : {cayley, gw, spine, binary, rde, table, sweep, path_count}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  if (cayley->parsed()) {
    std::vector<harness::EstimateRecord> records;
    if (cayley_poisson) {
      records.push_back(harness::estimate_parking_prob_cayley_iid(
          cayley_n, ArrivalLaw::poisson(cayley_alpha), trials, seed, jobs));
    } else {
      records.push_back(
          harness::estimate_parking_prob_cayley(cayley_n, cayley_alpha, trials, seed, jobs));
    }
    Rng rng(mix_seed(seed, 0));
    maybe_dump_tree(dump_tree_path, sample_cayley_tree(cayley_n, rng));
    emit_records(records, out_path, format, !no_timing);
  } else if (gw->parsed()) {
    harness::ModelSpec model{parse_offspring(gw_offspring, 64), parse_arrival(gw_arrival, 64)};
    auto est = harness::estimate_mean_root_visits_gw(model, gw_max_vertices, trials, seed, jobs);
    if (!no_timing) {
      std::cerr << "# median=" << est.median << " p0=" << fmt9(est.p0)
                << " kurtosis=" << fmt9(est.kurtosis)
                << (est.heavy_tail_warning ? " (heavy-tail warning: mean CI unreliable)" : "")
                << "\n";
    }
    Rng rng(mix_seed(seed, 0));
    maybe_dump_tree(dump_tree_path, sample_gw_tree(model.offspring, gw_max_vertices, rng));
    emit_records({est.record}, out_path, format, !no_timing);
  } else if (spine->parsed()) {
    harness::ModelSpec model{parse_offspring(spine_offspring, 64),
                             ArrivalLaw::poisson(spine_alpha)};
    auto rec = harness::estimate_parking_prob_spine(model, spine_L, trials, seed, jobs,
                                                    spine_bush_cap);
    Rng rng(mix_seed(seed, 0));
    maybe_dump_tree(dump_tree_path,
                    sample_spine_tree(model.offspring, std::min(spine_L, 1000), rng));
    emit_records({rec}, out_path, format, !no_timing);
  } else if (binary->parsed()) {
    Rng rng(mix_seed(seed, 0));
    auto est = oracle::binary_tree_root_visits(binary_depth, binary_alpha, trials, rng);
    harness::EstimateRecord rec;
    rec.estimator = "binary";
    rec.alpha = binary_alpha;
    rec.size = binary_depth;
    rec.trials = trials;
    rec.estimate = est.mean;
    rec.stderr_ = est.stderr_;
    rec.ci_lo = est.ci_lo;
    rec.ci_hi = est.ci_hi;
    rec.seed = seed;
    emit_records({rec}, out_path, format, !no_timing);
  } else if (rde->parsed()) {
    oracle::FixedPointResult result;
    auto arrival_pmf = parse_arrival(rde_arrival, rde_K).as_pmf(rde_K);
    auto [kind, value] = split_spec(rde_offspring);
    if (kind == "file") {
      result = oracle::rde_fixed_point(arrival_pmf, load_pmf_csv(value, rde_K), rde_K, rde_tol,
                                       rde_max_iter);
    } else {
      result = oracle::rde_fixed_point(arrival_pmf, parse_offspring(rde_offspring, rde_K), rde_K,
                                       rde_tol, rde_max_iter);
    }
    auto upper = result.pmf.mean_upper();
    json out = {{"p0", result.pmf.at(0)},
                {"mean_lo", result.pmf.mean_lower()},
                {"mean_hi", upper ? json(*upper) : json("inf")},
                {"tail_mass", result.pmf.tail_mass},
                {"iterations", result.iterations},
                {"converged", result.converged}};
    emit(out_path, out.dump(2) + "\n");
  } else if (table->parsed()) {
    std::ostringstream csv;
    if (table_jones) {
      csv << "alpha,beta,alpha_c,mean_X,conditioned_threshold\n";
      for (double a = table_from; a <= table_to + 1e-12; a += table_step) {
        auto mean = analytic::jones_mean_X(a, table_beta);
        csv << fmt9(a) << ',' << fmt9(table_beta) << ','
            << fmt9(analytic::jones_alpha_c(table_beta)) << ','
            << (mean ? fmt9(*mean) : "inf") << ','
            << fmt9(analytic::conditioned_mean_threshold(a, 2.0 * table_beta)) << '\n';
      }
    } else {
      csv << "alpha,p,s_prime,mean_X,parking_prob\n";
      for (double a = table_from; a <= table_to + 1e-12; a += table_step) {
        auto pgf = analytic::make_pgf(a);
        auto mean = analytic::mean_X(a);
        csv << fmt9(a) << ',' << fmt9(pgf.p) << ',' << fmt9(pgf.s_prime) << ','
            << (mean ? fmt9(*mean) : "inf") << ',' << fmt9(analytic::parking_prob_limit(a))
            << '\n';
      }
    }
    emit(out_path, csv.str());
  } else if (sweep->parsed()) {
    std::ifstream in(sweep_config_path);
    if (!in) throw io_error("cannot open config: " + sweep_config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw io_error("cannot parse config " + sweep_config_path + ": " + e.what());
    }
    harness::ExperimentConfig config;
    std::string ensemble = j.value("ensemble", "cayley");
    if (ensemble == "cayley") config.ensemble = harness::EnsembleKind::Cayley;
    else if (ensemble == "gw") config.ensemble = harness::EnsembleKind::GaltonWatson;
    else if (ensemble == "spine") config.ensemble = harness::EnsembleKind::Spine;
    else if (ensemble == "binary") config.ensemble = harness::EnsembleKind::CompleteBinary;
    else throw validation_error("unknown ensemble: " + ensemble);
    std::string mode = j.value("arrivals_mode", ensemble == "cayley" ? "multinomial" : "iid");
    config.arrivals_mode = mode == "multinomial" ? ArrivalMode::Multinomial : ArrivalMode::IidLaw;
    if (j.contains("offspring") || j.contains("arrival")) {
      config.model = harness::ModelSpec{
          parse_offspring(j.value("offspring", std::string("poisson:1")), 64),
          parse_arrival(j.value("arrival", std::string("poisson:0.25")), 64)};
    }
    config.size = j.value("size", 0LL);
    config.alpha_grid = j.value("alpha_grid", std::vector<double>{});
    config.trials = j.value("trials", trials);
    if (!j.contains("seed") && app.count("--seed") == 0) {
      throw validation_error("sweep requires an explicit seed (config or --seed)");
    }
    config.seed = j.value("seed", seed);
    config.output_path = j.value("output_path", out_path);
    config.jobs = j.value("jobs", jobs);
    config.record_timing = !no_timing && j.value("record_timing", true);
    // CLI flags override file values
    if (app.count("--trials")) config.trials = trials;
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--jobs")) config.jobs = jobs;
    if (app.count("--out")) config.output_path = out_path;
    auto records = harness::run_sweep(config, &std::cerr);
    if (config.output_path.empty()) emit_records(records, "", format, config.record_timing);
  } else if (path_count->parsed()) {
    std::ostringstream csv;
    csv << "n,m,parking_functions,total,expected\n";
    bool all_ok = true;
    for (int n = 1; n <= pc_n; ++n) {
      for (int m = 1; m <= n; ++m) {
        auto [count, total] = count_path_parking_functions(n, m);
        std::uint64_t expected = static_cast<std::uint64_t>(n + 1 - m);
        for (int i = 0; i < m - 1; ++i) expected *= static_cast<std::uint64_t>(n + 1);
        if (count != expected) all_ok = false;
        csv << n << ',' << m << ',' << count << ',' << total << ',' << expected << '\n';
      }
    }
    emit(out_path, csv.str());
    if (!all_ok) throw numerical_error("path-count mismatch with (n+1-m)(n+1)^{m-1}");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
