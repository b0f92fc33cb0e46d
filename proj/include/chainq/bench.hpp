#pragma once

// Experiment drivers: detection rate under random and concentrated
// omission, verifier cost against full reconstruction, and query cost vs
// selectivity. Every driver emits rows with a fixed CSV header.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chainq/adversary.hpp"
#include "chainq/challenge.hpp"

namespace chainq::bench {

enum class Experiment : std::uint8_t { detection, adaptive_detection, verify_cost, query_cost };

std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::detection;
  std::uint64_t objects = 20'000;  // |D| per round
  std::uint64_t objects_per_block = 1'000;
  std::uint64_t maxsize = kDefaultMaxsize;
  std::uint32_t keyword_universe = 400;

  FaultPlan adversary;                          // strategy used by the detection experiments
  std::vector<double> ks = {0.0005, 0.001};
  std::vector<double> fractions = {0.005, 0.01, 0.02, 0.03, 0.05, 0.10, 0.15, 0.20};
  std::optional<std::uint32_t> n_ranges;        // default: min(10, max(1, N / 64))
  std::vector<std::uint32_t> detections = {1};
  std::vector<std::uint32_t> n_ranges_grid = {1, 10, 31};
  std::uint64_t min_range_volume = 1;

  // verify_cost
  std::uint64_t total_objects = 400'000;
  std::vector<std::uint64_t> update_sizes = {50'000, 100'000, 200'000, 400'000};
  std::vector<std::vector<IndexKind>> bundles = {{IndexKind::numeric},
                                                 {IndexKind::numeric, IndexKind::composite},
                                                 {IndexKind::numeric, IndexKind::composite, IndexKind::keyword}};
  double token_k = 0.001;
  double token_pd = 0.99;

  // query_cost
  std::vector<double> selectivities = {0.0, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05};

  std::uint32_t trials = 300;
  std::uint32_t repetitions = 5;  // timing points take the median
  std::uint64_t seed = 1;
  unsigned threads = 0;           // 0: hardware concurrency

  static ExperimentConfig defaults(Experiment e, bool full_scale);
  void validate() const;
};

/// One CSV row. `params` names are fixed per experiment.
struct BenchRecord {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;
  std::string metric;  // detection_rate, seconds, skipped
  double value = 0;
  std::optional<double> analytic;
  std::uint64_t trials = 0;
  std::string timestamp;
};

std::vector<std::string> csv_header(Experiment e);
void write_csv(std::ostream& out, Experiment e, std::span<const BenchRecord> rows);

std::vector<BenchRecord> run_detection_experiment(const ExperimentConfig& cfg);
std::vector<BenchRecord> run_adaptive_experiment(const ExperimentConfig& cfg);
std::vector<BenchRecord> run_verify_cost_bench(const ExperimentConfig& cfg);
std::vector<BenchRecord> run_query_cost_bench(const ExperimentConfig& cfg);
std::vector<BenchRecord> run_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Building blocks, also used directly by the acceptance checks.

/// Chain of `objects` objects in blocks of `per_block`.
Chain make_chain(std::uint64_t objects, std::uint64_t per_block, std::uint32_t keyword_universe, std::uint64_t seed);

struct DetectionPoint {
  FaultPlan adversary;              // k, strategy, n_attack_ranges; rng_seed is set per trial
  std::uint64_t token_objects = 0;  // N
  std::uint32_t n_ranges = 10;
  std::uint64_t min_range_volume = 1;
  std::uint32_t detections = 1;
  std::uint32_t trials = 300;
  std::uint64_t seed = 1;
};

struct DetectionResult {
  std::uint32_t detected = 0;
  std::uint32_t trials = 0;
  bool skipped = false;
  std::string skip_reason;
  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(detected) / trials; }
};

/// Each trial draws fresh faults, builds the SP's numeric forest and runs
/// `detections` independent tokens; a trial counts as detected when any
/// verdict rejects. Trials run in parallel with per-trial seeds.
DetectionResult run_detection_point(const Chain& chain, const DetectionPoint& p, unsigned threads = 0);

/// Default range count for a token of N objects: min(10, max(1, N / 64)).
std::uint32_t default_n_ranges(std::uint64_t token_objects);

struct VerifyCostPoint {
  std::vector<IndexKind> bundle = {IndexKind::numeric};
  std::uint64_t total = 400'000;
  std::uint64_t update_size = 100'000;
  std::uint64_t maxsize = kDefaultMaxsize;
  TokenPlan plan = TokenPlan::for_detection(0.001, 0.99, 10, 1);
  std::uint32_t repetitions = 5;
  std::uint64_t seed = 1;
};

struct VerifyCost {
  double challenge_seconds = 0;  // audit + known-answer scan + VO verification
  double baseline_seconds = 0;   // full-node reconstruction + digest comparison
  std::uint64_t rounds = 0;
  std::uint64_t challenged_trees = 0;
  bool all_accepted = true;      // sanity: honest SP passes both verifiers
};

/// Replays `total / update_size` honest rounds. The chain must hold at
/// least `total` objects and its blocks must align with the rounds.
VerifyCost run_verify_cost_point(const Chain& chain, const VerifyCostPoint& p);

struct QueryCost {
  std::string query;  // range, multidim, intersect, keyword_range
  double selectivity = 0;
  std::uint64_t result_size = 0;
  double sp_seconds = 0;
  double verify_seconds = 0;
  bool accepted = true;
};

std::vector<QueryCost> run_query_cost_points(const Chain& chain, std::span<const double> selectivities,
                                             std::uint32_t repetitions, std::uint64_t seed);

/// Median of the samples (upper median for even counts).
double median(std::vector<double> samples);

}  // namespace chainq::bench
