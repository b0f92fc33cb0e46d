#include <gtest/gtest.h>

#include <sstream>

#include "chainq/bench.hpp"
#include "chainq/errors.hpp"

using namespace chainq;
using namespace chainq::bench;

namespace {

const Chain& small_chain() {
  static const Chain c = make_chain(4'000, 500, 60, 3);
  return c;
}

DetectionPoint point(double k, std::uint64_t n, std::uint32_t trials) {
  DetectionPoint p;
  p.adversary.strategy = Strategy::random_omit;
  p.adversary.k = k;
  p.token_objects = n;
  p.n_ranges = default_n_ranges(n);
  p.trials = trials;
  p.seed = 9;
  return p;
}

}  // namespace

TEST(Bench, ExperimentNames) {
  for (auto e : {Experiment::detection, Experiment::adaptive_detection, Experiment::verify_cost,
                 Experiment::query_cost}) {
    EXPECT_EQ(parse_experiment(experiment_name(e)), e);
  }
  EXPECT_THROW(parse_experiment("nope"), ConfigError);
}

TEST(Bench, DefaultRangeCount) {
  EXPECT_EQ(default_n_ranges(1), 1u);
  EXPECT_EQ(default_n_ranges(200), 3u);
  EXPECT_EQ(default_n_ranges(100'000), 10u);
}

TEST(Bench, HonestProviderIsNeverDetected) {
  DetectionPoint p = point(0.0, 200, 20);
  p.adversary.strategy = Strategy::honest;
  EXPECT_EQ(run_detection_point(small_chain(), p).detected, 0u);
}

TEST(Bench, ZeroDetectionsDetectNothing) {
  DetectionPoint p = point(0.05, 400, 10);
  p.detections = 0;
  EXPECT_EQ(run_detection_point(small_chain(), p).rate(), 0.0);
}

TEST(Bench, SameSeedSameRate) {
  const DetectionPoint p = point(0.002, 300, 24);
  const auto a = run_detection_point(small_chain(), p, 1);
  const auto b = run_detection_point(small_chain(), p, 4);
  EXPECT_EQ(a.detected, b.detected);
}

TEST(Bench, HeavyOmissionIsAlwaysCaught) {
  EXPECT_EQ(run_detection_point(small_chain(), point(0.05, 400, 16)).rate(), 1.0);
}

TEST(Bench, OversizedTokenIsSkipped) {
  DetectionPoint p = point(0.001, 10, 5);
  p.n_ranges = 10;
  p.min_range_volume = 1'000;
  const auto r = run_detection_point(small_chain(), p);
  EXPECT_TRUE(r.skipped);
  EXPECT_NE(r.skip_reason.find("detections"), std::string::npos);
}

TEST(Bench, CsvHeaderAndRows) {
  EXPECT_EQ(csv_header(Experiment::verify_cost),
            (std::vector<std::string>{"experiment", "scheme", "bundle", "total_objects", "update_size", "rounds",
                                      "metric", "value", "analytic", "trials", "timestamp"}));
  BenchRecord r{"query_cost", {{"query", "range"}, {"selectivity", "0.01"}, {"n_objects", "10"}, {"result_size", "1"}},
                "sp_seconds", 0.5, std::nullopt, 3, "t"};
  std::ostringstream out;
  write_csv(out, Experiment::query_cost, std::span<const BenchRecord>(&r, 1));
  EXPECT_EQ(out.str(),
            "experiment,query,selectivity,n_objects,result_size,metric,value,analytic,trials,timestamp\n"
            "query_cost,range,0.01,10,1,sp_seconds,0.5,,3,t\n");
  r.params.pop_back();
  std::ostringstream bad;
  EXPECT_THROW(write_csv(bad, Experiment::query_cost, std::span<const BenchRecord>(&r, 1)), ConfigError);
}

TEST(Bench, ConfigValidation) {
  auto c = ExperimentConfig::defaults(Experiment::detection, false);
  EXPECT_NO_THROW(c.validate());
  c.fractions = {0.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::defaults(Experiment::verify_cost, false);
  c.update_sizes = {c.total_objects + 1};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(ExperimentConfig::defaults(Experiment::adaptive_detection, true).objects, 200'000u);
}

TEST(Bench, VerifyCostHonestRun) {
  VerifyCostPoint p;
  p.total = 4'000;
  p.update_size = 1'000;
  p.maxsize = 2'000;
  p.repetitions = 1;
  p.plan = TokenPlan::for_detection(0.01, 0.9, 3, 1);
  p.bundle = {IndexKind::numeric, IndexKind::composite, IndexKind::keyword};
  const VerifyCost c = run_verify_cost_point(small_chain(), p);
  EXPECT_TRUE(c.all_accepted);
  EXPECT_EQ(c.rounds, 4u);
  EXPECT_GT(c.challenged_trees, 0u);
  EXPECT_GT(c.baseline_seconds, 0.0);

  p.update_size = 700;
  EXPECT_THROW(run_verify_cost_point(small_chain(), p), ConfigError);
}

TEST(Bench, QueryCostSelectivity) {
  const std::vector<double> sel = {0.0, 0.02};
  const auto pts = run_query_cost_points(small_chain(), sel, 1, 4);
  ASSERT_EQ(pts.size(), 8u);
  for (const auto& q : pts) {
    EXPECT_TRUE(q.accepted) << q.query;
    if (q.selectivity == 0.0 && q.query != "intersect") EXPECT_EQ(q.result_size, 0u) << q.query;
  }
  EXPECT_EQ(pts[4].query, "range");
  EXPECT_EQ(pts[4].result_size, 80u);
}
