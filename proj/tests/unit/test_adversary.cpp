#include <gtest/gtest.h>

#include <algorithm>

#include "chainq/adversary.hpp"
#include "chainq/errors.hpp"

using namespace chainq;

namespace {

Chain chain_of(std::uint64_t n) {
  ChainParams p;
  p.n_blocks = n / 100;
  p.objects_per_block = 100;
  return generate_chain(p);
}

std::vector<std::uint64_t> ranks_by_num(const Chain& c, const std::vector<std::uint64_t>& positions) {
  std::vector<std::pair<SortKey, std::uint64_t>> keyed;
  for (std::uint64_t p = 0; p < c.object_count(); ++p) keyed.push_back({sort_key(IndexKind::numeric, c.objects()[p]), p});
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint64_t> rank_of(c.object_count());
  for (std::uint64_t r = 0; r < keyed.size(); ++r) rank_of[keyed[r].second] = r;
  std::vector<std::uint64_t> ranks;
  for (auto p : positions) ranks.push_back(rank_of[p]);
  std::sort(ranks.begin(), ranks.end());
  return ranks;
}

}  // namespace

TEST(Adversary, AffectedCountFloors) {
  EXPECT_EQ(affected_count(0.001, 20'000), 20u);
  EXPECT_EQ(affected_count(0.0005, 20'000), 10u);
  EXPECT_EQ(affected_count(0.001, 999), 0u);
  EXPECT_EQ(affected_count(0.3, 10), 3u);  // 0.3 * 10 is 2.9999... in binary
}

TEST(Adversary, RandomOmitIsDeterministicAndSized) {
  const Chain c = chain_of(2000);
  FaultPlan p{Strategy::random_omit, 0.01, 1, 77};
  const FaultSet a = plan_faults(c, p), b = plan_faults(c, p);
  EXPECT_EQ(a.omitted, b.omitted);
  EXPECT_EQ(a.omitted.size(), 20u);
  EXPECT_TRUE(std::is_sorted(a.omitted.begin(), a.omitted.end()));
  p.rng_seed = 78;
  EXPECT_NE(plan_faults(c, p).omitted, a.omitted);
  EXPECT_FALSE(a.forge_sums);
}

TEST(Adversary, WindowedFaultsStayInWindow) {
  const Chain c = chain_of(2000);
  const FaultSet f = plan_faults(c, 500, 1500, FaultPlan{Strategy::random_omit, 0.05, 1, 3});
  EXPECT_EQ(f.omitted.size(), 50u);
  for (auto p : f.omitted) {
    EXPECT_GE(p, 500u);
    EXPECT_LT(p, 1500u);
  }
}

TEST(Adversary, ConcentratedOmitFormsContiguousKeyRuns) {
  const Chain c = chain_of(5000);
  for (std::uint32_t runs : {1u, 3u, 7u}) {
    const FaultSet f = plan_faults(c, FaultPlan{Strategy::concentrated_omit, 0.01, runs, 9});
    ASSERT_EQ(f.omitted.size(), 50u);
    const auto ranks = ranks_by_num(c, f.omitted);
    std::uint32_t gaps = 0;
    for (std::size_t i = 1; i < ranks.size(); ++i) gaps += ranks[i] != ranks[i - 1] + 1;
    EXPECT_LE(gaps + 1, runs);
  }
}

TEST(Adversary, MisplacementMovesKeys) {
  const Chain c = chain_of(1000);
  const FaultSet f = plan_faults(c, FaultPlan{Strategy::random_misplace, 0.02, 1, 5});
  EXPECT_EQ(f.misplaced.size(), 20u);
  for (auto [p, v] : f.misplaced) EXPECT_NE(c.objects()[p].num_attr, v);
  EXPECT_TRUE(f.omitted.empty());
}

TEST(Adversary, ForgeStrategySetsFlag) {
  const Chain c = chain_of(1000);
  FaultPlan p{Strategy::forge_sums, 0.01, 1, 5};
  p.forge_level = 1;
  const FaultSet f = plan_faults(c, p);
  EXPECT_TRUE(f.forge_sums);
  EXPECT_EQ(f.forge_level, 1u);
  EXPECT_EQ(f.omitted.size(), 10u);
}

TEST(Adversary, ValidatesPlans) {
  EXPECT_THROW((FaultPlan{Strategy::random_omit, 1.5}).validate(), ConfigError);
  EXPECT_THROW((FaultPlan{Strategy::random_omit, -0.1}).validate(), ConfigError);
  EXPECT_THROW((FaultPlan{Strategy::concentrated_omit, 0.1, 0}).validate(), ConfigError);
  FaultPlan p{Strategy::random_misplace, 0.1};
  p.cluster_index = IndexKind::keyword;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_EQ(parse_strategy("concentrated_omit"), Strategy::concentrated_omit);
  EXPECT_THROW(parse_strategy("nope"), ConfigError);
}
