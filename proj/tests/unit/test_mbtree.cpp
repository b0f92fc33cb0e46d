#include <gtest/gtest.h>

#include <sstream>

#include "chainq/binary_merkle.hpp"
#include "chainq/errors.hpp"
#include "chainq/mbtree.hpp"
#include "chainq/random.hpp"

using namespace chainq;

namespace {

LeafEntry entry_for(std::uint64_t key, std::uint64_t id) {
  return object_entry({key, id}, sha256("obj" + std::to_string(id)), id);
}

std::vector<LeafEntry> random_entries(std::uint64_t seed, std::size_t n, std::uint64_t key_space) {
  Rng rng(seed);
  std::vector<LeafEntry> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(entry_for(uniform_below(rng, key_space), i));
  return v;
}

std::vector<RevealedEntry> as_revealed(const std::vector<LeafEntry>& es) {
  std::vector<RevealedEntry> out;
  for (const auto& e : es) out.push_back({e.key, e.hash, e.sum});
  return out;
}

ReplayResult replay(const MbTree& t, const KeyRange& r, const RangeProofResult& p) {
  const auto rev = as_revealed(p.revealed);
  return replay_range_proof(p.proof, rev, r, p.has_left, p.has_right, EntrySums::from_hash, t.root_hash(),
                            t.root_sum());
}

}  // namespace

TEST(MbTree, BulkLoadCommitsToEverything) {
  auto es = random_entries(1, 1000, 500);
  const MbTree t = MbTree::bulk_load(es, 8);
  EXPECT_EQ(t.size(), 1000u);
  EXPECT_TRUE(t.self_consistent());
  U256 sum;
  for (const auto& e : es) sum += U256::from_be_bytes(e.hash);
  EXPECT_EQ(t.root_sum(), sum);
  const auto back = t.entries();
  EXPECT_TRUE(std::is_sorted(back.begin(), back.end(), [](auto& a, auto& b) { return a.key < b.key; }));
  EXPECT_EQ(t.height(), 4u);  // 1000 / 8 -> 125 -> 16 -> 2 -> 1
}

TEST(MbTree, NodeHashIsSumThenChildren) {
  std::vector<LeafEntry> es = {entry_for(1, 1), entry_for(2, 2)};
  const MbTree t = MbTree::bulk_load(es, 4);
  Sha256 h;
  h.update(es[0].sum + es[1].sum).update(es[0].hash).update(es[1].hash);
  EXPECT_EQ(t.root_hash(), h.finalize());
}

TEST(MbTree, InsertionMatchesBulkContent) {
  auto es = random_entries(2, 700, 300);
  MbTree live(5);
  for (std::size_t i = 0; i < es.size(); ++i) {
    live.insert(es[i]);
    if (i % 97 == 0) live.refresh();
  }
  live.refresh();
  const MbTree bulk = MbTree::bulk_load(es, 5);
  EXPECT_TRUE(live.self_consistent());
  EXPECT_EQ(live.root_sum(), bulk.root_sum());
  EXPECT_EQ(live.size(), bulk.size());
  const auto a = live.entries(), b = bulk.entries();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].key, b[i].key);
  for (const auto& n : live.nodes()) {
    if (&n == &live.node(live.root_index())) continue;
    EXPECT_LE(n.leaf ? n.entries.size() : n.children.size(), 5u);
  }
}

TEST(MbTree, CountsByKey) {
  const MbTree t = MbTree::bulk_load({entry_for(1, 1), entry_for(3, 2), entry_for(3, 3), entry_for(7, 4)}, 3);
  EXPECT_EQ(t.count_below({3, 0}), 1u);
  EXPECT_EQ(t.count_at_most({3, kU64Max}), 3u);
  EXPECT_EQ(t.count_below({100, 0}), 4u);
}

TEST(RangeProof, HonestProofsReplayForRandomRanges) {
  auto es = random_entries(3, 2000, 1000);
  for (std::uint32_t fanout : {3u, 4u, 16u, 64u}) {
    const MbTree t = MbTree::bulk_load(es, fanout);
    Rng rng(fanout);
    for (int q = 0; q < 60; ++q) {
      std::uint64_t lo = uniform_below(rng, 1100), hi = lo + uniform_below(rng, 200);
      if (q % 10 == 0) hi = lo;  // point query, possibly empty
      const KeyRange r = KeyRange::values(lo, hi);
      const auto p = t.prove(r);
      const auto res = replay(t, r, p);
      ASSERT_TRUE(res.ok()) << res.rejection->detail << " fanout " << fanout << " [" << lo << "," << hi << "]";
      std::size_t inner = 0;
      for (const auto& e : es) inner += r.contains(e.key);
      EXPECT_EQ(p.revealed.size() - p.has_left - p.has_right, inner);
    }
  }
}

TEST(RangeProof, WholeAndOutsideRanges) {
  const MbTree t = MbTree::bulk_load(random_entries(4, 100, 50), 4);
  for (const KeyRange& r : {KeyRange::values(0, kU64Max), KeyRange::values(1000, 2000), KeyRange{{0, 0}, {0, 0}}}) {
    const auto p = t.prove(r);
    EXPECT_TRUE(replay(t, r, p).ok());
  }
}

TEST(RangeProof, TamperingIsCaught) {
  const MbTree t = MbTree::bulk_load(random_entries(5, 300, 100), 4);
  const KeyRange r = KeyRange::values(30, 40);
  const auto honest = t.prove(r);
  ASSERT_GE(honest.revealed.size(), 4u);
  {
    auto p = honest;
    p.revealed[1].hash[0] ^= 1;  // tampered record
    EXPECT_EQ(replay(t, r, p).rejection->reason, RejectReason::root_mismatch);
  }
  {
    auto p = honest;
    p.revealed.erase(p.revealed.begin() + 2);  // record missing from the answer
    EXPECT_TRUE(replay(t, r, p).rejection.has_value());
  }
  {
    auto p = honest;
    p.has_left = false;  // claims the range starts at the tree minimum
    EXPECT_EQ(replay(t, r, p).rejection->reason, RejectReason::boundary_violation);
  }
  {
    auto p = honest;
    p.proof.nodes[0].items.pop_back();
    EXPECT_TRUE(replay(t, r, p).rejection.has_value());
  }
  {
    const auto other = MbTree::bulk_load(random_entries(6, 300, 100), 4);
    const auto rev = as_revealed(honest.revealed);
    const auto res = replay_range_proof(honest.proof, rev, r, honest.has_left, honest.has_right,
                                        EntrySums::from_hash, other.root_hash(), other.root_sum());
    EXPECT_EQ(res.rejection->reason, RejectReason::root_mismatch);
  }
}

TEST(RangeProof, NarrowerRangeWithSameProofIsRejected) {
  const MbTree t = MbTree::bulk_load(random_entries(7, 300, 100), 4);
  const auto p = t.prove(KeyRange::values(30, 50));
  const auto rev = as_revealed(p.revealed);
  // Claiming those records answer [35, 40] leaves inner records outside it.
  const auto res = replay_range_proof(p.proof, rev, KeyRange::values(35, 40), p.has_left, p.has_right,
                                      EntrySums::from_hash, t.root_hash(), t.root_sum());
  ASSERT_FALSE(res.ok());
}

TEST(RangeProof, MalformedStructuresRejected) {
  const MbTree t = MbTree::bulk_load(random_entries(8, 200, 100), 4);
  const KeyRange r = KeyRange::values(10, 20);
  auto p = t.prove(r);
  auto rev = as_revealed(p.revealed);
  RangeProof empty;
  EXPECT_EQ(replay_range_proof(empty, rev, r, p.has_left, p.has_right, EntrySums::from_hash, t.root_hash(),
                               t.root_sum())
                .rejection->reason,
            RejectReason::malformed);
  p.proof.nodes.push_back(ProofNode{});  // unreferenced node
  EXPECT_EQ(replay_range_proof(p.proof, rev, r, p.has_left, p.has_right, EntrySums::from_hash, t.root_hash(),
                               t.root_sum())
                .rejection->reason,
            RejectReason::malformed);
}

TEST(Forge, KeepsHonestSumButFailsSelfCheck) {
  auto es = random_entries(9, 500, 1000);
  const MbTree honest = MbTree::bulk_load(es, 8);
  const std::vector<std::uint64_t> omitted = {3, 250};
  for (std::uint32_t level : {0u, 1u}) {
    const MbTree f = MbTree::forge(es, omitted, 8, level);
    EXPECT_EQ(f.root_sum(), honest.root_sum());
    EXPECT_EQ(f.size(), 498u);
    EXPECT_FALSE(f.self_consistent());
    EXPECT_EQ(f.forged_count(), 2u);
  }
}

TEST(Forge, ProofTouchingForgedLeafIsRejected) {
  auto es = random_entries(10, 500, 1000);
  const MbTree f = MbTree::forge(es, std::vector<std::uint64_t>{7}, 8, 0);
  // A range over the omitted record's key exposes the forged leaf.
  const KeyRange r = KeyRange::values(es[7].key.key, es[7].key.key);
  const auto p = f.prove(r);
  EXPECT_FALSE(replay(f, r, p).ok());
}

TEST(MbTree, BinaryRoundTrip) {
  MbTree t(6);
  for (const auto& e : random_entries(11, 400, 200)) t.insert(e);
  t.refresh();
  std::stringstream s;
  t.write(s);
  const MbTree back = MbTree::read(s);
  EXPECT_EQ(back.root_hash(), t.root_hash());
  EXPECT_EQ(back.root_sum(), t.root_sum());
  EXPECT_TRUE(back.self_consistent());
  std::stringstream bad("junk");
  EXPECT_ANY_THROW(MbTree::read(bad));
}

TEST(MbTree, RejectsTinyFanout) { EXPECT_ANY_THROW(MbTree::bulk_load({}, 2)); }

TEST(BinaryMerkle, InclusionProofs) {
  std::vector<Hash> leaves;
  for (int i = 0; i < 16; ++i) leaves.push_back(sha256(std::to_string(i)));
  const BinaryMerkle m(leaves);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto path = m.prove(i);
    EXPECT_EQ(path.size(), 4u);
    EXPECT_TRUE(BinaryMerkle::verify(leaves[i], path, m.root()));
    EXPECT_FALSE(BinaryMerkle::verify(leaves[(i + 1) % 16], path, m.root()));
  }
  EXPECT_EQ(m.number_of(1, 0), 1u);
  EXPECT_EQ(m.locate(m.number_of(2, 3)), (std::pair<std::size_t, std::size_t>{2, 3}));
  EXPECT_ANY_THROW(BinaryMerkle(std::vector<Hash>(3)));
}
