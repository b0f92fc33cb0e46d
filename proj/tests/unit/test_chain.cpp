#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "chainq/chain.hpp"
#include "chainq/errors.hpp"

using namespace chainq;

namespace {

Chain small_chain(std::uint64_t seed = 1, std::uint64_t blocks = 10, std::uint64_t per_block = 100) {
  ChainParams p;
  p.seed = seed;
  p.n_blocks = blocks;
  p.objects_per_block = per_block;
  return generate_chain(p);
}

DigestBoardEntry entry(std::string sp, IndexKind k, std::uint32_t seg, std::uint64_t first, std::uint64_t last) {
  DigestBoardEntry e;
  e.sp_id = std::move(sp);
  e.tree_id = {k, seg};
  e.block_range = {first, last};
  return e;
}

}  // namespace

TEST(Generate, ShapeAndAttributeDomains) {
  const Chain c = small_chain();
  ASSERT_EQ(c.block_count(), 10u);
  ASSERT_EQ(c.object_count(), 1000u);
  std::set<std::uint64_t> ids;
  for (std::size_t i = 0; i < c.object_count(); ++i) {
    const DataObject& o = c.objects()[i];
    ids.insert(o.id);
    EXPECT_EQ(o.ts, i);
    EXPECT_LE(o.num_attr, kNumAttrMax);
    EXPECT_LT(o.disc_attr, kDefaultDiscCardinality);
    EXPECT_GE(o.keywords.size(), 2u);
    EXPECT_LE(o.keywords.size(), 20u);
    EXPECT_TRUE(std::is_sorted(o.keywords.begin(), o.keywords.end()));
    EXPECT_EQ(std::adjacent_find(o.keywords.begin(), o.keywords.end()), o.keywords.end());
    EXPECT_LT(o.keywords.back(), 400u);
  }
  EXPECT_EQ(ids.size(), c.object_count());
}

TEST(Generate, DeterministicPerSeed) {
  EXPECT_TRUE(small_chain(4) == small_chain(4));
  EXPECT_FALSE(small_chain(4) == small_chain(5));
}

TEST(Generate, RejectsBadParams) {
  ChainParams p;
  p.n_blocks = 0;
  EXPECT_THROW(generate_chain(p), ConfigError);
  p = ChainParams{};
  p.keyword_universe = 5;
  EXPECT_THROW(generate_chain(p), ConfigError);
}

TEST(Encode, LengthPrefixedBigEndian) {
  DataObject o{0x0102030405060708ULL, 9, 10, 11, {12, 13}};
  const auto bytes = encode(o);
  ASSERT_EQ(bytes.size(), 4u + 28u + 8u);
  EXPECT_EQ(bytes[3], 36);
  EXPECT_EQ(bytes[4], 0x01);
  EXPECT_EQ(bytes[11], 0x08);
  EXPECT_EQ(bytes.back(), 13);
  EXPECT_EQ(object_hash(o), sha256(std::span<const std::uint8_t>(bytes)));
}

TEST(ChainFile, RoundTripIsByteIdentical) {
  const Chain c = small_chain(2, 5, 20);
  std::stringstream a;
  write_chain(a, c);
  const Chain back = read_chain(a);
  EXPECT_TRUE(back == c);
  std::stringstream b;
  write_chain(b, back);
  EXPECT_EQ(a.str(), b.str());
  for (std::size_t h = 0; h < c.block_count(); ++h) EXPECT_EQ(back.header(h).header_hash, c.header(h).header_hash);
}

TEST(ChainFile, RejectsGarbage) {
  std::stringstream s("0,1,2,x,4,5\n");
  EXPECT_THROW(read_chain(s), FormatError);
}

TEST(Chain, HeadersLinkAndPositions) {
  const Chain c = small_chain(3, 4, 25);
  EXPECT_TRUE(c.verify_headers());
  EXPECT_EQ(c.header(2).prev_hash, c.header(1).header_hash);
  EXPECT_EQ(c.positions({1, 2}), (std::pair<std::uint64_t, std::uint64_t>{25, 75}));
  EXPECT_EQ(c.height_of(74), 2u);
  EXPECT_THROW(c.positions({3, 4}), AuditError);
}

TEST(Chain, RejectsBackwardsTimestamps) {
  Chain c;
  c.append_block({DataObject{1, 10, 0, 0, {1, 2}}});
  EXPECT_THROW(c.append_block({DataObject{2, 9, 0, 0, {1, 2}}}), ConfigError);
}

TEST(Audit, HashSumDetectsAnyMissingObject) {
  const Chain c = small_chain(6, 3, 50);
  U256 sum;
  for (const Hash& h : c.hashes()) sum += U256::from_be_bytes(h);
  EXPECT_TRUE(audit_hash_sum(c, {0, 2}, sum));
  const U256 missing = sum - U256::from_be_bytes(c.hashes()[17]);
  EXPECT_FALSE(audit_hash_sum(c, {0, 2}, missing));
  U256 prefix;
  for (std::size_t i = 0; i < 17; ++i) prefix += U256::from_be_bytes(c.hashes()[i]);
  EXPECT_TRUE(audit_positions(c, 0, 17, prefix));
  EXPECT_THROW(audit_positions(c, 140, 20, prefix), AuditError);
}

TEST(Board, LiveTreeGrowthSupersedes) {
  DigestBoard b;
  b.publish(entry("sp", IndexKind::numeric, 0, 0, 3));
  b.publish(entry("sp", IndexKind::numeric, 0, 0, 5));
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.live("sp", {IndexKind::numeric, 0})->block_range.last, 5u);
  EXPECT_THROW(b.publish(entry("sp", IndexKind::numeric, 0, 0, 4)), BoardRejection);
  EXPECT_THROW(b.publish(entry("sp", IndexKind::numeric, 0, 1, 6)), BoardRejection);
}

TEST(Board, OverlapRejectedExceptRolloverBlock) {
  DigestBoard b;
  b.publish(entry("sp", IndexKind::numeric, 0, 0, 4));
  b.publish(entry("sp", IndexKind::numeric, 1, 4, 9));  // shares the rollover block
  EXPECT_THROW(b.publish(entry("sp", IndexKind::numeric, 2, 8, 12)), BoardRejection);
  EXPECT_THROW(b.publish(entry("sp", IndexKind::numeric, 3, 9, 12)), BoardRejection);  // not consecutive
  b.publish(entry("sp", IndexKind::numeric, 2, 9, 12));
  b.publish(entry("other", IndexKind::numeric, 0, 0, 12));  // other SPs are independent
  b.publish(entry("sp", IndexKind::keyword, 0, 0, 12));      // so are other indexes
  EXPECT_EQ(b.live_entries("sp", IndexKind::numeric).size(), 3u);
}

TEST(Board, RejectsMalformedEntries) {
  DigestBoard b;
  EXPECT_THROW(b.publish(entry("", IndexKind::numeric, 0, 0, 1)), BoardRejection);
  EXPECT_THROW(b.publish(entry("a,b", IndexKind::numeric, 0, 0, 1)), BoardRejection);
  EXPECT_THROW(b.publish(entry("sp", IndexKind::numeric, 0, 3, 1)), BoardRejection);
}

TEST(Board, CsvRoundTrip) {
  DigestBoard b;
  auto e = entry("sp", IndexKind::composite, 0, 0, 2);
  e.root_hash = sha256("r");
  e.hash_sum = U256::from_be_bytes(sha256("s"));
  e.object_count = 42;
  b.publish(e);
  b.publish(entry("sp", IndexKind::composite, 1, 2, 3));
  std::stringstream s;
  b.write_csv(s);
  const DigestBoard back = DigestBoard::read_csv(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at(0), e);
}

TEST(TreeIdText, ParsesAndPrints) {
  EXPECT_EQ(TreeId::parse("keyword:3"), (TreeId{IndexKind::keyword, 3}));
  EXPECT_EQ((TreeId{IndexKind::timestamp, 0}).str(), "ts:0");
  EXPECT_ANY_THROW(TreeId::parse("bogus:1"));
  EXPECT_EQ(parse_index_kind("numeric"), IndexKind::numeric);
}
