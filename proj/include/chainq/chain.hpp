#pragma once

// Simulated blockchain: the object stream full nodes hold, block headers,
// and the append-only board where service providers publish digests.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainq/hash.hpp"

namespace chainq {

inline constexpr std::uint32_t kNumAttrMax = 1'000'000;
inline constexpr std::uint32_t kDefaultDiscCardinality = 16;

/// One on-chain record.
struct DataObject {
  std::uint64_t id = 0;
  std::uint64_t ts = 0;
  std::uint32_t num_attr = 0;
  std::uint32_t disc_attr = 0;
  std::vector<std::uint32_t> keywords;  // sorted, distinct

  friend bool operator==(const DataObject&, const DataObject&) = default;
  bool has_keyword(std::uint32_t kw) const;
};

/// Canonical, length-prefixed big-endian encoding hashed by every role.
std::vector<std::uint8_t> encode(const DataObject& o);
Hash object_hash(const DataObject& o);
/// Batch form; uses the SIMD hash kernel.
std::vector<Hash> object_hashes(std::span<const DataObject> objects);

struct BlockRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;  // inclusive
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct BlockHeader {
  std::uint64_t height = 0;
  std::uint64_t first_position = 0;  // index of the block's first object in the stream
  std::uint64_t object_count = 0;
  Hash prev_hash{};
  Hash header_hash{};
};

/// Borrowed view of a block.
struct Block {
  std::uint64_t height;
  std::span<const DataObject> objects;
  Hash header_hash;
};

Hash compute_header_hash(std::uint64_t height, const Hash& prev_hash, std::span<const Hash> object_hashes);

struct ChainParams {
  std::uint64_t seed = 1;
  std::uint64_t n_blocks = 10;
  std::uint64_t objects_per_block = 100;
  std::uint32_t keyword_universe = 400;
  std::uint32_t disc_cardinality = kDefaultDiscCardinality;
};

/// Append-only object stream grouped into blocks.
///
/// Object hashes are computed once on append (as block validation would)
/// and cached; every role reads them from here.
class Chain {
 public:
  Chain() = default;

  /// Appends one block; objects must continue the timestamp order and carry
  /// fresh ids.
  void append_block(std::vector<DataObject> objects);

  std::size_t block_count() const { return headers_.size(); }
  std::size_t object_count() const { return objects_.size(); }
  Block block(std::uint64_t height) const;
  const BlockHeader& header(std::uint64_t height) const { return headers_.at(height); }
  std::span<const BlockHeader> headers() const { return headers_; }

  std::span<const DataObject> objects() const { return objects_; }
  std::span<const Hash> hashes() const { return hashes_; }
  std::span<const std::uint64_t> ts_column() const { return ts_; }
  std::span<const std::uint64_t> num_column() const { return num_; }
  std::span<const std::uint64_t> disc_column() const { return disc_; }
  std::uint64_t height_of(std::uint64_t position) const;

  /// Stream positions [first, last) covered by a block range.
  std::pair<std::uint64_t, std::uint64_t> positions(const BlockRange& range) const;

  bool verify_headers() const;

  friend bool operator==(const Chain& a, const Chain& b) { return a.objects_ == b.objects_ && a.block_sizes() == b.block_sizes(); }

 private:
  std::vector<std::uint64_t> block_sizes() const;

  std::vector<BlockHeader> headers_;
  std::vector<DataObject> objects_;
  std::vector<Hash> hashes_;
  std::vector<std::uint64_t> ts_, num_, disc_;
};

/// Deterministic synthetic chain: uniform num_attr in [0, 1e6], uniform
/// discrete label, 2-20 distinct keywords per object.
Chain generate_chain(const ChainParams& params);

/// Line-delimited record file: `height,id,ts,num_attr,disc_attr,kw kw ...`.
void write_chain(std::ostream& out, const Chain& chain);
Chain read_chain(std::istream& in);
void save_chain(const std::filesystem::path& path, const Chain& chain);
Chain load_chain(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Digest board

enum class IndexKind : std::uint8_t { timestamp, numeric, composite, keyword, discrete };

std::string_view index_name(IndexKind kind);
IndexKind parse_index_kind(std::string_view name);

/// Tree identity on the board: one index kind of one SP, segment = rollover
/// sequence number within that index's forest.
struct TreeId {
  IndexKind kind = IndexKind::numeric;
  std::uint32_t segment = 0;
  auto operator<=>(const TreeId&) const = default;
  std::string str() const;
  static TreeId parse(std::string_view s);
};

struct DigestBoardEntry {
  std::string sp_id;
  TreeId tree_id;
  BlockRange block_range;
  Hash root_hash{};
  U256 hash_sum;
  std::uint64_t object_count = 0;
  friend bool operator==(const DigestBoardEntry&, const DigestBoardEntry&) = default;
};

/// Append-only log of published digests.
///
/// A later entry for the same (sp, tree) supersedes the earlier one when it
/// extends the same range (the live tree growing). Ranges of distinct trees
/// of one SP index never overlap, except that two consecutive trees may
/// share the single block where a rollover happened.
class DigestBoard {
 public:
  /// Returns the board position. Throws BoardRejection on a protocol
  /// violation.
  std::size_t publish(const DigestBoardEntry& entry);

  std::size_t size() const { return entries_.size(); }
  const DigestBoardEntry& at(std::size_t position) const { return entries_.at(position); }
  std::span<const DigestBoardEntry> entries() const { return entries_; }

  std::optional<DigestBoardEntry> live(const std::string& sp_id, const TreeId& tree) const;
  /// Live entries of one SP index ordered by segment.
  std::vector<DigestBoardEntry> live_entries(const std::string& sp_id, IndexKind kind) const;

  void write_csv(std::ostream& out) const;
  static DigestBoard read_csv(std::istream& in);

 private:
  std::vector<DigestBoardEntry> entries_;
  std::map<std::pair<std::string, TreeId>, std::size_t> live_;
};

class BoardRejection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Σ H(o) mod 2^256 over all objects in `range`, compared to `claimed`.
/// Throws AuditError when the range is not on the chain.
bool audit_hash_sum(const Chain& chain, const BlockRange& range, const U256& claimed);

/// Same over stream positions [first, first + count).
bool audit_positions(const Chain& chain, std::uint64_t first, std::uint64_t count, const U256& claimed);

}  // namespace chainq
