#pragma once

// Per-index forests of MB-trees. A forest splits the object stream into
// segments of `maxsize` stream positions; segment i holds positions
// [i * maxsize, (i + 1) * maxsize). The last segment is the live tree.
//
// Single-attribute indexes (timestamp, numeric, discrete) hold one object
// tree per segment. Grouped indexes (composite: disc -> num, keyword:
// kw -> num) hold one object tree per group plus a directory tree over the
// group roots; the directory root is what gets published.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "chainq/chain.hpp"
#include "chainq/mbtree.hpp"

namespace chainq {

inline constexpr std::uint64_t kDefaultMaxsize = 200'000;

bool is_grouped(IndexKind kind);
/// Indexed value: ts, num_attr or disc_attr; grouped kinds index num_attr.
std::uint64_t index_value(IndexKind kind, const DataObject& o);
inline SortKey sort_key(IndexKind kind, const DataObject& o) { return {index_value(kind, o), o.id}; }
/// Groups an object belongs to (grouped kinds only).
std::vector<std::uint64_t> object_groups(IndexKind kind, const DataObject& o);
/// How many leaf entries one object contributes to an index.
std::uint64_t multiplicity(IndexKind kind, const DataObject& o);

struct GroupRecord {
  std::uint64_t group = 0;
  Hash root{};
  U256 sum;
  std::uint64_t count = 0;
  friend bool operator==(const GroupRecord&, const GroupRecord&) = default;
};

Hash record_hash(const GroupRecord& r);
inline SortKey group_key(std::uint64_t group) { return {group, 0}; }

/// Concrete faults applied when building an SP's forests.
struct FaultSet {
  std::vector<std::uint64_t> omitted;  // stream positions, ascending
  std::vector<std::pair<std::uint64_t, std::uint64_t>> misplaced;  // (position, placement value)
  bool forge_sums = false;
  std::uint32_t forge_level = 0;

  bool empty() const { return omitted.empty() && misplaced.empty(); }
};

struct ForestParams {
  std::uint32_t fanout = MbTree::kDefaultFanout;
  std::uint64_t maxsize = kDefaultMaxsize;
};

struct Segment {
  TreeId id;
  std::uint64_t first = 0;  // stream positions [first, end)
  std::uint64_t end = 0;
  BlockRange blocks;
  MbTree tree;                          // object tree or directory
  std::map<std::uint64_t, MbTree> groups;  // grouped kinds
  std::uint64_t claimed_count = 0;
  bool sealed = false;
};

/// Positions [first, end) of a segment, from the public maxsize and the
/// end of the chain at the digest's last block.
std::pair<std::uint64_t, std::uint64_t> segment_positions(const Chain& chain, std::uint32_t segment,
                                                          std::uint64_t last_block, std::uint64_t maxsize);

class Forest {
 public:
  Forest(IndexKind kind, ForestParams params);

  /// Bulk build over positions [0, end) with faults applied inside the
  /// honest segmentation.
  static Forest build(const Chain& chain, IndexKind kind, ForestParams params, const FaultSet& faults,
                      std::uint64_t end);
  static Forest build(const Chain& chain, IndexKind kind, ForestParams params, const FaultSet& faults = {}) {
    return build(chain, kind, params, faults, chain.object_count());
  }

  /// Honest incremental update with positions [indexed(), end). The live
  /// tree grows by B-tree insertion; a full segment is sealed by bulk
  /// reload. Returns the segments whose digest changed.
  std::vector<std::uint32_t> insert_batch(const Chain& chain, std::uint64_t end);

  IndexKind kind() const { return kind_; }
  const ForestParams& params() const { return params_; }
  std::uint64_t indexed() const { return indexed_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::uint32_t i) const { return segments_.at(i); }

  /// Reassembles a forest from stored segments (snapshots, fixtures).
  static Forest restore(IndexKind kind, ForestParams params, std::vector<Segment> segments);

  DigestBoardEntry digest(std::uint32_t segment, const std::string& sp_id) const;
  std::vector<DigestBoardEntry> digests(const std::string& sp_id) const;

 private:
  void refresh_directory(Segment& seg);
  void seal(Segment& seg);

  IndexKind kind_;
  ForestParams params_;
  std::vector<Segment> segments_;
  std::uint64_t indexed_ = 0;
  std::unordered_set<std::uint64_t> ids_;
};

/// Segment file: header record, the object or directory tree, then one
/// (group, tree) pair per group.
void write_segment(std::ostream& out, const Segment& seg);
Segment read_segment(std::istream& in);

/// Full-node audit of one digest: hash sum (weighted by index multiplicity)
/// and object count over the digest's positions.
bool audit_digest(const Chain& chain, const DigestBoardEntry& entry, std::uint64_t maxsize);

}  // namespace chainq
