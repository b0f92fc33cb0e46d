#pragma once

// Augmented Merkle B+-tree. Every node commits to the modular sum of the
// object hashes below it and to its children's hashes:
//
//   node_hash = H(sum_be32 || h_1 || ... || h_i)
//
// where a leaf's children are its entries' hashes.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainq/hash.hpp"

namespace chainq {

/// Total order used by every tree: indexed value, then object id.
struct SortKey {
  std::uint64_t key = 0;
  std::uint64_t id = 0;
  auto operator<=>(const SortKey&) const = default;
};

inline constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

/// Closed interval in SortKey order.
struct KeyRange {
  SortKey lo;
  SortKey hi;
  bool contains(const SortKey& k) const { return lo <= k && k <= hi; }
  /// All (key, id) with lo <= key <= hi.
  static KeyRange values(std::uint64_t lo, std::uint64_t hi) { return {{lo, 0}, {hi, kU64Max}}; }
  friend bool operator==(const KeyRange&, const KeyRange&) = default;
};

struct LeafEntry {
  SortKey key;
  Hash hash{};
  U256 sum;  // int(hash) for object entries
  std::uint64_t payload = 0;
};

LeafEntry object_entry(SortKey key, const Hash& h, std::uint64_t payload);

enum class RejectReason : std::uint8_t {
  root_mismatch,
  not_adjacent,
  boundary_violation,
  unsound_result,
  missing_commitment,
  coverage_gap,
  malformed,
  result_mismatch,
  unresponsive,
};

std::string_view reason_name(RejectReason r);

struct Rejection {
  RejectReason reason;
  std::string detail;
};

struct ProofItem {
  enum class Kind : std::uint8_t { pruned_node, pruned_entry, expanded, revealed };
  Kind kind = Kind::pruned_node;
  Hash hash{};
  U256 sum;
  std::uint32_t child = 0;  // expanded: index into RangeProof::nodes
};

struct ProofNode {
  bool leaf = false;
  std::vector<ProofItem> items;
};

/// Pruned tree in preorder; nodes[0] is the root.
struct RangeProof {
  std::vector<ProofNode> nodes;
  std::size_t pruned_count() const;
};

bool operator==(const ProofItem& a, const ProofItem& b);
bool operator==(const ProofNode& a, const ProofNode& b);
bool operator==(const RangeProof& a, const RangeProof& b);

/// A revealed leaf entry as reconstructed by the verifier.
struct RevealedEntry {
  SortKey key;
  Hash hash{};
  U256 sum;
};

enum class EntrySums : std::uint8_t {
  from_hash,  // object leaves: an entry's sum is its hash read as an integer
  explicit_,  // directory leaves: sums travel with the proof
};

struct ReplayResult {
  Hash root{};
  U256 sum;
  std::optional<Rejection> rejection;
  bool ok() const { return !rejection; }
};

/// Recomputes (root hash, root sum) from a proof and checks the range
/// invariants: revealed items are contiguous, the optional boundaries lie
/// strictly outside `range`, every inner entry lies inside it, and keys
/// strictly increase. `expected_root`/`expected_sum` are checked first.
ReplayResult replay_range_proof(const RangeProof& proof, std::span<const RevealedEntry> revealed,
                                const KeyRange& range, bool has_left, bool has_right, EntrySums mode,
                                const Hash& expected_root, const U256& expected_sum);

struct RangeProofResult {
  RangeProof proof;
  std::vector<LeafEntry> revealed;  // boundaries included
  bool has_left = false;
  bool has_right = false;
};

class MbTree {
 public:
  static constexpr std::uint32_t kDefaultFanout = 64;

  struct Node {
    bool leaf = true;
    std::uint32_t level = 0;  // 0 = leaf
    std::vector<std::uint32_t> children;
    std::vector<LeafEntry> entries;
    SortKey min_key;
    std::uint64_t count = 0;
    Hash hash{};
    U256 sum;
    bool dirty = true;
    bool forged = false;  // sum kept at a fabricated value
  };

  explicit MbTree(std::uint32_t fanout = kDefaultFanout);

  /// Sorts by key and packs leaves, then each internal level, left to right
  /// at full fanout.
  static MbTree bulk_load(std::vector<LeafEntry> entries, std::uint32_t fanout);
  /// Explicit leaf grouping (fixtures); upper levels packed at fanout.
  static MbTree from_leaves(std::vector<std::vector<LeafEntry>> leaves, std::uint32_t fanout);
  /// Honest bulk-loaded tree with `omitted` payloads removed, where every
  /// node at `forge_level` that lost an entry keeps its honest sum.
  static MbTree forge(std::vector<LeafEntry> honest, std::span<const std::uint64_t> omitted_payloads,
                      std::uint32_t fanout, std::uint32_t forge_level = 0);

  /// B-tree insertion with node splits. Hashes are stale until refresh().
  void insert(const LeafEntry& e);
  /// Recomputes the hashes of nodes touched since the last refresh.
  void refresh();

  bool empty() const { return root_ == kNone; }
  std::uint64_t size() const { return empty() ? 0 : nodes_[root_].count; }
  std::uint32_t fanout() const { return fanout_; }
  std::uint32_t height() const { return empty() ? 0 : nodes_[root_].level + 1; }
  const Hash& root_hash() const;
  const U256& root_sum() const;
  std::uint32_t root_index() const { return root_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::uint32_t i) const { return nodes_.at(i); }

  std::vector<LeafEntry> entries() const;
  /// Number of entries with key < k.
  std::uint64_t count_below(const SortKey& k) const;
  /// Number of entries with key <= k.
  std::uint64_t count_at_most(const SortKey& k) const;

  RangeProofResult prove(const KeyRange& range) const;

  /// Recomputes every node from its entries; false on any stored mismatch
  /// (a forged tree fails this).
  bool self_consistent() const;

  std::size_t forged_count() const;

  void write(std::ostream& out) const;
  static MbTree read(std::istream& in);

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t new_node(bool leaf, std::uint32_t level);
  void build_levels(std::vector<std::uint32_t> level_nodes);
  std::optional<std::uint32_t> insert_rec(std::uint32_t idx, const LeafEntry& e);
  void update_summary(std::uint32_t idx);
  void hash_nodes(std::span<const std::uint32_t> idxs);
  void prove_rec(std::uint32_t idx, std::uint64_t base, std::uint64_t a, std::uint64_t b,
                 RangeProofResult& out) const;

  std::uint32_t fanout_;
  std::uint32_t root_ = kNone;
  std::vector<Node> nodes_;
};

}  // namespace chainq
