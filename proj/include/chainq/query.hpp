#pragma once

// Verifiable queries over forests: SP-side answer construction and
// client-side verification against published digests.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chainq/chain.hpp"
#include "chainq/forest.hpp"
#include "chainq/mbtree.hpp"

namespace chainq {

enum class QueryKind : std::uint8_t { range, object, multidim, keyword, keyword_range };

std::string_view query_kind_name(QueryKind k);
QueryKind parse_query_kind(std::string_view name);

struct QueryExpr {
  QueryKind kind = QueryKind::range;
  IndexKind index = IndexKind::numeric;
  KeyRange range = KeyRange::values(0, kU64Max);  // primary (indexed) dimension
  std::uint64_t group_lo = 0;                    // multidim: disc bounds
  std::uint64_t group_hi = kU64Max;
  std::vector<std::uint32_t> keywords;           // sorted, distinct
  std::optional<std::uint32_t> segment;          // restrict to one tree

  static QueryExpr range_query(IndexKind index, std::uint64_t lo, std::uint64_t hi);
  static QueryExpr object_query(IndexKind index, std::uint64_t value);
  static QueryExpr multidim(std::uint64_t disc_lo, std::uint64_t disc_hi, std::uint64_t num_lo, std::uint64_t num_hi);
  static QueryExpr keyword_query(std::vector<std::uint32_t> keywords);
  static QueryExpr keyword_range(std::vector<std::uint32_t> keywords, std::uint64_t num_lo, std::uint64_t num_hi);

  /// Throws QueryError when the expression is malformed.
  void validate() const;
  bool matches(const DataObject& o) const;
  SortKey result_key(const DataObject& o) const { return sort_key(index, o); }

  friend bool operator==(const QueryExpr&, const QueryExpr&) = default;
};

/// Proof for one object tree.
struct TreeVO {
  using Inner = std::variant<std::uint32_t, DataObject>;  // result index, or a revealed non-result record
  std::optional<DataObject> left;
  std::optional<DataObject> right;
  std::vector<Inner> inner;
  RangeProof proof;
};

/// Proof over a directory tree of group records.
struct DirectoryVO {
  std::optional<GroupRecord> left;
  std::optional<GroupRecord> right;
  std::vector<GroupRecord> inner;
  RangeProof proof;
};

struct SegmentVO {
  TreeId tree;
  std::vector<DirectoryVO> directories;
  std::vector<std::pair<std::uint64_t, TreeVO>> trees;  // (group, proof); group 0 for single indexes
};

struct QueryAnswer {
  std::vector<DataObject> result;  // sorted by the expression's result key
  std::vector<SegmentVO> vos;
};

struct VerifyOutcome {
  std::optional<Rejection> rejection;
  bool accepted() const { return !rejection; }
};

/// Answers `expr` from the SP's forest. `chain` supplies the objects the
/// forest's entries point to.
QueryAnswer run_query(const Forest& forest, const Chain& chain, const QueryExpr& expr);

/// Checks an answer against the board digests of the forest (all live
/// trees of that index, or the one tree named by expr.segment).
VerifyOutcome verify_answer(const QueryAnswer& answer, const QueryExpr& expr,
                            std::span<const DigestBoardEntry> digests);

/// Scan oracle over stream positions [first, end).
std::vector<DataObject> brute_force(const Chain& chain, std::uint64_t first, std::uint64_t end,
                                    const QueryExpr& expr);

/// Index kind an expression is answered from.
IndexKind required_index(const QueryExpr& expr);

}  // namespace chainq
