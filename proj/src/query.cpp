#include "chainq/query.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "chainq/errors.hpp"

namespace chainq {

std::string_view query_kind_name(QueryKind k) {
  switch (k) {
    case QueryKind::range: return "range";
    case QueryKind::object: return "object";
    case QueryKind::multidim: return "multidim";
    case QueryKind::keyword: return "keyword";
    case QueryKind::keyword_range: return "keyword_range";
  }
  return "?";
}

QueryKind parse_query_kind(std::string_view name) {
  for (QueryKind k : {QueryKind::range, QueryKind::object, QueryKind::multidim, QueryKind::keyword,
                      QueryKind::keyword_range}) {
    if (query_kind_name(k) == name) return k;
  }
  throw QueryError("unknown query kind '" + std::string(name) + "'");
}

QueryExpr QueryExpr::range_query(IndexKind index, std::uint64_t lo, std::uint64_t hi) {
  QueryExpr e;
  e.kind = QueryKind::range;
  e.index = index;
  e.range = KeyRange::values(lo, hi);
  return e;
}

QueryExpr QueryExpr::object_query(IndexKind index, std::uint64_t value) {
  QueryExpr e = range_query(index, value, value);
  e.kind = QueryKind::object;
  return e;
}

QueryExpr QueryExpr::multidim(std::uint64_t disc_lo, std::uint64_t disc_hi, std::uint64_t num_lo,
                              std::uint64_t num_hi) {
  QueryExpr e = range_query(IndexKind::composite, num_lo, num_hi);
  e.kind = QueryKind::multidim;
  e.group_lo = disc_lo;
  e.group_hi = disc_hi;
  return e;
}

QueryExpr QueryExpr::keyword_query(std::vector<std::uint32_t> keywords) {
  QueryExpr e;
  e.kind = QueryKind::keyword;
  e.index = IndexKind::keyword;
  std::sort(keywords.begin(), keywords.end());
  keywords.erase(std::unique(keywords.begin(), keywords.end()), keywords.end());
  e.keywords = std::move(keywords);
  return e;
}

QueryExpr QueryExpr::keyword_range(std::vector<std::uint32_t> keywords, std::uint64_t num_lo, std::uint64_t num_hi) {
  QueryExpr e = keyword_query(std::move(keywords));
  e.kind = QueryKind::keyword_range;
  e.range = KeyRange::values(num_lo, num_hi);
  return e;
}

IndexKind required_index(const QueryExpr& expr) {
  switch (expr.kind) {
    case QueryKind::multidim: return IndexKind::composite;
    case QueryKind::keyword:
    case QueryKind::keyword_range: return IndexKind::keyword;
    default: return expr.index;
  }
}

void QueryExpr::validate() const {
  if (range.hi < range.lo) throw QueryError("query lower bound exceeds upper bound");
  switch (kind) {
    case QueryKind::object:
      if (range.lo.key != range.hi.key) throw QueryError("object query needs equal bounds");
      [[fallthrough]];
    case QueryKind::range:
      if (is_grouped(index)) throw QueryError("range queries run on the ts, num or disc index");
      break;
    case QueryKind::multidim:
      if (index != IndexKind::composite) throw QueryError("multidim queries run on the composite index");
      if (group_hi < group_lo) throw QueryError("disc lower bound exceeds upper bound");
      break;
    case QueryKind::keyword:
    case QueryKind::keyword_range:
      if (index != IndexKind::keyword) throw QueryError("keyword queries run on the keyword index");
      if (keywords.empty()) throw QueryError("keyword query without keywords");
      for (std::size_t i = 1; i < keywords.size(); ++i) {
        if (keywords[i - 1] >= keywords[i]) throw QueryError("keywords must be sorted and distinct");
      }
      break;
  }
}

bool QueryExpr::matches(const DataObject& o) const {
  if (!range.contains(result_key(o))) return false;
  if (kind == QueryKind::multidim) return o.disc_attr >= group_lo && o.disc_attr <= group_hi;
  if (kind == QueryKind::keyword || kind == QueryKind::keyword_range) {
    return std::all_of(keywords.begin(), keywords.end(), [&](std::uint32_t w) { return o.has_keyword(w); });
  }
  return true;
}

std::vector<DataObject> brute_force(const Chain& chain, std::uint64_t first, std::uint64_t end,
                                    const QueryExpr& expr) {
  std::vector<DataObject> out;
  const auto objects = chain.objects();
  for (std::uint64_t p = first; p < end && p < objects.size(); ++p) {
    if (expr.matches(objects[p])) out.push_back(objects[p]);
  }
  std::sort(out.begin(), out.end(),
            [&](const DataObject& a, const DataObject& b) { return expr.result_key(a) < expr.result_key(b); });
  return out;
}

// ---------------------------------------------------------------------------
// SP side

namespace {

struct Builder {
  const Chain& chain;
  const QueryExpr& expr;
  std::vector<std::uint64_t> result_positions;

  template <class IsResult>
  TreeVO prove_tree(const MbTree& tree, IsResult is_result) {
    const auto objects = chain.objects();
    RangeProofResult r = tree.prove(expr.range);
    TreeVO vo;
    const std::size_t n = r.revealed.size();
    const std::size_t lo = r.has_left ? 1 : 0;
    const std::size_t hi = n - (r.has_right ? 1 : 0);
    if (r.has_left) vo.left = objects[r.revealed.front().payload];
    if (r.has_right) vo.right = objects[r.revealed.back().payload];
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t p = r.revealed[i].payload;
      if (is_result(objects[p])) {
        vo.inner.emplace_back(static_cast<std::uint32_t>(result_positions.size()));
        result_positions.push_back(p);
      } else {
        vo.inner.emplace_back(objects[p]);
      }
    }
    vo.proof = std::move(r.proof);
    return vo;
  }

  static DirectoryVO prove_directory(const Segment& seg, const KeyRange& range) {
    RangeProofResult r = seg.tree.prove(range);
    auto record = [&](const LeafEntry& e) {
      const MbTree& t = seg.groups.at(e.payload);
      return GroupRecord{e.payload, t.root_hash(), t.root_sum(), t.size()};
    };
    DirectoryVO vo;
    const std::size_t n = r.revealed.size();
    if (r.has_left) vo.left = record(r.revealed.front());
    if (r.has_right) vo.right = record(r.revealed.back());
    for (std::size_t i = r.has_left ? 1 : 0; i + (r.has_right ? 1 : 0) < n; ++i) vo.inner.push_back(record(r.revealed[i]));
    vo.proof = std::move(r.proof);
    return vo;
  }
};

}  // namespace

QueryAnswer run_query(const Forest& forest, const Chain& chain, const QueryExpr& expr) {
  expr.validate();
  if (required_index(expr) != forest.kind()) {
    throw QueryError(std::string(query_kind_name(expr.kind)) + " query cannot run on the " +
                     std::string(index_name(forest.kind())) + " index");
  }
  if (expr.segment && *expr.segment >= forest.segments().size()) throw QueryError("no such tree segment");

  Builder b{chain, expr, {}};
  QueryAnswer answer;
  auto all = [](const DataObject&) { return true; };
  for (const Segment& seg : forest.segments()) {
    if (expr.segment && seg.id.segment != *expr.segment) continue;
    SegmentVO svo;
    svo.tree = seg.id;
    switch (expr.kind) {
      case QueryKind::range:
      case QueryKind::object:
        svo.trees.emplace_back(0, b.prove_tree(seg.tree, all));
        break;
      case QueryKind::multidim: {
        DirectoryVO dir = Builder::prove_directory(seg, {group_key(expr.group_lo), group_key(expr.group_hi)});
        for (const GroupRecord& r : dir.inner) svo.trees.emplace_back(r.group, b.prove_tree(seg.groups.at(r.group), all));
        svo.directories.push_back(std::move(dir));
        break;
      }
      case QueryKind::keyword:
      case QueryKind::keyword_range: {
        bool all_present = true;
        std::uint64_t pivot = 0;
        std::uint64_t pivot_size = kU64Max;
        for (std::uint32_t w : expr.keywords) {
          DirectoryVO dir = Builder::prove_directory(seg, {group_key(w), group_key(w)});
          if (dir.inner.empty()) {
            all_present = false;
          } else if (dir.inner.front().count < pivot_size) {
            pivot = w;
            pivot_size = dir.inner.front().count;
          }
          svo.directories.push_back(std::move(dir));
        }
        if (all_present) {
          auto has_keywords = [&](const DataObject& o) {
            return std::all_of(expr.keywords.begin(), expr.keywords.end(),
                               [&](std::uint32_t w) { return o.has_keyword(w); });
          };
          svo.trees.emplace_back(pivot, b.prove_tree(seg.groups.at(pivot), has_keywords));
        }
        break;
      }
    }
    answer.vos.push_back(std::move(svo));
  }

  // Order results by the expression's key and rewrite the proof references.
  const auto objects = chain.objects();
  std::vector<std::uint32_t> order(b.result_positions.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return expr.result_key(objects[b.result_positions[x]]) < expr.result_key(objects[b.result_positions[y]]);
  });
  std::vector<std::uint32_t> rank(order.size());
  answer.result.reserve(order.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = r;
    answer.result.push_back(objects[b.result_positions[order[r]]]);
  }
  for (SegmentVO& svo : answer.vos) {
    for (auto& [g, tvo] : svo.trees) {
      for (auto& ref : tvo.inner) {
        if (auto* idx = std::get_if<std::uint32_t>(&ref)) *idx = rank[*idx];
      }
    }
  }
  return answer;
}

// ---------------------------------------------------------------------------
// Client side

namespace {

VerifyOutcome reject(RejectReason r, std::string detail) { return VerifyOutcome{Rejection{r, std::move(detail)}}; }

struct Checker {
  const QueryAnswer& answer;
  const QueryExpr& expr;
  IndexKind index;
  std::vector<char> used;

  template <class Member>
  VerifyOutcome tree(const TreeVO& vo, const Hash& root, const U256& sum, Member member, bool allow_extras) {
    std::vector<DataObject> objs;
    std::vector<char> is_result;
    objs.reserve(vo.inner.size() + 2);
    if (vo.left) objs.push_back(*vo.left), is_result.push_back(0);
    for (const auto& ref : vo.inner) {
      if (const auto* idx = std::get_if<std::uint32_t>(&ref)) {
        if (*idx >= answer.result.size()) return reject(RejectReason::malformed, "proof references a missing result");
        if (used[*idx]) return reject(RejectReason::malformed, "result record referenced twice");
        used[*idx] = 1;
        objs.push_back(answer.result[*idx]);
        is_result.push_back(1);
      } else {
        if (!allow_extras) return reject(RejectReason::malformed, "non-result record in a range proof");
        objs.push_back(std::get<DataObject>(ref));
        is_result.push_back(0);
      }
    }
    if (vo.right) objs.push_back(*vo.right), is_result.push_back(0);

    const std::vector<Hash> hashes = object_hashes(objs);
    std::vector<RevealedEntry> revealed(objs.size());
    for (std::size_t i = 0; i < objs.size(); ++i) {
      revealed[i] = RevealedEntry{sort_key(index, objs[i]), hashes[i], U256::from_be_bytes(hashes[i])};
    }
    const ReplayResult rr = replay_range_proof(vo.proof, revealed, expr.range, vo.left.has_value(),
                                               vo.right.has_value(), EntrySums::from_hash, root, sum);
    if (!rr.ok()) return VerifyOutcome{rr.rejection};
    const std::size_t lo = vo.left ? 1 : 0;
    const std::size_t hi = objs.size() - (vo.right ? 1 : 0);
    for (std::size_t i = 0; i < objs.size(); ++i) {
      if (!member(objs[i])) return reject(RejectReason::unsound_result, "record does not belong to the proven tree");
    }
    for (std::size_t i = lo; i < hi; ++i) {
      if (is_result[i] && !expr.matches(objs[i])) {
        return reject(RejectReason::unsound_result, "returned record does not satisfy the query");
      }
      if (!is_result[i] && expr.matches(objs[i])) {
        return reject(RejectReason::result_mismatch, "matching record withheld from the result");
      }
    }
    return {};
  }

  static VerifyOutcome directory(const DirectoryVO& vo, const KeyRange& range, const Hash& root, const U256& sum) {
    std::vector<RevealedEntry> revealed;
    auto add = [&](const GroupRecord& r) { revealed.push_back({group_key(r.group), record_hash(r), r.sum}); };
    if (vo.left) add(*vo.left);
    for (const GroupRecord& r : vo.inner) add(r);
    if (vo.right) add(*vo.right);
    const ReplayResult rr = replay_range_proof(vo.proof, revealed, range, vo.left.has_value(), vo.right.has_value(),
                                               EntrySums::explicit_, root, sum);
    return VerifyOutcome{rr.rejection};
  }
};

}  // namespace

VerifyOutcome verify_answer(const QueryAnswer& answer, const QueryExpr& expr,
                            std::span<const DigestBoardEntry> digests) {
  try {
    expr.validate();
  } catch (const QueryError& e) {
    return reject(RejectReason::malformed, e.what());
  }
  const IndexKind kind = required_index(expr);

  std::map<std::uint32_t, const DigestBoardEntry*> committed;
  for (const DigestBoardEntry& d : digests) {
    if (d.tree_id.kind != kind) continue;
    if (expr.segment && d.tree_id.segment != *expr.segment) continue;
    committed[d.tree_id.segment] = &d;
  }
  if (!expr.segment) {
    std::uint32_t expect = 0;
    for (const auto& [s, d] : committed) {
      if (s != expect++) return reject(RejectReason::coverage_gap, "published trees are not contiguous");
    }
  }
  std::map<std::uint32_t, const SegmentVO*> vos;
  for (const SegmentVO& svo : answer.vos) {
    if (svo.tree.kind != kind) return reject(RejectReason::malformed, "proof for a tree of another index");
    if (!committed.count(svo.tree.segment)) {
      return reject(RejectReason::missing_commitment, "no published digest for tree " + svo.tree.str());
    }
    if (!vos.emplace(svo.tree.segment, &svo).second) return reject(RejectReason::malformed, "tree proven twice");
  }
  for (const auto& [s, d] : committed) {
    if (!vos.count(s)) return reject(RejectReason::coverage_gap, "no proof for published tree " + d->tree_id.str());
  }
  for (std::size_t i = 1; i < answer.result.size(); ++i) {
    if (!(expr.result_key(answer.result[i - 1]) < expr.result_key(answer.result[i]))) {
      return reject(RejectReason::malformed, "result is not strictly ordered");
    }
  }

  Checker ck{answer, expr, kind, std::vector<char>(answer.result.size(), 0)};
  auto anyone = [](const DataObject&) { return true; };
  for (const auto& [s, svo] : vos) {
    const DigestBoardEntry& d = *committed.at(s);
    switch (expr.kind) {
      case QueryKind::range:
      case QueryKind::object: {
        if (!svo->directories.empty() || svo->trees.size() != 1 || svo->trees[0].first != 0) {
          return reject(RejectReason::malformed, "single-index proof must hold exactly one tree");
        }
        if (auto v = ck.tree(svo->trees[0].second, d.root_hash, d.hash_sum, anyone, false); !v.accepted()) return v;
        break;
      }
      case QueryKind::multidim: {
        if (svo->directories.size() != 1) return reject(RejectReason::malformed, "composite proof needs one directory");
        const DirectoryVO& dir = svo->directories[0];
        if (auto v = Checker::directory(dir, {group_key(expr.group_lo), group_key(expr.group_hi)}, d.root_hash,
                                        d.hash_sum);
            !v.accepted()) {
          return v;
        }
        if (svo->trees.size() != dir.inner.size()) return reject(RejectReason::coverage_gap, "group without proof");
        for (std::size_t i = 0; i < dir.inner.size(); ++i) {
          const GroupRecord& r = dir.inner[i];
          if (svo->trees[i].first != r.group) return reject(RejectReason::malformed, "group proofs out of order");
          auto in_group = [&](const DataObject& o) { return o.disc_attr == r.group; };
          if (auto v = ck.tree(svo->trees[i].second, r.root, r.sum, in_group, false); !v.accepted()) return v;
        }
        break;
      }
      case QueryKind::keyword:
      case QueryKind::keyword_range: {
        if (svo->directories.size() != expr.keywords.size()) {
          return reject(RejectReason::malformed, "keyword proof needs one directory proof per keyword");
        }
        bool all_present = true;
        for (std::size_t i = 0; i < expr.keywords.size(); ++i) {
          const std::uint64_t w = expr.keywords[i];
          const DirectoryVO& dir = svo->directories[i];
          if (auto v = Checker::directory(dir, {group_key(w), group_key(w)}, d.root_hash, d.hash_sum); !v.accepted()) {
            return v;
          }
          if (dir.inner.size() > 1) return reject(RejectReason::malformed, "keyword appears twice in directory");
          all_present = all_present && !dir.inner.empty();
        }
        if (!all_present) {
          if (!svo->trees.empty()) return reject(RejectReason::malformed, "tree proof for an absent keyword");
          break;
        }
        if (svo->trees.size() != 1) return reject(RejectReason::coverage_gap, "keyword proof without a posting tree");
        const std::uint64_t pivot = svo->trees[0].first;
        const auto it = std::find(expr.keywords.begin(), expr.keywords.end(), pivot);
        if (it == expr.keywords.end()) return reject(RejectReason::malformed, "posting tree of a foreign keyword");
        const GroupRecord& r = svo->directories[static_cast<std::size_t>(it - expr.keywords.begin())].inner.front();
        auto has_pivot = [&](const DataObject& o) { return o.has_keyword(static_cast<std::uint32_t>(pivot)); };
        if (auto v = ck.tree(svo->trees[0].second, r.root, r.sum, has_pivot, true); !v.accepted()) return v;
        break;
      }
    }
  }
  if (std::find(ck.used.begin(), ck.used.end(), 0) != ck.used.end()) {
    return reject(RejectReason::unsound_result, "result record without a proof");
  }
  return {};
}

}  // namespace chainq
