#include "chainq/forest.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "chainq/detail/bytes.hpp"
#include "chainq/errors.hpp"
#include "chainq/kernels.hpp"

namespace chainq {

bool is_grouped(IndexKind kind) { return kind == IndexKind::composite || kind == IndexKind::keyword; }

std::uint64_t index_value(IndexKind kind, const DataObject& o) {
  switch (kind) {
    case IndexKind::timestamp: return o.ts;
    case IndexKind::discrete: return o.disc_attr;
    case IndexKind::numeric:
    case IndexKind::composite:
    case IndexKind::keyword: return o.num_attr;
  }
  return 0;
}

std::vector<std::uint64_t> object_groups(IndexKind kind, const DataObject& o) {
  if (kind == IndexKind::composite) return {o.disc_attr};
  if (kind == IndexKind::keyword) return {o.keywords.begin(), o.keywords.end()};
  return {};
}

std::uint64_t multiplicity(IndexKind kind, const DataObject& o) {
  return kind == IndexKind::keyword ? o.keywords.size() : 1;
}

Hash record_hash(const GroupRecord& r) {
  detail::ByteWriter w;
  w.u64(r.group);
  w.hash(r.root);
  w.u256(r.sum);
  w.u64(r.count);
  const std::string& b = w.bytes();
  return sha256(std::string_view(b));
}

namespace {

LeafEntry record_entry(const GroupRecord& r) { return LeafEntry{group_key(r.group), record_hash(r), r.sum, r.group}; }

BlockRange blocks_of(const Chain& chain, std::uint64_t first, std::uint64_t end) {
  return {chain.height_of(first), chain.height_of(end - 1)};
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> segment_positions(const Chain& chain, std::uint32_t segment,
                                                          std::uint64_t last_block, std::uint64_t maxsize) {
  if (maxsize == 0) throw ConfigError("maxsize must be positive");
  if (last_block >= chain.block_count()) throw AuditError("digest refers to a block beyond the chain");
  const std::uint64_t first = static_cast<std::uint64_t>(segment) * maxsize;
  const std::uint64_t chain_end = chain.positions({last_block, last_block}).second;
  const std::uint64_t end = std::min(first + maxsize, chain_end);
  if (first >= end) throw AuditError("segment has no objects up to the digest's last block");
  return {first, end};
}

Forest::Forest(IndexKind kind, ForestParams params) : kind_(kind), params_(params) {
  if (params.fanout < 2) throw ConfigError("fanout must be at least 2");
  if (params.maxsize == 0) throw ConfigError("maxsize must be positive");
}

Forest Forest::build(const Chain& chain, IndexKind kind, ForestParams params, const FaultSet& faults,
                     std::uint64_t end) {
  Forest f(kind, params);
  if (end > chain.object_count()) throw BuildError("build end beyond chain");
  const auto objects = chain.objects();
  const auto hashes = chain.hashes();
  std::vector<std::uint64_t> omitted = faults.omitted;
  std::sort(omitted.begin(), omitted.end());
  std::unordered_map<std::uint64_t, std::uint64_t> placed(faults.misplaced.begin(), faults.misplaced.end());
  auto is_omitted = [&](std::uint64_t p) { return std::binary_search(omitted.begin(), omitted.end(), p); };
  const bool grouped = is_grouped(kind);

  for (std::uint64_t first = 0, s = 0; first < end; first += params.maxsize, ++s) {
    Segment seg;
    seg.id = TreeId{kind, static_cast<std::uint32_t>(s)};
    seg.first = first;
    seg.end = std::min(end, first + params.maxsize);
    seg.blocks = blocks_of(chain, seg.first, seg.end);
    seg.sealed = seg.end - seg.first == params.maxsize;

    auto o_begin = std::lower_bound(omitted.begin(), omitted.end(), seg.first);
    auto o_end = std::lower_bound(omitted.begin(), omitted.end(), seg.end);
    const auto seg_omitted = std::span<const std::uint64_t>(omitted).subspan(
        static_cast<std::size_t>(o_begin - omitted.begin()), static_cast<std::size_t>(o_end - o_begin));
    const bool forging = faults.forge_sums && !seg_omitted.empty();

    auto entry_for = [&](std::uint64_t p, bool honest) {
      const DataObject& o = objects[p];
      std::uint64_t v = index_value(kind, o);
      if (!honest) {
        if (auto it = placed.find(p); it != placed.end()) v = it->second;
      }
      return object_entry({v, o.id}, hashes[p], p);
    };

    std::uint64_t honest_count = 0;
    std::uint64_t actual_count = 0;
    if (!grouped) {
      std::vector<LeafEntry> honest;
      std::vector<LeafEntry> actual;
      for (std::uint64_t p = seg.first; p < seg.end; ++p) {
        if (forging) honest.push_back(entry_for(p, true));
        if (!is_omitted(p)) actual.push_back(entry_for(p, false));
      }
      honest_count = seg.end - seg.first;
      actual_count = actual.size();
      seg.tree = forging ? MbTree::forge(std::move(honest), seg_omitted, params.fanout, faults.forge_level)
                         : MbTree::bulk_load(std::move(actual), params.fanout);
    } else {
      std::map<std::uint64_t, std::vector<LeafEntry>> honest;
      std::map<std::uint64_t, std::vector<LeafEntry>> actual;
      std::set<std::uint64_t> touched;
      for (std::uint64_t p = seg.first; p < seg.end; ++p) {
        const bool gone = is_omitted(p);
        for (std::uint64_t g : object_groups(kind, objects[p])) {
          ++honest_count;
          if (forging) honest[g].push_back(entry_for(p, true));
          if (gone) {
            touched.insert(g);
          } else {
            actual[g].push_back(entry_for(p, false));
            ++actual_count;
          }
        }
      }
      if (forging) {
        for (auto& [g, entries] : honest) {
          if (touched.count(g)) {
            seg.groups.emplace(g, MbTree::forge(std::move(entries), seg_omitted, params.fanout, faults.forge_level));
          } else {
            seg.groups.emplace(g, MbTree::bulk_load(std::move(actual[g]), params.fanout));
          }
        }
      } else {
        for (auto& [g, entries] : actual) seg.groups.emplace(g, MbTree::bulk_load(std::move(entries), params.fanout));
      }
      f.refresh_directory(seg);
    }
    seg.claimed_count = faults.forge_sums ? honest_count : actual_count;
    f.segments_.push_back(std::move(seg));
  }
  f.indexed_ = end;
  return f;
}

void Forest::refresh_directory(Segment& seg) {
  std::vector<LeafEntry> records;
  records.reserve(seg.groups.size());
  for (const auto& [g, t] : seg.groups) {
    records.push_back(record_entry(GroupRecord{g, t.root_hash(), t.root_sum(), t.size()}));
  }
  seg.tree = MbTree::bulk_load(std::move(records), params_.fanout);
}

void Forest::seal(Segment& seg) {
  if (is_grouped(kind_)) {
    for (auto& [g, t] : seg.groups) t = MbTree::bulk_load(t.entries(), params_.fanout);
    refresh_directory(seg);
  } else {
    seg.tree = MbTree::bulk_load(seg.tree.entries(), params_.fanout);
  }
  seg.sealed = true;
}

std::vector<std::uint32_t> Forest::insert_batch(const Chain& chain, std::uint64_t end) {
  if (end > chain.object_count()) throw InsertionError("batch end beyond chain");
  if (end < indexed_) throw InsertionError("objects were already inserted");
  const auto objects = chain.objects();
  const auto hashes = chain.hashes();
  std::vector<std::uint32_t> changed;
  auto mark = [&](std::uint32_t s) {
    if (changed.empty() || changed.back() != s) changed.push_back(s);
  };
  for (std::uint64_t p = indexed_; p < end; ++p) {
    const DataObject& o = objects[p];
    if (!ids_.insert(o.id).second) throw InsertionError("duplicate object id " + std::to_string(o.id));
    const auto s = static_cast<std::uint32_t>(p / params_.maxsize);
    if (s == segments_.size()) {
      Segment seg;
      seg.id = TreeId{kind_, s};
      seg.first = seg.end = static_cast<std::uint64_t>(s) * params_.maxsize;
      seg.tree = MbTree(params_.fanout);
      segments_.push_back(std::move(seg));
    }
    Segment& seg = segments_[s];
    const LeafEntry e = object_entry(sort_key(kind_, o), hashes[p], p);
    if (is_grouped(kind_)) {
      for (std::uint64_t g : object_groups(kind_, o)) {
        seg.groups.try_emplace(g, params_.fanout).first->second.insert(e);
        ++seg.claimed_count;
      }
    } else {
      seg.tree.insert(e);
      ++seg.claimed_count;
    }
    seg.end = p + 1;
    mark(s);
    if (seg.end - seg.first == params_.maxsize) {
      seal(seg);
      seg.blocks = blocks_of(chain, seg.first, seg.end);
    }
  }
  for (std::uint32_t s : changed) {
    Segment& seg = segments_[s];
    if (seg.sealed) continue;
    if (is_grouped(kind_)) {
      for (auto& [g, t] : seg.groups) t.refresh();
      refresh_directory(seg);
    } else {
      seg.tree.refresh();
    }
    seg.blocks = blocks_of(chain, seg.first, seg.end);
  }
  indexed_ = end;
  return changed;
}

Forest Forest::restore(IndexKind kind, ForestParams params, std::vector<Segment> segments) {
  Forest f(kind, params);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].id != TreeId{kind, static_cast<std::uint32_t>(i)}) throw FormatError("segments out of order");
    if (segments[i].first != i * params.maxsize) throw FormatError("segment does not start at its slot");
    f.indexed_ = segments[i].end;
  }
  f.segments_ = std::move(segments);
  return f;
}

void write_segment(std::ostream& out, const Segment& seg) {
  detail::ByteWriter w;
  w.u32(0x53454731);  // "SEG1"
  w.u8(static_cast<std::uint8_t>(seg.id.kind));
  w.u32(seg.id.segment);
  w.u64(seg.first);
  w.u64(seg.end);
  w.u64(seg.blocks.first);
  w.u64(seg.blocks.last);
  w.u64(seg.claimed_count);
  w.u8(seg.sealed ? 1 : 0);
  w.u64(seg.groups.size());
  detail::write_record(out, w.bytes());
  seg.tree.write(out);
  for (const auto& [g, t] : seg.groups) {
    w.clear();
    w.u64(g);
    detail::write_record(out, w.bytes());
    t.write(out);
  }
}

Segment read_segment(std::istream& in) {
  const std::string head = detail::read_record(in);
  detail::ByteReader r(head);
  if (r.u32() != 0x53454731) throw FormatError("not a segment file");
  Segment seg;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(IndexKind::discrete)) throw FormatError("unknown index kind in segment");
  seg.id.kind = static_cast<IndexKind>(kind);
  seg.id.segment = r.u32();
  seg.first = r.u64();
  seg.end = r.u64();
  seg.blocks.first = r.u64();
  seg.blocks.last = r.u64();
  seg.claimed_count = r.u64();
  seg.sealed = r.u8() != 0;
  const std::uint64_t n_groups = r.u64();
  seg.tree = MbTree::read(in);
  for (std::uint64_t i = 0; i < n_groups; ++i) {
    const std::string gh = detail::read_record(in);
    detail::ByteReader gr(gh);
    const std::uint64_t g = gr.u64();
    seg.groups.emplace(g, MbTree::read(in));
  }
  return seg;
}

DigestBoardEntry Forest::digest(std::uint32_t segment, const std::string& sp_id) const {
  const Segment& seg = segments_.at(segment);
  return DigestBoardEntry{sp_id, seg.id, seg.blocks, seg.tree.root_hash(), seg.tree.root_sum(), seg.claimed_count};
}

std::vector<DigestBoardEntry> Forest::digests(const std::string& sp_id) const {
  std::vector<DigestBoardEntry> out;
  for (std::uint32_t s = 0; s < segments_.size(); ++s) out.push_back(digest(s, sp_id));
  return out;
}

bool audit_digest(const Chain& chain, const DigestBoardEntry& entry, std::uint64_t maxsize) {
  const auto [first, end] = segment_positions(chain, entry.tree_id.segment, entry.block_range.last, maxsize);
  if (chain.height_of(first) != entry.block_range.first) return false;
  const IndexKind kind = entry.tree_id.kind;
  if (kind != IndexKind::keyword) {
    return entry.object_count == end - first && audit_positions(chain, first, end - first, entry.hash_sum);
  }
  U256 sum;
  std::uint64_t count = 0;
  const auto objects = chain.objects();
  const auto hashes = chain.hashes();
  for (std::uint64_t p = first; p < end; ++p) {
    const U256 h = U256::from_be_bytes(hashes[p]);
    for (std::uint64_t m = multiplicity(kind, objects[p]); m > 0; --m) sum += h;
    count += multiplicity(kind, objects[p]);
  }
  return count == entry.object_count && sum == entry.hash_sum;
}

}  // namespace chainq
