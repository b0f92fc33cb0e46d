#include "chainq/chain.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "chainq/errors.hpp"
#include "chainq/kernels.hpp"
#include "chainq/random.hpp"

namespace chainq {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class T>
T parse_number(std::string_view s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError(std::string("bad ") + what + " field: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    parts.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

}  // namespace

bool DataObject::has_keyword(std::uint32_t kw) const {
  return std::binary_search(keywords.begin(), keywords.end(), kw);
}

std::vector<std::uint8_t> encode(const DataObject& o) {
  std::vector<std::uint8_t> out;
  const std::uint32_t body = 8 + 8 + 4 + 4 + 4 + 4 * static_cast<std::uint32_t>(o.keywords.size());
  out.reserve(4 + body);
  put_u32(out, body);
  put_u64(out, o.id);
  put_u64(out, o.ts);
  put_u32(out, o.num_attr);
  put_u32(out, o.disc_attr);
  put_u32(out, static_cast<std::uint32_t>(o.keywords.size()));
  for (std::uint32_t kw : o.keywords) put_u32(out, kw);
  return out;
}

Hash object_hash(const DataObject& o) { return sha256(std::span<const std::uint8_t>(encode(o))); }

std::vector<Hash> object_hashes(std::span<const DataObject> objects) {
  std::vector<std::vector<std::uint8_t>> encoded;
  encoded.reserve(objects.size());
  std::vector<kernels::ByteView> views;
  views.reserve(objects.size());
  for (const DataObject& o : objects) {
    encoded.push_back(encode(o));
    views.emplace_back(encoded.back());
  }
  std::vector<Hash> out(objects.size());
  kernels::sha256_batch(views, out);
  return out;
}

Hash compute_header_hash(std::uint64_t height, const Hash& prev_hash, std::span<const Hash> object_hashes) {
  std::vector<std::uint8_t> prefix;
  put_u64(prefix, height);
  put_u64(prefix, object_hashes.size());
  Sha256 h;
  h.update(prefix).update(prev_hash);
  for (const Hash& oh : object_hashes) h.update(oh);
  return h.finalize();
}

void Chain::append_block(std::vector<DataObject> objects) {
  if (!objects_.empty() && !objects.empty() && objects.front().ts < objects_.back().ts) {
    throw ConfigError("block timestamps must not go backwards");
  }
  for (std::size_t i = 1; i < objects.size(); ++i) {
    if (objects[i].ts < objects[i - 1].ts) throw ConfigError("timestamps must be non-decreasing within a block");
  }
  BlockHeader hdr;
  hdr.height = headers_.size();
  hdr.first_position = objects_.size();
  hdr.object_count = objects.size();
  hdr.prev_hash = headers_.empty() ? Hash{} : headers_.back().header_hash;
  std::vector<Hash> hs = object_hashes(objects);
  hdr.header_hash = compute_header_hash(hdr.height, hdr.prev_hash, hs);
  for (DataObject& o : objects) {
    ts_.push_back(o.ts);
    num_.push_back(o.num_attr);
    disc_.push_back(o.disc_attr);
    objects_.push_back(std::move(o));
  }
  hashes_.insert(hashes_.end(), hs.begin(), hs.end());
  headers_.push_back(hdr);
}

Block Chain::block(std::uint64_t height) const {
  const BlockHeader& h = headers_.at(height);
  return Block{h.height, std::span<const DataObject>(objects_).subspan(h.first_position, h.object_count),
               h.header_hash};
}

std::uint64_t Chain::height_of(std::uint64_t position) const {
  if (position >= objects_.size()) throw AuditError("stream position beyond chain end");
  auto it = std::upper_bound(headers_.begin(), headers_.end(), position,
                             [](std::uint64_t p, const BlockHeader& h) { return p < h.first_position; });
  // Skip empty blocks sharing the same first position.
  --it;
  while (it->object_count == 0) --it;
  return it->height;
}

std::pair<std::uint64_t, std::uint64_t> Chain::positions(const BlockRange& range) const {
  if (range.first > range.last || range.last >= headers_.size()) {
    throw AuditError("block range [" + std::to_string(range.first) + ", " + std::to_string(range.last) +
                     "] is not on the chain");
  }
  const BlockHeader& a = headers_[range.first];
  const BlockHeader& b = headers_[range.last];
  return {a.first_position, b.first_position + b.object_count};
}

bool Chain::verify_headers() const {
  Hash prev{};
  for (const BlockHeader& h : headers_) {
    if (h.prev_hash != prev) return false;
    auto hs = std::span<const Hash>(hashes_).subspan(h.first_position, h.object_count);
    if (compute_header_hash(h.height, prev, hs) != h.header_hash) return false;
    prev = h.header_hash;
  }
  return true;
}

std::vector<std::uint64_t> Chain::block_sizes() const {
  std::vector<std::uint64_t> s;
  for (const auto& h : headers_) s.push_back(h.object_count);
  return s;
}

Chain generate_chain(const ChainParams& p) {
  if (p.n_blocks == 0 || p.objects_per_block == 0) throw ConfigError("block and object counts must be positive");
  if (p.keyword_universe < 20) throw ConfigError("keyword universe must be at least 20");
  if (p.disc_cardinality == 0) throw ConfigError("discrete cardinality must be positive");
  Rng rng(p.seed);
  Chain chain;
  std::uint64_t next = 0;
  for (std::uint64_t b = 0; b < p.n_blocks; ++b) {
    std::vector<DataObject> objects;
    objects.reserve(p.objects_per_block);
    for (std::uint64_t i = 0; i < p.objects_per_block; ++i, ++next) {
      DataObject o;
      o.id = next;
      o.ts = next;
      o.num_attr = static_cast<std::uint32_t>(uniform_below(rng, kNumAttrMax + 1));
      o.disc_attr = static_cast<std::uint32_t>(uniform_below(rng, p.disc_cardinality));
      const std::uint64_t n_kw = uniform_between(rng, 2, 20);
      for (std::uint64_t kw : sample_distinct(rng, n_kw, p.keyword_universe)) {
        o.keywords.push_back(static_cast<std::uint32_t>(kw));
      }
      objects.push_back(std::move(o));
    }
    chain.append_block(std::move(objects));
  }
  return chain;
}

void write_chain(std::ostream& out, const Chain& chain) {
  for (const BlockHeader& h : chain.headers()) {
    for (const DataObject& o : chain.block(h.height).objects) {
      out << h.height << ',' << o.id << ',' << o.ts << ',' << o.num_attr << ',' << o.disc_attr << ',';
      for (std::size_t i = 0; i < o.keywords.size(); ++i) out << (i ? " " : "") << o.keywords[i];
      out << '\n';
    }
  }
}

Chain read_chain(std::istream& in) {
  Chain chain;
  std::vector<DataObject> pending;
  std::uint64_t pending_height = 0;
  std::string line;
  std::size_t line_no = 0;
  auto flush_until = [&](std::uint64_t height) {
    // Blocks without objects have no lines; recreate them as empty.
    while (chain.block_count() < height) {
      if (chain.block_count() == pending_height && !pending.empty()) {
        chain.append_block(std::move(pending));
        pending.clear();
      } else {
        chain.append_block({});
      }
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw FormatError("chain line " + std::to_string(line_no) + ": expected 6 fields");
    const auto height = parse_number<std::uint64_t>(f[0], "height");
    if (height < pending_height) throw FormatError("chain line " + std::to_string(line_no) + ": height goes back");
    if (height != pending_height) {
      flush_until(pending_height + 1);
      flush_until(height);
      pending_height = height;
    }
    DataObject o;
    o.id = parse_number<std::uint64_t>(f[1], "id");
    o.ts = parse_number<std::uint64_t>(f[2], "ts");
    o.num_attr = parse_number<std::uint32_t>(f[3], "num_attr");
    o.disc_attr = parse_number<std::uint32_t>(f[4], "disc_attr");
    if (!f[5].empty()) {
      for (auto kw : split(f[5], ' ')) o.keywords.push_back(parse_number<std::uint32_t>(kw, "keyword"));
    }
    if (!std::is_sorted(o.keywords.begin(), o.keywords.end()) ||
        std::adjacent_find(o.keywords.begin(), o.keywords.end()) != o.keywords.end()) {
      throw FormatError("chain line " + std::to_string(line_no) + ": keywords must be sorted and distinct");
    }
    pending.push_back(std::move(o));
  }
  if (!pending.empty()) flush_until(pending_height + 1);
  return chain;
}

void save_chain(const std::filesystem::path& path, const Chain& chain) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_chain(out, chain);
  if (!out) throw IoError("write failed: " + path.string());
}

Chain load_chain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_chain(in);
}

// ---------------------------------------------------------------------------

std::string_view index_name(IndexKind kind) {
  switch (kind) {
    case IndexKind::timestamp: return "ts";
    case IndexKind::numeric: return "num";
    case IndexKind::composite: return "composite";
    case IndexKind::keyword: return "keyword";
    case IndexKind::discrete: return "disc";
  }
  return "?";
}

IndexKind parse_index_kind(std::string_view name) {
  for (IndexKind k : {IndexKind::timestamp, IndexKind::numeric, IndexKind::composite, IndexKind::keyword,
                      IndexKind::discrete}) {
    if (index_name(k) == name) return k;
  }
  if (name == "timestamp") return IndexKind::timestamp;
  if (name == "numeric") return IndexKind::numeric;
  if (name == "discrete") return IndexKind::discrete;
  throw ConfigError("unknown index kind '" + std::string(name) + "'");
}

std::string TreeId::str() const { return std::string(index_name(kind)) + ":" + std::to_string(segment); }

TreeId TreeId::parse(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) throw FormatError("tree id must look like kind:segment");
  return TreeId{parse_index_kind(s.substr(0, colon)), parse_number<std::uint32_t>(s.substr(colon + 1), "segment")};
}

std::size_t DigestBoard::publish(const DigestBoardEntry& e) {
  if (e.sp_id.empty() || e.sp_id.find(',') != std::string::npos) throw BoardRejection("malformed sp id");
  if (e.block_range.first > e.block_range.last) throw BoardRejection("inverted block range");
  const auto key = std::make_pair(e.sp_id, e.tree_id);
  if (auto it = live_.find(key); it != live_.end()) {
    const DigestBoardEntry& old = entries_[it->second];
    if (e.block_range.first != old.block_range.first || e.block_range.last < old.block_range.last) {
      throw BoardRejection("update of " + e.tree_id.str() + " does not extend its published range");
    }
  }
  for (const auto& [k, pos] : live_) {
    if (k.first != e.sp_id || k.second.kind != e.tree_id.kind || k.second == e.tree_id) continue;
    const BlockRange& r = entries_[pos].block_range;
    const bool before = k.second.segment < e.tree_id.segment;
    // Consecutive trees may share the rollover block.
    const bool ok = before ? (r.last < e.block_range.first ||
                              (k.second.segment + 1 == e.tree_id.segment && r.last == e.block_range.first))
                           : (e.block_range.last < r.first ||
                              (e.tree_id.segment + 1 == k.second.segment && e.block_range.last == r.first));
    if (!ok) {
      throw BoardRejection("block range of " + e.tree_id.str() + " overlaps live tree " + k.second.str() +
                           " of " + e.sp_id);
    }
  }
  entries_.push_back(e);
  live_[key] = entries_.size() - 1;
  return entries_.size() - 1;
}

std::optional<DigestBoardEntry> DigestBoard::live(const std::string& sp_id, const TreeId& tree) const {
  auto it = live_.find({sp_id, tree});
  if (it == live_.end()) return std::nullopt;
  return entries_[it->second];
}

std::vector<DigestBoardEntry> DigestBoard::live_entries(const std::string& sp_id, IndexKind kind) const {
  std::vector<DigestBoardEntry> out;
  for (const auto& [k, pos] : live_) {
    if (k.first == sp_id && k.second.kind == kind) out.push_back(entries_[pos]);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.tree_id.segment < b.tree_id.segment; });
  return out;
}

void DigestBoard::write_csv(std::ostream& out) const {
  out << "sp_id,tree_id,first,last,root_hash,hash_sum,count\n";
  for (const auto& e : entries_) {
    out << e.sp_id << ',' << e.tree_id.str() << ',' << e.block_range.first << ',' << e.block_range.last << ','
        << to_hex(e.root_hash) << ',' << e.hash_sum.hex() << ',' << e.object_count << '\n';
  }
}

DigestBoard DigestBoard::read_csv(std::istream& in) {
  DigestBoard board;
  std::string line;
  if (!std::getline(in, line) || line != "sp_id,tree_id,first,last,root_hash,hash_sum,count") {
    throw FormatError("board csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw FormatError("board csv: expected 7 fields");
    DigestBoardEntry e;
    e.sp_id = std::string(f[0]);
    e.tree_id = TreeId::parse(f[1]);
    e.block_range = {parse_number<std::uint64_t>(f[2], "first"), parse_number<std::uint64_t>(f[3], "last")};
    e.root_hash = hash_from_hex(f[4]);
    e.hash_sum = U256::from_hex(f[5]);
    e.object_count = parse_number<std::uint64_t>(f[6], "count");
    board.publish(e);
  }
  return board;
}

bool audit_positions(const Chain& chain, std::uint64_t first, std::uint64_t count, const U256& claimed) {
  if (first + count > chain.object_count()) throw AuditError("audited positions beyond chain end");
  return kernels::sum_hashes(chain.hashes().subspan(first, count)) == claimed;
}

bool audit_hash_sum(const Chain& chain, const BlockRange& range, const U256& claimed) {
  const auto [first, end] = chain.positions(range);
  return audit_positions(chain, first, end - first, claimed);
}

}  // namespace chainq
