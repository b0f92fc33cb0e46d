#include "chainq/mbtree.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "chainq/detail/bytes.hpp"
#include "chainq/errors.hpp"
#include "chainq/kernels.hpp"

namespace chainq {

namespace {

constexpr std::uint32_t kMaxProofDepth = 64;

bool entry_less(const LeafEntry& a, const LeafEntry& b) { return a.key < b.key; }

}  // namespace

LeafEntry object_entry(SortKey key, const Hash& h, std::uint64_t payload) {
  return LeafEntry{key, h, U256::from_be_bytes(h), payload};
}

std::string_view reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::root_mismatch: return "root_mismatch";
    case RejectReason::not_adjacent: return "not_adjacent";
    case RejectReason::boundary_violation: return "boundary_violation";
    case RejectReason::unsound_result: return "unsound_result";
    case RejectReason::missing_commitment: return "missing_commitment";
    case RejectReason::coverage_gap: return "coverage_gap";
    case RejectReason::malformed: return "malformed";
    case RejectReason::result_mismatch: return "result_mismatch";
    case RejectReason::unresponsive: return "unresponsive";
  }
  return "?";
}

bool operator==(const ProofItem& a, const ProofItem& b) {
  return a.kind == b.kind && a.hash == b.hash && a.sum == b.sum && a.child == b.child;
}
bool operator==(const ProofNode& a, const ProofNode& b) { return a.leaf == b.leaf && a.items == b.items; }
bool operator==(const RangeProof& a, const RangeProof& b) { return a.nodes == b.nodes; }

std::size_t RangeProof::pruned_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) {
    for (const auto& item : node.items) {
      n += item.kind == ProofItem::Kind::pruned_node || item.kind == ProofItem::Kind::pruned_entry;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Verifier side

namespace {

struct Replayer {
  const RangeProof& proof;
  std::span<const RevealedEntry> revealed;
  EntrySums mode;
  std::size_t next_node = 1;
  std::size_t cursor = 0;
  std::string tokens;  // 'P' pruned, 'R' revealed, in key order
  std::optional<Rejection> error;

  void fail(std::string detail) {
    if (!error) error = Rejection{RejectReason::malformed, std::move(detail)};
  }

  std::pair<Hash, U256> node(std::size_t idx, std::uint32_t depth) {
    if (depth > kMaxProofDepth) {
      fail("proof deeper than any valid tree");
      return {};
    }
    const ProofNode& pn = proof.nodes[idx];
    if (pn.items.empty()) {
      fail("proof node without items");
      return {};
    }
    std::vector<Hash> hashes;
    hashes.reserve(pn.items.size());
    U256 sum;
    for (const ProofItem& item : pn.items) {
      if (error) return {};
      using K = ProofItem::Kind;
      if (pn.leaf) {
        if (item.kind == K::pruned_entry) {
          tokens.push_back('P');
          hashes.push_back(item.hash);
          sum += mode == EntrySums::from_hash ? U256::from_be_bytes(item.hash) : item.sum;
        } else if (item.kind == K::revealed) {
          if (cursor >= revealed.size()) {
            fail("more revealed slots than revealed records");
            return {};
          }
          const RevealedEntry& e = revealed[cursor++];
          tokens.push_back('R');
          hashes.push_back(e.hash);
          sum += mode == EntrySums::from_hash ? U256::from_be_bytes(e.hash) : e.sum;
        } else {
          fail("leaf proof node with a node item");
          return {};
        }
      } else {
        if (item.kind == K::pruned_node) {
          tokens.push_back('P');
          hashes.push_back(item.hash);
          sum += item.sum;
        } else if (item.kind == K::expanded) {
          if (item.child != next_node || item.child >= proof.nodes.size()) {
            fail("proof nodes out of preorder");
            return {};
          }
          ++next_node;
          auto [h, s] = node(item.child, depth + 1);
          hashes.push_back(h);
          sum += s;
        } else {
          fail("internal proof node with an entry item");
          return {};
        }
      }
    }
    Sha256 sha;
    sha.update(sum);
    for (const Hash& h : hashes) sha.update(h);
    return {sha.finalize(), sum};
  }
};

}  // namespace

ReplayResult replay_range_proof(const RangeProof& proof, std::span<const RevealedEntry> revealed,
                                const KeyRange& range, bool has_left, bool has_right, EntrySums mode,
                                const Hash& expected_root, const U256& expected_sum) {
  ReplayResult out;
  auto reject = [&](RejectReason r, std::string detail) {
    out.rejection = Rejection{r, std::move(detail)};
    return out;
  };
  if (proof.nodes.empty()) return reject(RejectReason::malformed, "empty proof");
  if (range.hi < range.lo) return reject(RejectReason::malformed, "inverted query range");

  Replayer rp{proof, revealed, mode, 1, 0, {}, std::nullopt};
  auto [root, sum] = rp.node(0, 0);
  if (!rp.error && rp.next_node != proof.nodes.size()) rp.fail("unreferenced proof nodes");
  if (!rp.error && rp.cursor != revealed.size()) rp.fail("revealed records without proof slots");
  if (rp.error) {
    out.rejection = rp.error;
    return out;
  }
  out.root = root;
  out.sum = sum;
  if (root != expected_root) return reject(RejectReason::root_mismatch, "recomputed root differs from the digest");
  if (sum != expected_sum) return reject(RejectReason::root_mismatch, "recomputed hash sum differs from the digest");

  const std::string& t = rp.tokens;
  const auto first_r = t.find('R');
  if (first_r == std::string::npos) return reject(RejectReason::malformed, "proof reveals nothing");
  const auto last_r = t.rfind('R');
  if (t.find('P', first_r) < last_r) {
    return reject(RejectReason::not_adjacent, "revealed records are not adjacent leaf entries");
  }
  if (!has_left && first_r != 0) {
    return reject(RejectReason::boundary_violation, "no left boundary but entries precede the result");
  }
  if (!has_right && last_r != t.size() - 1) {
    return reject(RejectReason::boundary_violation, "no right boundary but entries follow the result");
  }
  const std::size_t n = revealed.size();
  if (n < static_cast<std::size_t>(has_left) + static_cast<std::size_t>(has_right)) {
    return reject(RejectReason::malformed, "boundary records missing");
  }
  if (has_left && !(revealed.front().key < range.lo)) {
    return reject(RejectReason::boundary_violation, "left boundary is not below the range");
  }
  if (has_right && !(range.hi < revealed.back().key)) {
    return reject(RejectReason::boundary_violation, "right boundary is not above the range");
  }
  for (std::size_t i = has_left ? 1 : 0; i + (has_right ? 1 : 0) < n; ++i) {
    if (!range.contains(revealed[i].key)) return reject(RejectReason::unsound_result, "record outside the range");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(revealed[i - 1].key < revealed[i].key)) {
      return reject(RejectReason::unsound_result, "revealed records are out of key order");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tree

MbTree::MbTree(std::uint32_t fanout) : fanout_(fanout) {
  if (fanout < 2) throw ConfigError("fanout must be at least 2");
}

const Hash& MbTree::root_hash() const {
  if (empty()) throw QueryError("empty tree has no root");
  return nodes_[root_].hash;
}

const U256& MbTree::root_sum() const {
  if (empty()) throw QueryError("empty tree has no root");
  return nodes_[root_].sum;
}

std::uint32_t MbTree::new_node(bool leaf, std::uint32_t level) {
  Node n;
  n.leaf = leaf;
  n.level = level;
  nodes_.push_back(std::move(n));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

void MbTree::update_summary(std::uint32_t idx) {
  Node& n = nodes_[idx];
  U256 sum;
  std::uint64_t count = 0;
  if (n.leaf) {
    for (const LeafEntry& e : n.entries) sum += e.sum;
    count = n.entries.size();
    if (!n.entries.empty()) n.min_key = n.entries.front().key;
  } else {
    for (std::uint32_t c : n.children) {
      sum += nodes_[c].sum;
      count += nodes_[c].count;
    }
    if (!n.children.empty()) n.min_key = nodes_[n.children.front()].min_key;
  }
  n.count = count;
  if (!n.forged) n.sum = sum;
}

void MbTree::hash_nodes(std::span<const std::uint32_t> idxs) {
  std::vector<std::string> messages(idxs.size());
  std::vector<kernels::ByteView> views(idxs.size());
  for (std::size_t i = 0; i < idxs.size(); ++i) {
    const Node& n = nodes_[idxs[i]];
    std::string& m = messages[i];
    const Hash s = n.sum.to_be_bytes();
    m.reserve(32 * (1 + (n.leaf ? n.entries.size() : n.children.size())));
    m.append(reinterpret_cast<const char*>(s.data()), 32);
    if (n.leaf) {
      for (const LeafEntry& e : n.entries) m.append(reinterpret_cast<const char*>(e.hash.data()), 32);
    } else {
      for (std::uint32_t c : n.children) m.append(reinterpret_cast<const char*>(nodes_[c].hash.data()), 32);
    }
    views[i] = kernels::ByteView(reinterpret_cast<const std::uint8_t*>(m.data()), m.size());
  }
  std::vector<Hash> out(idxs.size());
  kernels::sha256_batch(views, out);
  for (std::size_t i = 0; i < idxs.size(); ++i) {
    nodes_[idxs[i]].hash = out[i];
    nodes_[idxs[i]].dirty = false;
  }
}

void MbTree::build_levels(std::vector<std::uint32_t> level_nodes) {
  for (std::uint32_t i : level_nodes) update_summary(i);
  hash_nodes(level_nodes);
  std::uint32_t level = 0;
  while (level_nodes.size() > 1) {
    ++level;
    std::vector<std::uint32_t> parents;
    for (std::size_t i = 0; i < level_nodes.size(); i += fanout_) {
      const std::uint32_t p = new_node(false, level);
      const std::size_t end = std::min(level_nodes.size(), i + fanout_);
      nodes_[p].children.assign(level_nodes.begin() + static_cast<std::ptrdiff_t>(i),
                                level_nodes.begin() + static_cast<std::ptrdiff_t>(end));
      update_summary(p);
      parents.push_back(p);
    }
    hash_nodes(parents);
    level_nodes = std::move(parents);
  }
  root_ = level_nodes.front();
}

MbTree MbTree::bulk_load(std::vector<LeafEntry> entries, std::uint32_t fanout) {
  if (entries.empty()) throw BuildError("cannot build a tree over no objects");
  std::sort(entries.begin(), entries.end(), entry_less);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].key == entries[i - 1].key) throw BuildError("duplicate sort key in tree input");
  }
  MbTree t(fanout);
  t.nodes_.reserve(entries.size() / fanout * 2 + 4);
  std::vector<std::uint32_t> leaves;
  for (std::size_t i = 0; i < entries.size(); i += fanout) {
    const std::uint32_t l = t.new_node(true, 0);
    const std::size_t end = std::min(entries.size(), i + fanout);
    t.nodes_[l].entries.assign(std::make_move_iterator(entries.begin() + static_cast<std::ptrdiff_t>(i)),
                               std::make_move_iterator(entries.begin() + static_cast<std::ptrdiff_t>(end)));
    leaves.push_back(l);
  }
  t.build_levels(std::move(leaves));
  return t;
}

MbTree MbTree::from_leaves(std::vector<std::vector<LeafEntry>> leaves, std::uint32_t fanout) {
  if (leaves.empty()) throw BuildError("cannot build a tree over no leaves");
  MbTree t(fanout);
  const LeafEntry* prev = nullptr;
  std::vector<std::uint32_t> idxs;
  for (auto& leaf : leaves) {
    if (leaf.empty() || leaf.size() > fanout) throw BuildError("leaf size must be in [1, fanout]");
    const std::uint32_t l = t.new_node(true, 0);
    t.nodes_[l].entries = std::move(leaf);
    for (const LeafEntry& e : t.nodes_[l].entries) {
      if (prev && !(prev->key < e.key)) throw BuildError("leaves are not in strictly increasing key order");
      prev = &e;
    }
    idxs.push_back(l);
  }
  t.build_levels(std::move(idxs));
  return t;
}

MbTree MbTree::forge(std::vector<LeafEntry> honest, std::span<const std::uint64_t> omitted_payloads,
                     std::uint32_t fanout, std::uint32_t forge_level) {
  MbTree t = bulk_load(std::move(honest), fanout);
  std::vector<std::uint64_t> omitted(omitted_payloads.begin(), omitted_payloads.end());
  std::sort(omitted.begin(), omitted.end());
  const std::uint32_t top = t.nodes_[t.root_].level;
  forge_level = std::min(forge_level, top);

  // Nodes were created level by level, so one pass in creation order visits
  // children before parents.
  std::vector<char> touched(t.nodes_.size(), 0);
  for (std::uint32_t i = 0; i < t.nodes_.size(); ++i) {
    Node& n = t.nodes_[i];
    if (n.leaf) {
      const auto before = n.entries.size();
      std::erase_if(n.entries, [&](const LeafEntry& e) {
        return std::binary_search(omitted.begin(), omitted.end(), e.payload);
      });
      touched[i] = n.entries.size() != before;
    } else {
      for (std::uint32_t c : n.children) touched[i] |= touched[c];
    }
    if (touched[i] && n.level == forge_level) n.forged = true;
  }
  std::vector<std::vector<std::uint32_t>> by_level(top + 1);
  for (std::uint32_t i = 0; i < t.nodes_.size(); ++i) by_level[t.nodes_[i].level].push_back(i);
  for (auto& lvl : by_level) {
    for (std::uint32_t i : lvl) t.update_summary(i);
    t.hash_nodes(lvl);
  }
  return t;
}

std::size_t MbTree::forged_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.forged; }));
}

void MbTree::insert(const LeafEntry& e) {
  if (empty()) {
    root_ = new_node(true, 0);
    nodes_[root_].entries.push_back(e);
    nodes_[root_].min_key = e.key;
    nodes_[root_].count = 1;
    return;
  }
  if (auto split = insert_rec(root_, e)) {
    const std::uint32_t old = root_;
    const std::uint32_t r = new_node(false, nodes_[old].level + 1);
    nodes_[r].children = {old, *split};
    update_summary(r);
    root_ = r;
  }
}

std::optional<std::uint32_t> MbTree::insert_rec(std::uint32_t idx, const LeafEntry& e) {
  nodes_[idx].dirty = true;
  if (nodes_[idx].leaf) {
    auto& entries = nodes_[idx].entries;
    auto it = std::lower_bound(entries.begin(), entries.end(), e, entry_less);
    if (it != entries.end() && it->key == e.key) throw InsertionError("duplicate sort key");
    entries.insert(it, e);
    update_summary(idx);
    if (entries.size() <= fanout_) return std::nullopt;
    const std::uint32_t right = new_node(true, 0);
    auto& left_entries = nodes_[idx].entries;
    const std::size_t keep = (left_entries.size() + 1) / 2;
    nodes_[right].entries.assign(left_entries.begin() + static_cast<std::ptrdiff_t>(keep), left_entries.end());
    left_entries.resize(keep);
    update_summary(idx);
    update_summary(right);
    return right;
  }
  const auto& ch = nodes_[idx].children;
  std::size_t c = 0;
  while (c + 1 < ch.size() && !(e.key < nodes_[ch[c + 1]].min_key)) ++c;
  const auto split = insert_rec(ch[c], e);
  if (split) {
    auto& children = nodes_[idx].children;
    children.insert(children.begin() + static_cast<std::ptrdiff_t>(c + 1), *split);
  }
  update_summary(idx);
  if (nodes_[idx].children.size() <= fanout_) return std::nullopt;
  const std::uint32_t right = new_node(false, nodes_[idx].level);
  auto& left_children = nodes_[idx].children;
  const std::size_t keep = (left_children.size() + 1) / 2;
  nodes_[right].children.assign(left_children.begin() + static_cast<std::ptrdiff_t>(keep), left_children.end());
  left_children.resize(keep);
  update_summary(idx);
  update_summary(right);
  return right;
}

void MbTree::refresh() {
  if (empty()) return;
  std::vector<std::vector<std::uint32_t>> by_level(nodes_[root_].level + 1);
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    const std::uint32_t i = stack.back();
    stack.pop_back();
    const Node& n = nodes_[i];
    if (!n.dirty) continue;
    by_level[n.level].push_back(i);
    for (std::uint32_t c : n.children) stack.push_back(c);
  }
  for (auto& lvl : by_level) {
    for (std::uint32_t i : lvl) update_summary(i);
    hash_nodes(lvl);
  }
}

std::vector<LeafEntry> MbTree::entries() const {
  std::vector<LeafEntry> out;
  if (empty()) return out;
  out.reserve(size());
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (n.leaf) {
      out.insert(out.end(), n.entries.begin(), n.entries.end());
    } else {
      for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

std::uint64_t MbTree::count_below(const SortKey& k) const {
  if (empty()) return 0;
  std::uint64_t acc = 0;
  std::uint32_t idx = root_;
  while (!nodes_[idx].leaf) {
    const auto& ch = nodes_[idx].children;
    std::size_t c = 0;
    while (c < ch.size() && nodes_[ch[c]].min_key < k) ++c;
    if (c == 0) return acc;
    for (std::size_t j = 0; j + 1 < c; ++j) acc += nodes_[ch[j]].count;
    idx = ch[c - 1];
  }
  const auto& es = nodes_[idx].entries;
  acc += static_cast<std::uint64_t>(
      std::lower_bound(es.begin(), es.end(), k, [](const LeafEntry& e, const SortKey& key) { return e.key < key; }) -
      es.begin());
  return acc;
}

std::uint64_t MbTree::count_at_most(const SortKey& k) const {
  if (empty()) return 0;
  std::uint64_t acc = 0;
  std::uint32_t idx = root_;
  while (!nodes_[idx].leaf) {
    const auto& ch = nodes_[idx].children;
    std::size_t c = 0;
    while (c < ch.size() && !(k < nodes_[ch[c]].min_key)) ++c;
    if (c == 0) return acc;
    for (std::size_t j = 0; j + 1 < c; ++j) acc += nodes_[ch[j]].count;
    idx = ch[c - 1];
  }
  const auto& es = nodes_[idx].entries;
  acc += static_cast<std::uint64_t>(
      std::upper_bound(es.begin(), es.end(), k, [](const SortKey& key, const LeafEntry& e) { return key < e.key; }) -
      es.begin());
  return acc;
}

RangeProofResult MbTree::prove(const KeyRange& range) const {
  if (empty()) throw QueryError("cannot prove against an empty tree");
  if (range.hi < range.lo) throw QueryError("inverted query range");
  const std::uint64_t n = size();
  const std::uint64_t lb = count_below(range.lo);
  const std::uint64_t ub = count_at_most(range.hi);
  RangeProofResult out;
  if (n == 0) {
    // Only a forged tree can be empty; reveal nothing.
    prove_rec(root_, 0, 1, 0, out);
    return out;
  }
  out.has_left = lb > 0;
  out.has_right = ub < n;
  const std::uint64_t a = out.has_left ? lb - 1 : lb;
  const std::uint64_t b = out.has_right ? ub : ub - 1;
  prove_rec(root_, 0, a, b, out);
  return out;
}

void MbTree::prove_rec(std::uint32_t idx, std::uint64_t base, std::uint64_t a, std::uint64_t b,
                       RangeProofResult& out) const {
  const Node& n = nodes_[idx];
  const std::size_t self = out.proof.nodes.size();
  out.proof.nodes.emplace_back();
  std::vector<ProofItem> items;
  if (n.leaf) {
    items.reserve(n.entries.size());
    for (std::size_t j = 0; j < n.entries.size(); ++j) {
      const std::uint64_t ord = base + j;
      const LeafEntry& e = n.entries[j];
      if (ord >= a && ord <= b) {
        items.push_back({ProofItem::Kind::revealed, {}, {}, 0});
        out.revealed.push_back(e);
      } else {
        items.push_back({ProofItem::Kind::pruned_entry, e.hash, e.sum, 0});
      }
    }
  } else {
    items.reserve(n.children.size());
    std::uint64_t cb = base;
    for (std::uint32_t c : n.children) {
      const Node& child = nodes_[c];
      const std::uint64_t ce = cb + child.count;  // [cb, ce)
      if (child.count > 0 && cb <= b && ce > a) {
        const auto child_pos = static_cast<std::uint32_t>(out.proof.nodes.size());
        items.push_back({ProofItem::Kind::expanded, {}, {}, child_pos});
        prove_rec(c, cb, a, b, out);
      } else {
        items.push_back({ProofItem::Kind::pruned_node, child.hash, child.sum, 0});
      }
      cb = ce;
    }
  }
  out.proof.nodes[self].leaf = n.leaf;
  out.proof.nodes[self].items = std::move(items);
}

bool MbTree::self_consistent() const {
  if (empty()) return true;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    const std::uint32_t i = stack.back();
    stack.pop_back();
    order.push_back(i);
    for (std::uint32_t c : nodes_[i].children) stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node& n = nodes_[*it];
    U256 sum;
    Sha256 sha;
    std::uint64_t count = 0;
    if (n.leaf) {
      for (const LeafEntry& e : n.entries) sum += e.sum;
      count = n.entries.size();
      for (std::size_t j = 1; j < n.entries.size(); ++j) {
        if (!(n.entries[j - 1].key < n.entries[j].key)) return false;
      }
    } else {
      for (std::uint32_t c : n.children) {
        sum += nodes_[c].sum;
        count += nodes_[c].count;
      }
    }
    if (sum != n.sum || count != n.count) return false;
    sha.update(sum);
    if (n.leaf) {
      for (const LeafEntry& e : n.entries) sha.update(e.hash);
    } else {
      for (std::uint32_t c : n.children) sha.update(nodes_[c].hash);
    }
    if (sha.finalize() != n.hash) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Binary format: see docs/formats.md.

void MbTree::write(std::ostream& out) const {
  detail::ByteWriter head;
  head.u32(0x4D425431);  // "MBT1"
  head.u32(fanout_);
  std::vector<std::uint32_t> order;
  if (!empty()) {
    std::vector<std::uint32_t> stack{root_};
    while (!stack.empty()) {
      const std::uint32_t i = stack.back();
      stack.pop_back();
      order.push_back(i);
      const auto& ch = nodes_[i].children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
  }
  head.u64(order.size());
  detail::write_record(out, head.bytes());
  detail::ByteWriter w;
  for (std::uint32_t i : order) {
    const Node& n = nodes_[i];
    w.clear();
    w.u8(n.leaf ? 1 : 0);
    w.u8(n.forged ? 1 : 0);
    w.u32(n.level);
    w.u32(static_cast<std::uint32_t>(n.leaf ? n.entries.size() : n.children.size()));
    w.u256(n.sum);
    w.u64(n.min_key.key);
    w.u64(n.min_key.id);
    for (const LeafEntry& e : n.entries) {
      w.u64(e.key.key);
      w.u64(e.key.id);
      w.hash(e.hash);
      w.u256(e.sum);
      w.u64(e.payload);
    }
    detail::write_record(out, w.bytes());
  }
}

MbTree MbTree::read(std::istream& in) {
  const std::string head_bytes = detail::read_record(in);
  detail::ByteReader head(head_bytes);
  if (head.u32() != 0x4D425431) throw FormatError("not a tree file");
  MbTree t(head.u32());
  const std::uint64_t count = head.u64();
  if (count == 0) return t;
  t.nodes_.reserve(count);

  // Rebuild from preorder: each record carries its child count.
  struct Frame {
    std::uint32_t idx;
    std::uint32_t remaining;
  };
  std::vector<Frame> stack;
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::string rec = detail::read_record(in);
    detail::ByteReader r(rec);
    const bool leaf = r.u8() != 0;
    const bool forged = r.u8() != 0;
    const std::uint32_t level = r.u32();
    const std::uint32_t n_items = r.u32();
    const std::uint32_t i = t.new_node(leaf, level);
    Node& n = t.nodes_[i];
    n.forged = forged;
    n.sum = r.u256();
    n.min_key.key = r.u64();
    n.min_key.id = r.u64();
    if (leaf) {
      n.entries.resize(n_items);
      for (LeafEntry& e : n.entries) {
        e.key.key = r.u64();
        e.key.id = r.u64();
        e.hash = r.hash();
        e.sum = r.u256();
        e.payload = r.u64();
      }
    }
    if (!r.done()) throw FormatError("trailing bytes in tree node record");
    if (stack.empty()) {
      if (k != 0) throw FormatError("tree file has more than one root");
      t.root_ = i;
    } else {
      Frame& parent = stack.back();
      if (t.nodes_[parent.idx].level != level + 1) throw FormatError("tree levels are inconsistent");
      t.nodes_[parent.idx].children.push_back(i);
      --parent.remaining;
    }
    if (!leaf && n_items > 0) {
      stack.push_back({i, n_items});
    } else {
      if (!leaf) throw FormatError("internal node without children");
      while (!stack.empty() && stack.back().remaining == 0) stack.pop_back();
    }
    // Pop completed ancestors after attaching a leaf subtree.
    while (!stack.empty() && stack.back().remaining == 0) stack.pop_back();
  }
  if (!stack.empty()) throw FormatError("tree file ends inside a node");
  std::vector<std::vector<std::uint32_t>> by_level(t.nodes_[t.root_].level + 1);
  for (std::uint32_t i = 0; i < t.nodes_.size(); ++i) {
    if (t.nodes_[i].level >= by_level.size()) throw FormatError("node level above root");
    by_level[t.nodes_[i].level].push_back(i);
  }
  for (auto& lvl : by_level) {
    for (std::uint32_t i : lvl) {
      Node& n = t.nodes_[i];
      const U256 stored = n.sum;
      const SortKey stored_min = n.min_key;
      t.update_summary(i);
      if (n.leaf && n.entries.empty()) n.min_key = stored_min;
      if (!n.forged && n.sum != stored) throw FormatError("stored node sum does not match its children");
      n.sum = stored;
    }
    t.hash_nodes(lvl);
  }
  return t;
}

}  // namespace chainq
