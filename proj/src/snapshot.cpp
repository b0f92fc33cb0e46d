#include "chainq/snapshot.hpp"

#include <array>
#include <fstream>

#include "chainq/codec.hpp"
#include "chainq/errors.hpp"

namespace chainq {

namespace fs = std::filesystem;

namespace {

fs::path tree_path(const fs::path& dir, IndexKind kind, std::uint32_t segment) {
  return dir / "trees" / (std::string(index_name(kind)) + "-" + std::to_string(segment) + ".bin");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return in;
}

}  // namespace

void save_snapshot(const fs::path& dir, const Chain& chain, const ServiceProvider& sp, const DigestBoard& board,
                   const std::vector<IndexKind>& kinds, const std::string& label) {
  std::error_code ec;
  fs::create_directories(dir / "trees", ec);
  if (ec) throw IoError("cannot create " + (dir / "trees").string() + ": " + ec.message());
  for (const auto& old : fs::directory_iterator(dir / "trees")) fs::remove(old.path());

  save_chain(dir / "chain.txt", chain);
  {
    auto out = open_out(dir / "board.csv");
    board.write_csv(out);
  }
  Json kind_names = Json::array();
  for (IndexKind k : kinds) {
    kind_names.push_back(index_name(k));
    for (const Segment& seg : sp.forest(k).segments()) {
      auto out = open_out(tree_path(dir, k, seg.id.segment));
      write_segment(out, seg);
      if (!out) throw IoError("write failed: " + tree_path(dir, k, seg.id.segment).string());
    }
  }
  const Json meta = {{"format", "chainq-snapshot-1"},
                     {"sp_id", sp.sp_id()},
                     {"fanout", sp.params().fanout},
                     {"maxsize", sp.params().maxsize},
                     {"kinds", kind_names},
                     {"label", label},
                     {"drop_ids", sp.drop_ids}};
  open_out(dir / "meta.json") << meta.dump(2) << '\n';
  open_out(dir / "faults.json") << to_json(sp.faults()).dump(2) << '\n';
}

Snapshot load_snapshot(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("no snapshot at " + dir.string());
  Json meta;
  Json faults_json;
  try {
    auto m = open_in(dir / "meta.json");
    meta = Json::parse(m);
    auto f = open_in(dir / "faults.json");
    faults_json = Json::parse(f);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad snapshot metadata: ") + e.what());
  }
  if (meta.value("format", "") != "chainq-snapshot-1") throw FormatError("unknown snapshot format");

  Snapshot s;
  s.chain = std::make_unique<Chain>(load_chain(dir / "chain.txt"));
  {
    auto in = open_in(dir / "board.csv");
    s.board = DigestBoard::read_csv(in);
  }
  ForestParams params;
  params.fanout = meta.at("fanout").get<std::uint32_t>();
  params.maxsize = meta.at("maxsize").get<std::uint64_t>();
  s.label = meta.value("label", "");
  s.sp = std::make_unique<ServiceProvider>(meta.at("sp_id").get<std::string>(), *s.chain, params,
                                           faults_from_json(faults_json));
  s.sp->drop_ids = meta.value("drop_ids", std::vector<std::uint64_t>{});
  for (const Json& jk : meta.at("kinds")) {
    const IndexKind k = parse_index_kind(jk.get<std::string>());
    s.kinds.push_back(k);
    std::vector<Segment> segs;
    for (std::uint32_t i = 0; fs::exists(tree_path(dir, k, i)); ++i) {
      auto in = open_in(tree_path(dir, k, i));
      segs.push_back(read_segment(in));
    }
    s.sp->adopt(Forest::restore(k, params, std::move(segs)));
  }
  return s;
}

// ---------------------------------------------------------------------------

Fixture make_example_fixture(char variant) {
  std::vector<std::vector<std::uint64_t>> leaves;
  if (variant == 'a') {
    leaves = {{1, 2, 3}, {4, 6}, {7, 8}, {9, 10, 12}, {14, 19}, {21, 23}};
  } else if (variant == 'b') {
    leaves = {{1, 2, 3}, {4, 6}, {7, 8, 9}, {10, 12}, {14, 19}, {21, 23}};
  } else {
    throw ConfigError("fixture variant must be 'a' or 'b'");
  }
  Fixture fx;
  fx.chain = std::make_unique<Chain>();
  std::vector<DataObject> objects;
  for (const auto& leaf : leaves) {
    for (std::uint64_t v : leaf) {
      DataObject o;
      o.id = v;
      o.ts = objects.size();
      o.num_attr = static_cast<std::uint32_t>(v);
      o.keywords = {1, 2};
      objects.push_back(o);
    }
  }
  fx.chain->append_block(objects);

  std::vector<std::vector<LeafEntry>> entries;
  std::uint64_t pos = 0;
  for (const auto& leaf : leaves) {
    auto& group = entries.emplace_back();
    for (std::size_t i = 0; i < leaf.size(); ++i, ++pos) {
      group.push_back(object_entry(sort_key(IndexKind::numeric, objects[pos]), fx.chain->hashes()[pos], pos));
    }
  }
  const ForestParams params{3, 1000};
  Segment seg;
  seg.id = TreeId{IndexKind::numeric, 0};
  seg.first = 0;
  seg.end = objects.size();
  seg.blocks = {0, 0};
  seg.tree = MbTree::from_leaves(std::move(entries), params.fanout);
  seg.claimed_count = objects.size();
  std::vector<Segment> segs;
  segs.push_back(std::move(seg));

  fx.sp = std::make_unique<ServiceProvider>("fixture", *fx.chain, params);
  fx.sp->adopt(Forest::restore(IndexKind::numeric, params, std::move(segs)));
  fx.sp->publish(fx.board);

  const char* names[] = {"A", "B", "C", "D", "E", "F", "G", "H", "Root"};
  for (std::uint32_t i = 0; i < 9; ++i) fx.labels[names[i]] = i;
  if (fx.sp->forest(IndexKind::numeric).segment(0).tree.root_index() != fx.labels["Root"]) {
    throw BuildError("fixture tree has an unexpected shape");
  }
  return fx;
}

std::vector<std::uint64_t> binary_example_leaves() { return {2, 5, 14, 25, 10, 19, 31, 45}; }

Hash binary_example_leaf_hash(std::uint64_t value) {
  std::array<std::uint8_t, 8> be{};
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
  return sha256(be);
}

}  // namespace chainq
