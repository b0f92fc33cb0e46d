#include "chainq/codec.hpp"

#include "chainq/errors.hpp"

namespace chainq {

namespace {

Json key_json(const SortKey& k) { return Json::array({k.key, k.id}); }

SortKey key_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("sort key must be [key, id]");
  return {j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint64_t>()};
}

Json record_json(const GroupRecord& r) {
  return {{"group", r.group}, {"root", to_hex(r.root)}, {"sum", r.sum.hex()}, {"count", r.count}};
}

GroupRecord record_from(const Json& j) {
  return GroupRecord{j.at("group").get<std::uint64_t>(), hash_from_hex(j.at("root").get<std::string>()),
                     U256::from_hex(j.at("sum").get<std::string>()), j.at("count").get<std::uint64_t>()};
}

Json proof_json(const RangeProof& p) {
  Json nodes = Json::array();
  for (const ProofNode& n : p.nodes) {
    Json items = Json::array();
    for (const ProofItem& it : n.items) {
      switch (it.kind) {
        case ProofItem::Kind::pruned_node:
          items.push_back({{"t", "node"}, {"h", to_hex(it.hash)}, {"s", it.sum.hex()}});
          break;
        case ProofItem::Kind::pruned_entry:
          items.push_back({{"t", "entry"}, {"h", to_hex(it.hash)}, {"s", it.sum.hex()}});
          break;
        case ProofItem::Kind::expanded: items.push_back({{"t", "expand"}, {"c", it.child}}); break;
        case ProofItem::Kind::revealed: items.push_back({{"t", "reveal"}}); break;
      }
    }
    nodes.push_back({{"leaf", n.leaf}, {"items", std::move(items)}});
  }
  return nodes;
}

RangeProof proof_from(const Json& j) {
  RangeProof p;
  for (const Json& jn : j) {
    ProofNode n;
    n.leaf = jn.at("leaf").get<bool>();
    for (const Json& ji : jn.at("items")) {
      ProofItem it;
      const std::string t = ji.at("t").get<std::string>();
      if (t == "node" || t == "entry") {
        it.kind = t == "node" ? ProofItem::Kind::pruned_node : ProofItem::Kind::pruned_entry;
        it.hash = hash_from_hex(ji.at("h").get<std::string>());
        it.sum = U256::from_hex(ji.at("s").get<std::string>());
      } else if (t == "expand") {
        it.kind = ProofItem::Kind::expanded;
        it.child = ji.at("c").get<std::uint32_t>();
      } else if (t == "reveal") {
        it.kind = ProofItem::Kind::revealed;
      } else {
        throw FormatError("unknown proof item type '" + t + "'");
      }
      n.items.push_back(std::move(it));
    }
    p.nodes.push_back(std::move(n));
  }
  return p;
}

template <class T, class F>
Json opt_json(const std::optional<T>& v, F f) {
  return v ? f(*v) : Json(nullptr);
}

}  // namespace

Json to_json(const DataObject& o) {
  return {{"id", o.id}, {"ts", o.ts}, {"num", o.num_attr}, {"disc", o.disc_attr}, {"kw", o.keywords}};
}

DataObject object_from_json(const Json& j) {
  DataObject o;
  o.id = j.at("id").get<std::uint64_t>();
  o.ts = j.at("ts").get<std::uint64_t>();
  o.num_attr = j.at("num").get<std::uint32_t>();
  o.disc_attr = j.at("disc").get<std::uint32_t>();
  o.keywords = j.at("kw").get<std::vector<std::uint32_t>>();
  return o;
}

Json to_json(const QueryExpr& e) {
  Json j = {{"kind", query_kind_name(e.kind)},
            {"index", index_name(e.index)},
            {"lo", key_json(e.range.lo)},
            {"hi", key_json(e.range.hi)}};
  if (e.kind == QueryKind::multidim) j["groups"] = Json::array({e.group_lo, e.group_hi});
  if (!e.keywords.empty()) j["keywords"] = e.keywords;
  if (e.segment) j["segment"] = *e.segment;
  return j;
}

QueryExpr expr_from_json(const Json& j) {
  try {
    QueryExpr e;
    e.kind = parse_query_kind(j.at("kind").get<std::string>());
    e.index = parse_index_kind(j.at("index").get<std::string>());
    e.range = {key_from(j.at("lo")), key_from(j.at("hi"))};
    if (j.contains("groups")) {
      e.group_lo = j["groups"].at(0).get<std::uint64_t>();
      e.group_hi = j["groups"].at(1).get<std::uint64_t>();
    }
    if (j.contains("keywords")) e.keywords = j["keywords"].get<std::vector<std::uint32_t>>();
    if (j.contains("segment")) e.segment = j["segment"].get<std::uint32_t>();
    return e;
  } catch (const Json::exception& ex) {
    throw FormatError(std::string("bad query expression: ") + ex.what());
  }
}

Json to_json(const QueryAnswer& a) {
  Json result = Json::array();
  for (const DataObject& o : a.result) result.push_back(to_json(o));
  Json vos = Json::array();
  for (const SegmentVO& s : a.vos) {
    Json dirs = Json::array();
    for (const DirectoryVO& d : s.directories) {
      Json inner = Json::array();
      for (const GroupRecord& r : d.inner) inner.push_back(record_json(r));
      dirs.push_back({{"left", opt_json(d.left, record_json)},
                      {"right", opt_json(d.right, record_json)},
                      {"inner", std::move(inner)},
                      {"proof", proof_json(d.proof)}});
    }
    Json trees = Json::array();
    for (const auto& [g, t] : s.trees) {
      Json inner = Json::array();
      for (const auto& ref : t.inner) {
        if (const auto* idx = std::get_if<std::uint32_t>(&ref)) {
          inner.push_back({{"result", *idx}});
        } else {
          inner.push_back({{"extra", to_json(std::get<DataObject>(ref))}});
        }
      }
      auto obj = [](const DataObject& o) { return to_json(o); };
      trees.push_back({{"group", g},
                       {"left", opt_json(t.left, obj)},
                       {"right", opt_json(t.right, obj)},
                       {"inner", std::move(inner)},
                       {"proof", proof_json(t.proof)}});
    }
    vos.push_back({{"tree", s.tree.str()}, {"directories", std::move(dirs)}, {"trees", std::move(trees)}});
  }
  return {{"format", "chainq-answer-1"}, {"result", std::move(result)}, {"vos", std::move(vos)}};
}

QueryAnswer answer_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "chainq-answer-1") throw FormatError("unknown answer format");
    QueryAnswer a;
    for (const Json& o : j.at("result")) a.result.push_back(object_from_json(o));
    for (const Json& js : j.at("vos")) {
      SegmentVO s;
      s.tree = TreeId::parse(js.at("tree").get<std::string>());
      for (const Json& jd : js.at("directories")) {
        DirectoryVO d;
        if (!jd.at("left").is_null()) d.left = record_from(jd["left"]);
        if (!jd.at("right").is_null()) d.right = record_from(jd["right"]);
        for (const Json& r : jd.at("inner")) d.inner.push_back(record_from(r));
        d.proof = proof_from(jd.at("proof"));
        s.directories.push_back(std::move(d));
      }
      for (const Json& jt : js.at("trees")) {
        TreeVO t;
        if (!jt.at("left").is_null()) t.left = object_from_json(jt["left"]);
        if (!jt.at("right").is_null()) t.right = object_from_json(jt["right"]);
        for (const Json& r : jt.at("inner")) {
          if (r.contains("result")) {
            t.inner.emplace_back(r["result"].get<std::uint32_t>());
          } else {
            t.inner.emplace_back(object_from_json(r.at("extra")));
          }
        }
        t.proof = proof_from(jt.at("proof"));
        s.trees.emplace_back(jt.at("group").get<std::uint64_t>(), std::move(t));
      }
      a.vos.push_back(std::move(s));
    }
    return a;
  } catch (const Json::exception& ex) {
    throw FormatError(std::string("bad answer envelope: ") + ex.what());
  }
}

Json to_json(const DetectingToken& t) {
  Json ranges = Json::array();
  for (std::size_t i = 0; i < t.ranges.size(); ++i) {
    ranges.push_back({{"lo", key_json(t.ranges[i].lo)}, {"hi", key_json(t.ranges[i].hi)}, {"volume", t.volumes[i]}});
  }
  return {{"index", index_name(t.index)},
          {"segment", t.segment},
          {"ranges", std::move(ranges)},
          {"expected_total", t.expected_total},
          {"nonce", t.nonce}};
}

Json to_json(const ChallengeVerdict& v) {
  Json j = {{"sp_id", v.sp_id},
            {"token", to_json(v.token)},
            {"responded", v.responded},
            {"result_correct", v.result_correct},
            {"proof_valid", v.proof_valid},
            {"verdict", v.accepted() ? "accept" : "reject"}};
  if (v.rejection) j["reason"] = {{"code", reason_name(v.rejection->reason)}, {"detail", v.rejection->detail}};
  return j;
}

Json to_json(const FaultSet& f) {
  Json misplaced = Json::array();
  for (const auto& [p, v] : f.misplaced) misplaced.push_back(Json::array({p, v}));
  return {{"omitted", f.omitted}, {"misplaced", misplaced}, {"forge_sums", f.forge_sums}, {"forge_level", f.forge_level}};
}

FaultSet faults_from_json(const Json& j) {
  try {
    FaultSet f;
    f.omitted = j.at("omitted").get<std::vector<std::uint64_t>>();
    for (const Json& m : j.at("misplaced")) f.misplaced.emplace_back(m.at(0).get<std::uint64_t>(), m.at(1).get<std::uint64_t>());
    f.forge_sums = j.at("forge_sums").get<bool>();
    f.forge_level = j.at("forge_level").get<std::uint32_t>();
    return f;
  } catch (const Json::exception& ex) {
    throw FormatError(std::string("bad fault set: ") + ex.what());
  }
}

}  // namespace chainq
