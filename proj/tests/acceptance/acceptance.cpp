// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status
// is the number of failures. Pass criterion numbers as arguments to run a
// subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chainq/adversary.hpp"
#include "chainq/bench.hpp"
#include "chainq/binary_merkle.hpp"
#include "chainq/challenge.hpp"
#include "chainq/query.hpp"
#include "chainq/random.hpp"
#include "chainq/snapshot.hpp"

using namespace chainq;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Notes {
 public:
  template <class... Args>
  void fail(Args&&... args) {
    pass_ = false;
    if (failures_++ < 8) {
      std::ostringstream s;
      (s << ... << args);
      lines_.push_back(s.str());
    }
  }
  Outcome done(const std::string& summary) const {
    std::string d = summary;
    for (const auto& l : lines_) d += "\n    " + l;
    if (failures_ > lines_.size()) d += "\n    ... " + std::to_string(failures_ - lines_.size()) + " more";
    return {pass_, d};
  }
  bool ok() const { return pass_; }

 private:
  bool pass_ = true;
  std::size_t failures_ = 0;
  std::vector<std::string> lines_;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::vector<std::uint64_t> sorted_ids(const std::vector<DataObject>& objs) {
  std::vector<std::uint64_t> ids;
  for (const auto& o : objs) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// 1: token sizing

Outcome token_sizing() {
  Notes n;
  if (token_size(0.01, 0.99) != 461) n.fail("token_size(0.01, 0.99) = ", token_size(0.01, 0.99));
  if (token_size(0.001, 0.99) != 4606) n.fail("token_size(0.001, 0.99) = ", token_size(0.001, 0.99));
  const double ks[] = {0.0002, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.3};
  const double pds[] = {0.5, 0.6, 0.75, 0.8, 0.9, 0.95, 0.99, 0.995, 0.999, 0.9999};
  int points = 0;
  for (double k : ks) {
    for (double pd : pds) {
      ++points;
      const auto size = static_cast<double>(token_size(k, pd));
      // The ceiling makes N the smallest count meeting the bound.
      if (!(attack_success(k, size) <= (1 - pd) * (1 + 1e-12))) n.fail("bound violated at k=", k, " pd=", pd);
      if (!(attack_success(k, size - 1) > 1 - pd)) n.fail("not minimal at k=", k, " pd=", pd);
    }
  }
  for (double lambda : {5.0, 10.0, 20.0, 40.0}) {
    for (double k : {0.001, 0.01}) {
      const auto size = static_cast<double>(token_size_lambda(k, lambda));
      if (!(attack_success(k, size) <= std::exp2(-lambda) * (1 + 1e-12))) n.fail("lambda bound at ", lambda);
      if (!(attack_success(k, size - 1) > std::exp2(-lambda))) n.fail("lambda size not minimal at ", lambda);
    }
  }
  return n.done("461 and 4606 exact; " + std::to_string(points) + "-point (k, P_d) grid inverts");
}

// ---------------------------------------------------------------------------
// 2: random-omission detection rate

Outcome detection_rate() {
  Notes n;
  constexpr std::uint64_t kObjects = 20'000;
  constexpr std::uint32_t kTrials = 300;
  const Chain chain = bench::make_chain(kObjects, 1'000, 400, 11);
  const double fractions[] = {0.005, 0.01, 0.02, 0.03, 0.05, 0.10, 0.15, 0.20};
  std::string table;
  double worst = 0;
  std::uint64_t point = 0;
  for (double k : {0.0005, 0.001}) {
    for (double f : fractions) {
      bench::DetectionPoint p;
      p.adversary.strategy = Strategy::random_omit;
      p.adversary.k = k;
      p.token_objects = static_cast<std::uint64_t>(std::llround(f * kObjects));
      p.n_ranges = bench::default_n_ranges(p.token_objects);
      p.trials = kTrials;
      p.seed = derive_seed(2024, ++point);
      const auto r = bench::run_detection_point(chain, p);
      const double a = 1 - std::exp(-k * static_cast<double>(p.token_objects));
      const double sigma = std::sqrt(a * (1 - a) / kTrials);
      const double z = std::abs(r.rate() - a) / sigma;
      worst = std::max(worst, z);
      table += "\n    k=" + fmt(k) + " N=" + std::to_string(p.token_objects) + " empirical " + fmt(r.rate(), 3) +
               " analytic " + fmt(a, 3) + " |z|=" + fmt(z, 2);
      if (r.skipped || z > 3) n.fail("k=", k, " N=", p.token_objects, " off by ", fmt(z, 2), " sigma");
    }
  }
  return n.done("16 points, 300 trials each, worst |z| = " + fmt(worst, 2) + table);
}

// ---------------------------------------------------------------------------
// 3: concentrated omission

/// Probability that at least one of `d` independent single-run tokens of
/// length t overlaps an attack run of length a, both placed uniformly in a
/// sequence of n positions.
double overlap_probability(std::uint64_t n, std::uint64_t a, std::uint64_t t, std::uint32_t d) {
  const double token_starts = static_cast<double>(n - t + 1);
  double total = 0;
  for (std::uint64_t as = 0; as + a <= n; ++as) {
    // Token start ts overlaps when ts <= as + a - 1 and ts + t - 1 >= as.
    const std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(as) - static_cast<std::int64_t>(t) + 1);
    const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(n - t), static_cast<std::int64_t>(as + a - 1));
    const double q = hi >= lo ? static_cast<double>(hi - lo + 1) / token_starts : 0.0;
    total += 1 - std::pow(1 - q, d);
  }
  return total / static_cast<double>(n - a + 1);
}

Outcome adaptive_detection() {
  Notes n;
  constexpr std::uint64_t kObjects = 200'000;
  constexpr std::uint32_t kTrials = 300;
  constexpr double kK = 0.001;
  const std::uint64_t token = kObjects / 100;
  const Chain chain = bench::make_chain(kObjects, 1'000, 400, 12);
  std::string detail;

  for (std::uint32_t ranges : {10u, 31u}) {
    bench::DetectionPoint p;
    p.adversary.strategy = Strategy::concentrated_omit;
    p.adversary.k = kK;
    p.adversary.n_attack_ranges = 60;
    p.token_objects = token;
    p.n_ranges = ranges;
    p.detections = 10;
    p.trials = kTrials;
    p.seed = derive_seed(3003, ranges);
    const auto r = bench::run_detection_point(chain, p);
    detail += "\n    60 attack runs, " + std::to_string(ranges) + " token ranges, 10 detections: " + fmt(r.rate(), 3);
    if (r.skipped || r.rate() < 0.99) n.fail(ranges, " ranges: detection ", fmt(r.rate(), 3), " < 0.99");
  }

  bench::DetectionPoint p;
  p.adversary.strategy = Strategy::concentrated_omit;
  p.adversary.k = kK;
  p.adversary.n_attack_ranges = 1;
  p.token_objects = token;
  p.n_ranges = 1;
  p.detections = 10;
  p.trials = kTrials;
  p.seed = 3101;
  const auto r = bench::run_detection_point(chain, p);
  const std::uint64_t attack = affected_count(kK, kObjects);
  const double oracle = overlap_probability(kObjects, attack, token, 10);
  const double sigma = std::sqrt(oracle * (1 - oracle) / kTrials);
  const double random_rate = 1 - std::exp(-kK * static_cast<double>(token) * 10);
  detail += "\n    1 attack run, 1 token range, 10 detections: " + fmt(r.rate(), 3) + " vs overlap oracle " +
            fmt(oracle, 3) + " (3 sigma = " + fmt(3 * sigma, 3) + "; random-omission rate " + fmt(random_rate, 3) +
            ")";
  if (r.skipped || std::abs(r.rate() - oracle) > 3 * sigma) n.fail("single-range rate outside 3 sigma of oracle");
  if (!(r.rate() < random_rate)) n.fail("single-range tokens were not evaded");
  return n.done("|D| = 200000, k = 0.001, 1% tokens, 300 trials" + detail);
}

// ---------------------------------------------------------------------------
// 4: verification cost

Outcome verify_cost() {
  Notes n;
  constexpr std::uint64_t kTotal = 400'000;
  const Chain chain = bench::make_chain(kTotal, 1'000, 400, 13);
  std::string detail;
  double prev = 0;
  for (std::uint64_t u : {50'000u, 100'000u, 200'000u, 400'000u}) {
    bench::VerifyCostPoint p;
    p.bundle = {IndexKind::numeric};
    p.total = kTotal;
    p.update_size = u;
    p.maxsize = 200'000;
    p.repetitions = 5;
    p.seed = 41;
    const auto c = bench::run_verify_cost_point(chain, p);
    const double ratio = c.baseline_seconds / c.challenge_seconds;
    detail += "\n    |D|=" + std::to_string(u) + ": challenge " + fmt(c.challenge_seconds) + " s, rebuild " +
              fmt(c.baseline_seconds) + " s, ratio " + fmt(ratio, 1);
    if (!c.all_accepted) n.fail("honest SP rejected at |D|=", u);
    if (ratio < 5) n.fail("ratio ", fmt(ratio, 2), " < 5 at |D|=", u);
    if (prev > 0 && c.challenge_seconds > prev * 1.10) n.fail("challenge cost rose at |D|=", u);
    prev = c.challenge_seconds;
  }
  return n.done("4e5 objects, num index, median of 5" + detail);
}

// ---------------------------------------------------------------------------
// 5: soundness and completeness

struct Dataset {
  Chain chain;
  ForestParams params;
  std::map<IndexKind, Forest> honest;
};

constexpr IndexKind kKinds[] = {IndexKind::timestamp, IndexKind::numeric, IndexKind::composite, IndexKind::keyword,
                                IndexKind::discrete};

Dataset make_dataset(Rng& rng, std::uint64_t seed) {
  ChainParams cp;
  cp.seed = seed;
  cp.n_blocks = 1 + uniform_below(rng, 8);
  cp.objects_per_block = 20 + uniform_below(rng, 381);
  cp.keyword_universe = static_cast<std::uint32_t>(20 + uniform_below(rng, 40));
  cp.disc_cardinality = static_cast<std::uint32_t>(2 + uniform_below(rng, 15));
  Dataset ds{generate_chain(cp), {}, {}};
  const std::uint32_t fanouts[] = {3, 4, 5, 8, 16, 64};
  const std::uint64_t n = ds.chain.object_count();
  ds.params.fanout = fanouts[uniform_below(rng, 6)];
  ds.params.maxsize = n / 4 + 1 + uniform_below(rng, n);
  for (IndexKind k : kKinds) ds.honest.emplace(k, Forest::build(ds.chain, k, ds.params));
  return ds;
}

std::uint64_t around(Rng& rng, std::uint64_t v, std::uint64_t width, bool low) {
  const std::uint64_t d = width == 0 ? 0 : uniform_below(rng, width + 1);
  return low ? v - std::min(v, d) : v + d;
}

/// A query of a random kind; with `hit`, built around `o` so that it
/// usually selects it.
QueryExpr make_query(Rng& rng, const Chain& chain, const DataObject& o, bool hit) {
  const auto objects = chain.objects();
  const DataObject& r = objects[uniform_below(rng, objects.size())];
  const DataObject& c = hit ? o : r;
  const std::uint64_t nw = uniform_below(rng, 4) == 0 ? 0 : uniform_below(rng, 150'000);
  const std::uint64_t tw = uniform_below(rng, 120);
  const std::uint64_t num_lo = around(rng, c.num_attr, nw, true), num_hi = around(rng, c.num_attr, nw, false);
  const std::uint64_t disc_lo = around(rng, c.disc_attr, 1, true), disc_hi = around(rng, c.disc_attr, 1, false);
  auto kw_of = [&](const DataObject& x) {
    return x.keywords.empty() ? static_cast<std::uint32_t>(uniform_below(rng, 60))
                              : x.keywords[uniform_below(rng, x.keywords.size())];
  };
  std::vector<std::uint32_t> kws = {kw_of(c)};
  if (uniform_below(rng, 3) == 0) kws.push_back(kw_of(uniform_below(rng, 2) ? c : r));
  std::sort(kws.begin(), kws.end());
  kws.erase(std::unique(kws.begin(), kws.end()), kws.end());

  switch (uniform_below(rng, 9)) {
    case 0: return QueryExpr::range_query(IndexKind::numeric, num_lo, num_hi);
    case 1: return QueryExpr::range_query(IndexKind::timestamp, around(rng, c.ts, tw, true), around(rng, c.ts, tw, false));
    case 2: return QueryExpr::range_query(IndexKind::discrete, disc_lo, disc_hi);
    case 3: return QueryExpr::object_query(IndexKind::numeric, c.num_attr);
    case 4: return QueryExpr::object_query(IndexKind::timestamp, c.ts);
    case 5: return QueryExpr::object_query(IndexKind::discrete, c.disc_attr);
    case 6: return QueryExpr::multidim(disc_lo, disc_hi, num_lo, num_hi);
    case 7: return QueryExpr::keyword_query(kws);
    default: return QueryExpr::keyword_range(kws, num_lo, num_hi);
  }
}

/// Positions of entries below forged nodes, with the group of their tree.
std::vector<std::pair<std::uint64_t, std::uint64_t>> forged_positions(const Segment& seg) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  auto walk_tree = [&](const MbTree& t, std::uint64_t group) {
    std::function<void(std::uint32_t, bool)> walk = [&](std::uint32_t i, bool below) {
      const auto& node = t.node(i);
      below = below || node.forged;
      if (node.leaf) {
        if (below) {
          for (const auto& e : node.entries) out.emplace_back(e.payload, group);
        }
      } else {
        for (std::uint32_t c : node.children) walk(c, below);
      }
    };
    if (!t.empty()) walk(t.root_index(), false);
  };
  if (seg.groups.empty()) {
    walk_tree(seg.tree, 0);
  } else {
    for (const auto& [g, t] : seg.groups) walk_tree(t, g);
  }
  return out;
}

QueryExpr object_query_for(IndexKind kind, const DataObject& o, std::uint64_t group) {
  switch (kind) {
    case IndexKind::composite: return QueryExpr::multidim(o.disc_attr, o.disc_attr, o.num_attr, o.num_attr);
    case IndexKind::keyword:
      return QueryExpr::keyword_range({static_cast<std::uint32_t>(group)}, o.num_attr, o.num_attr);
    default: return QueryExpr::object_query(kind, index_value(kind, o));
  }
}

/// True when keying position p by `placed` changes its order in every tree
/// of its segment that holds it; otherwise the misplacement is a no-op.
bool reorders(const Dataset& ds, IndexKind kind, std::uint64_t p, std::uint64_t placed) {
  const auto objects = ds.chain.objects();
  const DataObject& o = objects[p];
  SortKey a = sort_key(kind, o), b{placed, o.id};
  if (b < a) std::swap(a, b);
  if (a == b) return false;
  const std::uint64_t first = p / ds.params.maxsize * ds.params.maxsize;
  const std::uint64_t end = std::min<std::uint64_t>(ds.chain.object_count(), first + ds.params.maxsize);
  std::vector<std::uint64_t> groups = object_groups(kind, o);
  if (!is_grouped(kind)) groups = {0};
  for (std::uint64_t g : groups) {
    bool between = false;
    for (std::uint64_t m = first; m < end && !between; ++m) {
      if (m == p) continue;
      if (is_grouped(kind)) {
        const auto mg = object_groups(kind, objects[m]);
        if (std::find(mg.begin(), mg.end(), g) == mg.end()) continue;
      }
      const SortKey k = sort_key(kind, objects[m]);
      between = a < k && k < b;
    }
    if (!between) return false;
  }
  return true;
}

DataObject with_index_value(IndexKind kind, DataObject o, std::uint64_t v) {
  switch (kind) {
    case IndexKind::timestamp: o.ts = v; break;
    case IndexKind::discrete: o.disc_attr = static_cast<std::uint32_t>(v); break;
    default: o.num_attr = static_cast<std::uint32_t>(v); break;
  }
  return o;
}

Outcome soundness_suite() {
  Notes n;
  constexpr std::uint32_t kDatasets = 400;
  constexpr std::uint32_t kCasesPerDataset = 25;
  Rng rng(5005);
  std::map<std::string, std::array<std::uint64_t, 2>> tally;  // category -> {cases, expected verdicts}
  std::map<QueryKind, std::uint64_t> kinds_seen;
  std::uint64_t cases = 0, nonintersecting = 0, nonintersecting_accepted = 0;
  auto count = [&](const std::string& cat, bool good) {
    auto& t = tally[cat];
    ++t[0];
    t[1] += good ? 1 : 0;
  };

  for (std::uint32_t dsi = 0; dsi < kDatasets; ++dsi) {
    const Dataset ds = make_dataset(rng, derive_seed(77, dsi));
    const Chain& chain = ds.chain;
    const auto objects = chain.objects();
    const std::uint64_t total = chain.object_count();

    for (std::uint32_t ci = 0; ci < kCasesPerDataset; ++ci, ++cases) {
      const std::uint64_t roll = uniform_below(rng, 100);
      std::uint64_t p = uniform_below(rng, total);
      // A fault may not empty a whole tree: the SP has nothing to publish.
      while (total % ds.params.maxsize == 1 && p == total - 1 && total > 1) p = uniform_below(rng, total);
      const DataObject& o = objects[p];
      QueryExpr q = make_query(rng, chain, o, roll >= 30 ? uniform_below(rng, 10) < 8 : uniform_below(rng, 2) == 0);
      const IndexKind kind = required_index(q);
      const Forest& honest = ds.honest.at(kind);
      std::uint64_t first = 0, end = total;
      if (honest.segments().size() > 1 && uniform_below(rng, 7) == 0) {
        const auto s = static_cast<std::uint32_t>(uniform_below(rng, honest.segments().size()));
        q.segment = s;
        first = honest.segment(s).first;
        end = honest.segment(s).end;
      }
      ++kinds_seen[q.kind];
      const auto expected = sorted_ids(brute_force(chain, first, end, q));
      const bool in_scope = p >= first && p < end;
      auto judge = [&](const Forest& f, const QueryAnswer& a, bool* proof_ok = nullptr) {
        const auto digests = f.digests("sp");
        const bool verified = verify_answer(a, q, digests).accepted();
        if (proof_ok) *proof_ok = verified;
        return verified && sorted_ids(a.result) == expected;
      };
      const std::string label = std::string(query_kind_name(q.kind)) + "/" + std::string(index_name(kind)) +
                                " dataset " + std::to_string(dsi) + " case " + std::to_string(ci);

      if (roll < 30) {  // honest round trip
        const bool ok = judge(honest, run_query(honest, chain, q));
        count("honest", ok);
        if (!ok) n.fail("honest answer rejected: ", label);
        continue;
      }

      if (roll < 50) {  // answer tampering against honest trees
        QueryAnswer a = run_query(honest, chain, q);
        std::uint64_t how = a.result.empty() ? 3 : uniform_below(rng, 4);
        std::string what;
        switch (how) {
          case 0: {
            auto& victim = a.result[uniform_below(rng, a.result.size())];
            victim.keywords.push_back(1'000'000 + static_cast<std::uint32_t>(uniform_below(rng, 1000)));
            what = "altered record";
            break;
          }
          case 1:
            drop_from_answer(a, {a.result[uniform_below(rng, a.result.size())].id});
            what = "dropped record";
            break;
          case 2:
            a.result.erase(a.result.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, a.result.size())));
            what = "removed record";
            break;
          default: {
            DataObject fake = objects[uniform_below(rng, total)];
            fake.id = 1'000'000'000 + uniform_below(rng, 1000);
            a.result.insert(a.result.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, a.result.size() + 1)), fake);
            what = "injected record";
          }
        }
        bool proof_ok = true;
        judge(honest, a, &proof_ok);
        count("tamper", !proof_ok);
        if (proof_ok) n.fail(what, " accepted: ", label);
        continue;
      }

      if (roll < 85) {  // omission or misplacement in the SP's trees
        FaultSet faults;
        bool intersects = in_scope && q.matches(o);
        std::string cat = "omission";
        if (roll >= 70) {
          std::vector<std::uint64_t> order(total);
          for (std::uint64_t i = 0; i < total; ++i) order[i] = i;
          std::sort(order.begin(), order.end(), [&](std::uint64_t x, std::uint64_t y) {
            return sort_key(kind, objects[x]) < sort_key(kind, objects[y]);
          });
          const std::uint64_t rank = static_cast<std::uint64_t>(
              std::find(order.begin(), order.end(), p) - order.begin());
          const std::uint64_t half = index_value(kind, objects[order[(rank + total / 2) % total]]);
          std::uint64_t placed = index_value(kind, o);
          for (std::uint64_t c : {half, index_value(kind, objects[order.front()]), index_value(kind, objects[order.back()])}) {
            if (reorders(ds, kind, p, c)) {
              placed = c;
              break;
            }
          }
          if (placed != index_value(kind, o)) {
            faults.misplaced.emplace_back(p, placed);
            cat = "misplacement";
            intersects = in_scope && (q.matches(o) || q.matches(with_index_value(kind, o, placed)));
          }
        }
        if (faults.misplaced.empty()) faults.omitted = {p};
        if (kind == IndexKind::keyword && o.keywords.empty()) intersects = false;

        ServiceProvider sp("sp", chain, ds.params, faults);
        sp.build(std::span<const IndexKind>(&kind, 1));
        const Forest& faulty = sp.forest(kind);
        const bool accepted = judge(faulty, run_query(faulty, chain, q));
        bool patched_proof_ok = false;
        ResultPatchingResponder patcher(sp, chain, ds.params.maxsize);
        judge(faulty, *patcher.answer(q), &patched_proof_ok);
        if (intersects) {
          count(cat, !accepted && !patched_proof_ok);
          if (accepted) n.fail(cat, " accepted: ", label);
          if (patched_proof_ok) n.fail(cat, " hidden by a patched result: ", label);
        } else {
          ++nonintersecting;
          nonintersecting_accepted += accepted ? 1 : 0;
        }
        continue;
      }

      // Omission hidden behind fabricated sums, probed by object queries.
      FaultSet faults;
      faults.omitted = {p};
      faults.forge_sums = true;
      faults.forge_level = static_cast<std::uint32_t>(uniform_below(rng, 2));
      const Forest faulty = Forest::build(chain, kind, ds.params, faults);
      const auto seg = static_cast<std::uint32_t>(p / ds.params.maxsize);
      const auto under = forged_positions(faulty.segment(seg));
      if (under.empty()) {
        if (kind == IndexKind::keyword && o.keywords.empty()) continue;
        const std::uint64_t g = kind == IndexKind::keyword ? o.keywords.front() : 0;
        const QueryExpr oq = object_query_for(kind, o, g);
        const bool ok = !verify_answer(run_query(faulty, chain, oq), oq, faulty.digests("sp")).accepted() ||
                        sorted_ids(run_query(faulty, chain, oq).result) != sorted_ids(brute_force(chain, 0, total, oq));
        count("forge", ok);
        if (!ok) n.fail("forged omission accepted (omitted object probe): ", label);
        continue;
      }
      const auto [x, group] = under[uniform_below(rng, under.size())];
      const QueryExpr oq = object_query_for(kind, objects[x], group);
      ++kinds_seen[oq.kind];
      const bool rejected = !verify_answer(run_query(faulty, chain, oq), oq, faulty.digests("sp")).accepted();
      count("forge", rejected);
      if (!rejected) n.fail("object query through a forged node accepted: ", label, " position ", x);
    }
  }

  std::string summary = std::to_string(cases) + " cases over " + std::to_string(kDatasets) + " datasets";
  for (const auto& [cat, t] : tally) {
    summary += "\n    " + cat + ": " + std::to_string(t[1]) + "/" + std::to_string(t[0]) +
               (cat == "honest" ? " accepted" : " rejected");
  }
  summary += "\n    faults not touching the query: " + std::to_string(nonintersecting_accepted) + "/" +
             std::to_string(nonintersecting) + " accepted";
  summary += "\n    query kinds:";
  for (const auto& [k, c] : kinds_seen) summary += " " + std::string(query_kind_name(k)) + "=" + std::to_string(c);
  if (cases < 10'000) n.fail("only ", cases, " cases");
  if (kinds_seen.size() < 5) n.fail("not every query kind was exercised");
  return n.done(summary);
}

// ---------------------------------------------------------------------------
// 6: worked examples

const char* label_of(const Fixture& fx, const Hash& h) {
  const MbTree& t = fx.sp->forest(IndexKind::numeric).segment(0).tree;
  for (const auto& [name, idx] : fx.labels) {
    if (t.node(idx).hash == h) return name.c_str();
  }
  return "?";
}

void check_vo(Notes& n, char variant, std::uint64_t lo, std::uint64_t hi, std::set<std::string> pruned_expected,
              std::uint64_t left, std::uint64_t right, std::vector<std::uint64_t> result, std::string& detail) {
  const Fixture fx = make_example_fixture(variant);
  const auto q = QueryExpr::range_query(IndexKind::numeric, lo, hi);
  const QueryAnswer a = *fx.sp->answer(q);
  const std::string tag = std::string("tree-") + variant;
  if (!verify_answer(a, q, fx.board.live_entries("fixture", IndexKind::numeric)).accepted()) n.fail(tag, " rejected");
  std::vector<std::uint64_t> got;
  for (const auto& o : a.result) got.push_back(o.num_attr);
  if (got != result) n.fail(tag, " wrong result");
  if (a.vos.size() != 1 || a.vos[0].trees.size() != 1) {
    n.fail(tag, " unexpected VO shape");
    return;
  }
  const TreeVO& vo = a.vos[0].trees[0].second;
  std::set<std::string> pruned;
  std::size_t pruned_entries = 0;
  for (const auto& node : vo.proof.nodes) {
    for (const auto& item : node.items) {
      if (item.kind == ProofItem::Kind::pruned_node) pruned.insert(label_of(fx, item.hash));
      if (item.kind == ProofItem::Kind::pruned_entry) ++pruned_entries;
    }
  }
  if (pruned != pruned_expected) n.fail(tag, " pruned nodes differ");
  if (pruned_entries != 0) n.fail(tag, " has pruned leaf entries");
  if (!vo.left || vo.left->num_attr != left || !vo.right || vo.right->num_attr != right) n.fail(tag, " boundaries differ");
  detail += "\n    " + tag + " Q=[" + std::to_string(lo) + "," + std::to_string(hi) + "]: pruned {";
  for (const auto& s : pruned) detail += (s == *pruned.begin() ? "" : ", ") + s;
  detail += "}, boundaries " + (vo.left ? std::to_string(vo.left->num_attr) : "-") + " and " +
            (vo.right ? std::to_string(vo.right->num_attr) : "-");
}

Outcome worked_examples() {
  Notes n;
  std::string detail;
  std::vector<Hash> leaves;
  for (std::uint64_t v : binary_example_leaves()) leaves.push_back(binary_example_leaf_hash(v));
  const BinaryMerkle tree(leaves);
  const auto path = tree.prove(2);
  std::vector<std::string> names;
  for (const auto& step : path) {
    names.push_back(step.level == 0 ? (step.sibling == binary_example_leaf_hash(25) ? "h(25)" : "h(?)")
                                    : "h" + std::to_string(tree.number_of(step.level, step.index)));
  }
  if (names != std::vector<std::string>{"h(25)", "h1", "h6"}) n.fail("binary tree path differs");
  if (!BinaryMerkle::verify(leaves[2], path, tree.root())) n.fail("binary tree path does not verify");
  detail += "\n    binary tree path for 14: " + names.at(0) + ", " + names.at(1) + ", " + names.at(2);
  check_vo(n, 'a', 10, 14, {"F", "G"}, 9, 19, {10, 12, 14}, detail);
  check_vo(n, 'b', 5, 8, {"A", "H"}, 4, 9, {6, 7, 8}, detail);
  return n.done("proof paths match the worked examples" + detail);
}

// ---------------------------------------------------------------------------
// 7: hash-sum audit

Outcome hash_sum_audit() {
  Notes n;
  Rng rng(7007);
  std::uint64_t rounds = 0, audited = 0;
  {
    ChainParams cp;
    cp.seed = 71;
    cp.n_blocks = 1'600;
    cp.objects_per_block = 15;
    cp.keyword_universe = 80;
    const Chain chain = generate_chain(cp);
    const ForestParams params{16, 1'000};
    ServiceProvider sp("sp", chain, params);
    const FullNode node(chain, params.maxsize);
    std::uint64_t block = 0;
    while (rounds < 1'000 && block < cp.n_blocks) {
      block = std::min<std::uint64_t>(cp.n_blocks, block + 1 + uniform_below(rng, 2));
      for (const auto& d : sp.sync(kKinds, block * cp.objects_per_block)) {
        ++audited;
        if (!node.audit(d)) n.fail("honest audit failed: ", d.tree_id.str(), " round ", rounds);
      }
      ++rounds;
    }
    if (rounds < 1'000) n.fail("only ", rounds, " rounds");
  }

  ChainParams cp;
  cp.seed = 72;
  cp.n_blocks = 40;
  cp.objects_per_block = 125;
  const Chain chain = generate_chain(cp);
  const ForestParams params{8, 2'000};
  const FullNode node(chain, params.maxsize);
  std::uint64_t omissions = 0, caught = 0, forged = 0, forged_passed = 0, forged_rejected = 0;
  for (std::uint32_t c = 0; c < 500; ++c) {
    const IndexKind kind = kKinds[c % 5];
    std::uint64_t p = uniform_below(rng, chain.object_count());
    while (kind == IndexKind::keyword && chain.objects()[p].keywords.empty()) p = uniform_below(rng, chain.object_count());
    const DataObject& o = chain.objects()[p];
    FaultSet faults;
    faults.omitted = {p};
    faults.forge_sums = c % 2 == 1;
    faults.forge_level = static_cast<std::uint32_t>(uniform_below(rng, 3));
    const Forest f = Forest::build(chain, kind, params, faults);
    const auto seg = static_cast<std::uint32_t>(p / params.maxsize);
    for (const auto& d : f.digests("sp")) {
      const bool pass = node.audit(d);
      if (d.tree_id.segment != seg) {
        if (!pass) n.fail("untouched tree failed audit: ", d.tree_id.str());
      } else if (faults.forge_sums) {
        ++forged;
        forged_passed += pass ? 1 : 0;
        if (!pass) n.fail("forged sums failed audit: ", d.tree_id.str());
      } else {
        ++omissions;
        caught += pass ? 0 : 1;
        if (pass) n.fail("omission of position ", p, " passed audit on ", d.tree_id.str());
      }
    }
    if (faults.forge_sums) {
      const QueryExpr q = object_query_for(kind, o, kind == IndexKind::keyword ? o.keywords.front() : 0);
      const bool rejected = !verify_answer(run_query(f, chain, q), q, f.digests("sp")).accepted();
      forged_rejected += rejected ? 1 : 0;
      if (!rejected) n.fail("forged omission of position ", p, " accepted by its object query on ", index_name(kind));
    }
  }
  return n.done(std::to_string(rounds) + " honest rounds (" + std::to_string(audited) + " digests) pass; " +
                std::to_string(caught) + "/" + std::to_string(omissions) + " plain omissions fail audit; " +
                std::to_string(forged_passed) + "/" + std::to_string(forged) + " forged trees pass audit and " +
                std::to_string(forged_rejected) + "/" + std::to_string(forged) +
                " are rejected by the omitted object's query");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"token sizing", token_sizing},         {"random-omission detection", detection_rate},
      {"concentrated omission", adaptive_detection}, {"verification cost", verify_cost},
      {"soundness and completeness", soundness_suite}, {"worked examples", worked_examples},
      {"hash-sum audit", hash_sum_audit},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s, %.1f s): %s\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first, secs,
                out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures;
}
