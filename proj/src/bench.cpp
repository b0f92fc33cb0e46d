#include "chainq/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "chainq/errors.hpp"
#include "chainq/kernels.hpp"
#include "chainq/random.hpp"

namespace chainq::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  unsigned t = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  t = static_cast<unsigned>(std::min<std::size_t>(t, n));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string num(std::uint64_t v) { return std::to_string(v); }

std::string bundle_name(const std::vector<IndexKind>& b) {
  std::string s;
  for (IndexKind k : b) {
    if (!s.empty()) s += '+';
    s += index_name(k);
  }
  return s;
}

std::uint64_t token_volume(std::uint64_t n, std::uint32_t n_ranges, std::uint64_t min_volume) {
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < n_ranges; ++i) {
    total += std::max(n / n_ranges + (i < n % n_ranges ? 1 : 0), min_volume);
  }
  return total;
}

std::vector<std::uint64_t> ids_of(const std::vector<DataObject>& objs) {
  std::vector<std::uint64_t> ids;
  ids.reserve(objs.size());
  for (const DataObject& o : objs) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::detection: return "detection";
    case Experiment::adaptive_detection: return "adaptive_detection";
    case Experiment::verify_cost: return "verify_cost";
    case Experiment::query_cost: return "query_cost";
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::detection, Experiment::adaptive_detection, Experiment::verify_cost,
                       Experiment::query_cost}) {
    if (experiment_name(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig ExperimentConfig::defaults(Experiment e, bool full_scale) {
  ExperimentConfig c;
  c.experiment = e;
  c.objects = full_scale ? 200'000 : 20'000;
  c.trials = full_scale ? 1000 : 300;
  switch (e) {
    case Experiment::detection:
      c.adversary.strategy = Strategy::random_omit;
      break;
    case Experiment::adaptive_detection:
      c.adversary.strategy = Strategy::concentrated_omit;
      c.adversary.n_attack_ranges = 60;
      c.ks = {0.001};
      c.fractions = {0.01};
      c.detections = {1, 5, 10};
      break;
    case Experiment::verify_cost:
      c.total_objects = full_scale ? 400'000 : 100'000;
      c.update_sizes = full_scale ? std::vector<std::uint64_t>{50'000, 100'000, 200'000, 400'000}
                                   : std::vector<std::uint64_t>{12'500, 25'000, 50'000, 100'000};
      if (!full_scale) c.bundles.pop_back();
      break;
    case Experiment::query_cost:
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (trials == 0) throw ConfigError("trials must be at least 1");
  if (repetitions == 0) throw ConfigError("repetitions must be at least 1");
  if (objects == 0 || objects_per_block == 0) throw ConfigError("object counts must be positive");
  if (maxsize == 0) throw ConfigError("maxsize must be positive");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("token fraction must be in (0, 1]");
  }
  for (double k : ks) {
    if (!(k >= 0.0 && k < 1.0)) throw ConfigError("omission fraction k must be in [0, 1)");
  }
  for (double s : selectivities) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("selectivity must be in [0, 1]");
  }
  for (auto u : update_sizes) {
    if (u == 0 || u > total_objects) throw ConfigError("update sizes must be in [1, total_objects]");
  }
  if (n_ranges && *n_ranges == 0) throw ConfigError("n_ranges must be positive");
}

std::vector<std::string> csv_header(Experiment e) {
  std::vector<std::string> h = {"experiment"};
  switch (e) {
    case Experiment::detection:
      h.insert(h.end(), {"k", "fraction", "n_objects", "token_objects", "n_ranges", "detections"});
      break;
    case Experiment::adaptive_detection:
      h.insert(h.end(), {"k", "fraction", "detections", "n_ranges", "n_attack_ranges", "n_objects"});
      break;
    case Experiment::verify_cost:
      h.insert(h.end(), {"scheme", "bundle", "total_objects", "update_size", "rounds"});
      break;
    case Experiment::query_cost:
      h.insert(h.end(), {"query", "selectivity", "n_objects", "result_size"});
      break;
  }
  h.insert(h.end(), {"metric", "value", "analytic", "trials", "timestamp"});
  return h;
}

void write_csv(std::ostream& out, Experiment e, std::span<const BenchRecord> rows) {
  const auto header = csv_header(e);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  const std::size_t n_params = header.size() - 6;
  for (const BenchRecord& r : rows) {
    if (r.params.size() != n_params) throw ConfigError("record does not match the experiment header");
    out << r.experiment;
    for (const auto& [name, value] : r.params) out << ',' << value;
    out << ',' << r.metric << ',' << (std::isnan(r.value) ? std::string() : num(r.value)) << ','
        << (r.analytic ? num(*r.analytic) : std::string()) << ',' << r.trials << ',' << r.timestamp << '\n';
  }
}

Chain make_chain(std::uint64_t objects, std::uint64_t per_block, std::uint32_t keyword_universe, std::uint64_t seed) {
  if (per_block == 0 || objects % per_block != 0) throw ConfigError("objects must be a multiple of objects_per_block");
  ChainParams cp;
  cp.seed = seed;
  cp.n_blocks = objects / per_block;
  cp.objects_per_block = per_block;
  cp.keyword_universe = keyword_universe;
  return generate_chain(cp);
}

std::uint32_t default_n_ranges(std::uint64_t token_objects) {
  return static_cast<std::uint32_t>(std::clamp<std::uint64_t>(token_objects / 64, 1, 10));
}

DetectionResult run_detection_point(const Chain& chain, const DetectionPoint& p, unsigned threads) {
  DetectionResult res;
  res.trials = p.trials;
  if (p.detections == 0) return res;
  const std::uint64_t d = chain.object_count();
  const std::uint64_t volume = token_volume(p.token_objects, p.n_ranges, p.min_range_volume);
  if (volume > d) {
    res.skipped = true;
    res.skip_reason = "token of " + std::to_string(volume) + " objects exceeds the round of " + std::to_string(d) +
                      "; needs " + std::to_string(required_detections(volume, d)) + " detections";
    return res;
  }
  const ForestParams params{MbTree::kDefaultFanout, std::max<std::uint64_t>(d, 1)};
  const TokenPlan plan = TokenPlan::with_volume(p.token_objects, p.n_ranges, p.min_range_volume);
  const IndexKind kind = IndexKind::numeric;
  std::vector<std::uint8_t> detected(p.trials, 0);
  parallel_for(p.trials, threads, [&](std::size_t t) {
    FaultPlan fp = p.adversary;
    fp.rng_seed = derive_seed(p.seed, t, 0xFA17);
    FaultSet faults = fp.strategy == Strategy::honest ? FaultSet{} : plan_faults(chain, fp);
    ServiceProvider sp("sp", chain, params, std::move(faults));
    sp.build(std::span<const IndexKind>(&kind, 1));
    DigestBoard board;
    sp.publish(board);
    FullNode node(chain, params.maxsize);
    const ChallengeConfig cfg{plan, p.detections, kind, derive_seed(p.seed, t, 0x70C3)};
    detected[t] = challenge_sp(node, sp, board, cfg).all_accepted() ? 0 : 1;
  });
  for (auto x : detected) res.detected += x;
  return res;
}

std::vector<BenchRecord> run_detection_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment != Experiment::detection) throw ConfigError("not a detection config");
  cfg.validate();
  const Chain chain = make_chain(cfg.objects, cfg.objects_per_block, cfg.keyword_universe, cfg.seed);
  const std::string ts = now_utc();
  const std::uint32_t detections = cfg.detections.empty() ? 1 : cfg.detections.front();
  std::vector<BenchRecord> rows;
  std::uint64_t point = 0;
  for (double k : cfg.ks) {
    for (double f : cfg.fractions) {
      DetectionPoint p;
      p.adversary = cfg.adversary;
      p.adversary.k = k;
      if (k == 0.0) p.adversary.strategy = Strategy::honest;
      p.token_objects = std::max<std::uint64_t>(1, std::llround(f * static_cast<double>(cfg.objects)));
      p.n_ranges = cfg.n_ranges.value_or(default_n_ranges(p.token_objects));
      p.min_range_volume = cfg.min_range_volume;
      p.detections = detections;
      p.trials = cfg.trials;
      p.seed = derive_seed(cfg.seed, ++point);
      const DetectionResult r = run_detection_point(chain, p, cfg.threads);
      BenchRecord rec;
      rec.experiment = "detection";
      rec.params = {{"k", num(k)},
                    {"fraction", num(f)},
                    {"n_objects", num(cfg.objects)},
                    {"token_objects", num(p.token_objects)},
                    {"n_ranges", num(std::uint64_t{p.n_ranges})},
                    {"detections", num(std::uint64_t{detections})}};
      rec.metric = r.skipped ? "skipped" : "detection_rate";
      rec.value = r.skipped ? std::nan("") : r.rate();
      rec.analytic = 1.0 - std::exp(-k * static_cast<double>(p.token_objects) * detections);
      rec.trials = r.trials;
      rec.timestamp = ts;
      rows.push_back(std::move(rec));
    }
  }
  return rows;
}

std::vector<BenchRecord> run_adaptive_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment != Experiment::adaptive_detection) throw ConfigError("not an adaptive_detection config");
  cfg.validate();
  if (cfg.adversary.strategy != Strategy::concentrated_omit) {
    throw ConfigError("the adaptive experiment needs the concentrated_omit adversary");
  }
  const Chain chain = make_chain(cfg.objects, cfg.objects_per_block, cfg.keyword_universe, cfg.seed);
  const std::string ts = now_utc();
  std::vector<BenchRecord> rows;
  std::uint64_t point = 0;
  for (double k : cfg.ks) {
    for (double f : cfg.fractions) {
      for (std::uint32_t det : cfg.detections) {
        for (std::uint32_t nr : cfg.n_ranges_grid) {
          DetectionPoint p;
          p.adversary = cfg.adversary;
          p.adversary.k = k;
          if (k == 0.0) p.adversary.strategy = Strategy::honest;
          p.token_objects = std::max<std::uint64_t>(1, std::llround(f * static_cast<double>(cfg.objects)));
          p.n_ranges = nr;
          p.min_range_volume = cfg.min_range_volume;
          p.detections = det;
          p.trials = cfg.trials;
          p.seed = derive_seed(cfg.seed, ++point);
          const DetectionResult r = run_detection_point(chain, p, cfg.threads);
          BenchRecord rec;
          rec.experiment = "adaptive_detection";
          rec.params = {{"k", num(k)},
                        {"fraction", num(f)},
                        {"detections", num(std::uint64_t{det})},
                        {"n_ranges", num(std::uint64_t{nr})},
                        {"n_attack_ranges", num(std::uint64_t{cfg.adversary.n_attack_ranges})},
                        {"n_objects", num(cfg.objects)}};
          rec.metric = r.skipped ? "skipped" : "detection_rate";
          rec.value = r.skipped ? std::nan("") : r.rate();
          rec.trials = r.trials;
          rec.timestamp = ts;
          rows.push_back(std::move(rec));
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Verification cost

namespace {

struct PreparedChallenge {
  DigestBoardEntry digest;
  IndexKind kind;
  std::uint64_t first = 0, end = 0;
  std::vector<QueryExpr> exprs;
  std::vector<QueryAnswer> answers;
};

struct PreparedRound {
  std::uint64_t end = 0;
  std::vector<DigestBoardEntry> published;
  std::vector<PreparedChallenge> challenges;
};

QueryExpr challenge_expr(const DetectingToken& token, std::size_t i, IndexKind kind, std::uint32_t keyword) {
  QueryExpr e = token.expr(i);
  e.index = kind;
  if (kind == IndexKind::composite) {
    e.kind = QueryKind::multidim;
    e.group_lo = 0;
    e.group_hi = kU64Max;
  } else if (kind == IndexKind::keyword) {
    e.kind = QueryKind::keyword_range;
    e.keywords = {keyword};
  }
  return e;
}

}  // namespace

double median(std::vector<double> samples) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

VerifyCost run_verify_cost_point(const Chain& chain, const VerifyCostPoint& p) {
  if (p.update_size == 0 || p.total == 0) throw ConfigError("update size and total must be positive");
  if (chain.object_count() < p.total) throw ConfigError("chain is shorter than the requested total");
  const ForestParams params{MbTree::kDefaultFanout, p.maxsize};
  const auto hashes = chain.hashes();
  const auto objects = chain.objects();

  // SP side and token selection: prepared once, not timed.
  ServiceProvider sp("sp", chain, params);
  DigestBoard board;
  FullNode node(chain, p.maxsize);
  std::vector<PreparedRound> rounds;
  for (std::uint64_t end = 0, r = 0; end < p.total; ++r) {
    end = std::min(p.total, end + p.update_size);
    if (end != chain.object_count() && chain.height_of(end) == chain.height_of(end - 1)) {
      throw ConfigError("round boundaries must fall on block boundaries");
    }
    PreparedRound round;
    round.end = end;
    round.published = sp.sync(p.bundle, end);
    for (const DigestBoardEntry& d : round.published) board.publish(d);
    for (std::size_t i = 0; i < round.published.size(); ++i) {
      const DigestBoardEntry& d = round.published[i];
      PreparedChallenge ch;
      ch.digest = d;
      ch.kind = d.tree_id.kind;
      std::tie(ch.first, ch.end) = node.positions(d);
      const IndexKind token_kind = is_grouped(ch.kind) ? IndexKind::numeric : ch.kind;
      const auto keys = node.sorted_keys(token_kind, ch.first, ch.end);
      TokenPlan plan = p.plan;
      plan.n = std::min<std::uint64_t>(plan.n, keys.size());
      plan.min_range_volume = std::min<std::uint64_t>(plan.min_range_volume, keys.size() / plan.n_ranges + 1);
      if (token_volume(plan.n, plan.n_ranges, plan.min_range_volume) > keys.size()) plan.min_range_volume = 1;
      const DetectingToken token =
          select_ranges(keys, token_kind, d.tree_id.segment, plan, derive_seed(p.seed, r, i));
      Rng rng(derive_seed(p.seed, r, i + 0x1000));
      const auto& probe = objects[ch.first + uniform_below(rng, ch.end - ch.first)];
      const std::uint32_t kw = probe.keywords.empty() ? 0 : probe.keywords.front();
      for (std::size_t j = 0; j < token.ranges.size(); ++j) {
        ch.exprs.push_back(challenge_expr(token, j, ch.kind, kw));
        ch.answers.push_back(*sp.answer(ch.exprs.back()));
      }
      round.challenges.push_back(std::move(ch));
    }
    rounds.push_back(std::move(round));
  }

  VerifyCost cost;
  cost.rounds = rounds.size();
  for (const auto& r : rounds) cost.challenged_trees += r.challenges.size();

  std::vector<double> challenge, baseline;
  for (std::uint32_t rep = 0; rep < p.repetitions; ++rep) {
    bool ok = true;
    // Challenge verifier: incremental hash-sum audit, known-answer scan, VO check.
    struct Running {
      U256 sum;
      std::uint64_t upto = 0;
      std::uint64_t count = 0;
    };
    std::map<TreeId, Running> running;
    const auto t0 = Clock::now();
    for (const PreparedRound& round : rounds) {
      for (const PreparedChallenge& ch : round.challenges) {
        auto [it, fresh] = running.try_emplace(ch.digest.tree_id);
        Running& acc = it->second;
        if (fresh) acc.upto = ch.first;
        if (ch.kind == IndexKind::keyword) {
          for (std::uint64_t q = acc.upto; q < ch.end; ++q) {
            const U256 h = U256::from_be_bytes(hashes[q]);
            for (std::size_t m = 0; m < objects[q].keywords.size(); ++m) acc.sum += h;
            acc.count += objects[q].keywords.size();
          }
        } else {
          acc.sum += kernels::sum_hashes(hashes.subspan(acc.upto, ch.end - acc.upto));
          acc.count += ch.end - acc.upto;
        }
        acc.upto = ch.end;
        ok &= acc.sum == ch.digest.hash_sum && acc.count == ch.digest.object_count;

        for (std::size_t j = 0; j < ch.exprs.size(); ++j) {
          const std::vector<std::uint64_t> expected =
              is_grouped(ch.kind) ? ids_of(brute_force(chain, ch.first, ch.end, ch.exprs[j]))
                                  : node.expected_ids(ch.kind, ch.first, ch.end, ch.exprs[j].range);
          ok &= ids_of(ch.answers[j].result) == expected;
          ok &= verify_answer(ch.answers[j], ch.exprs[j], std::span<const DigestBoardEntry>(&ch.digest, 1)).accepted();
        }
      }
    }
    challenge.push_back(seconds_since(t0));

    // Baseline: the full node rebuilds every index and compares digests.
    std::map<IndexKind, Forest> mine;
    const auto t1 = Clock::now();
    for (IndexKind k : p.bundle) mine.emplace(k, Forest(k, params));
    for (const PreparedRound& round : rounds) {
      std::size_t next = 0;
      for (IndexKind k : p.bundle) {
        Forest& f = mine.at(k);
        for (std::uint32_t s : f.insert_batch(chain, round.end)) {
          ok &= next < round.published.size() && f.digest(s, "sp") == round.published[next];
          ++next;
        }
      }
      ok &= next == round.published.size();
    }
    baseline.push_back(seconds_since(t1));
    cost.all_accepted = cost.all_accepted && ok;
  }
  cost.challenge_seconds = median(challenge);
  cost.baseline_seconds = median(baseline);
  return cost;
}

std::vector<BenchRecord> run_verify_cost_bench(const ExperimentConfig& cfg) {
  if (cfg.experiment != Experiment::verify_cost) throw ConfigError("not a verify_cost config");
  cfg.validate();
  const Chain chain = make_chain(cfg.total_objects, cfg.objects_per_block, cfg.keyword_universe, cfg.seed);
  const std::string ts = now_utc();
  std::vector<BenchRecord> rows;
  for (const auto& bundle : cfg.bundles) {
    for (std::uint64_t u : cfg.update_sizes) {
      VerifyCostPoint p;
      p.bundle = bundle;
      p.total = cfg.total_objects;
      p.update_size = u;
      p.maxsize = cfg.maxsize;
      p.plan = TokenPlan::for_detection(cfg.token_k, cfg.token_pd, cfg.n_ranges.value_or(10), cfg.min_range_volume);
      p.repetitions = cfg.repetitions;
      p.seed = cfg.seed;
      const VerifyCost c = run_verify_cost_point(chain, p);
      if (!c.all_accepted) throw Error("honest SP failed verification in the cost benchmark");
      for (const char* scheme : {"challenge", "rebuild"}) {
        BenchRecord rec;
        rec.experiment = "verify_cost";
        rec.params = {{"scheme", scheme},
                      {"bundle", bundle_name(bundle)},
                      {"total_objects", num(cfg.total_objects)},
                      {"update_size", num(u)},
                      {"rounds", num(c.rounds)}};
        rec.metric = "seconds";
        rec.value = std::string_view(scheme) == "challenge" ? c.challenge_seconds : c.baseline_seconds;
        rec.trials = cfg.repetitions;
        rec.timestamp = ts;
        rows.push_back(std::move(rec));
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Query cost

namespace {

/// [lo, hi] over sorted values covering `width` consecutive entries from a
/// random start; width 0 yields a range between two adjacent values.
std::pair<std::uint64_t, std::uint64_t> pick_range(const std::vector<std::uint64_t>& sorted, std::uint64_t width,
                                                   Rng& rng) {
  if (sorted.empty()) return {1, 0};
  if (width == 0) {
    for (std::size_t tries = 0; tries < sorted.size(); ++tries) {
      const std::size_t i = uniform_below(rng, sorted.size() - 1);
      if (sorted[i + 1] - sorted[i] >= 2) return {sorted[i] + 1, sorted[i + 1] - 1};
    }
    return {sorted.back() + 1, sorted.back() + 1};
  }
  width = std::min<std::uint64_t>(width, sorted.size());
  const std::uint64_t start = uniform_below(rng, sorted.size() - width + 1);
  return {sorted[start], sorted[start + width - 1]};
}

}  // namespace

std::vector<QueryCost> run_query_cost_points(const Chain& chain, std::span<const double> selectivities,
                                             std::uint32_t repetitions, std::uint64_t seed) {
  if (repetitions == 0) throw ConfigError("repetitions must be at least 1");
  const std::uint64_t d = chain.object_count();
  const ForestParams params{MbTree::kDefaultFanout, std::max<std::uint64_t>(d, 1)};
  const std::vector<IndexKind> kinds = {IndexKind::numeric, IndexKind::composite, IndexKind::discrete,
                                        IndexKind::keyword};
  ServiceProvider sp("sp", chain, params);
  sp.build(kinds);
  DigestBoard board;
  sp.publish(board);
  auto digests = [&](IndexKind k) { return board.live_entries("sp", k); };

  std::vector<std::uint64_t> all_nums(chain.num_column().begin(), chain.num_column().end());
  std::sort(all_nums.begin(), all_nums.end());

  auto timed = [&](auto&& f) {
    std::vector<double> s;
    for (std::uint32_t r = 0; r < repetitions; ++r) {
      const auto t0 = Clock::now();
      f();
      s.push_back(seconds_since(t0));
    }
    return median(std::move(s));
  };

  std::vector<QueryCost> out;
  std::uint64_t point = 0;
  for (double sel : selectivities) {
    Rng rng(derive_seed(seed, ++point));
    const auto width = static_cast<std::uint64_t>(std::ceil(sel * static_cast<double>(d)));

    auto measure = [&](const std::string& name, const QueryExpr& expr) {
      QueryCost c{name, sel};
      const IndexKind k = required_index(expr);
      QueryAnswer ans;
      c.sp_seconds = timed([&] { ans = run_query(sp.forest(k), chain, expr); });
      const auto ds = digests(k);
      bool ok = true;
      c.verify_seconds = timed([&] { ok = verify_answer(ans, expr, ds).accepted(); });
      c.accepted = ok;
      c.result_size = ans.result.size();
      out.push_back(c);
    };

    {
      const auto [lo, hi] = pick_range(all_nums, width, rng);
      measure("range", QueryExpr::range_query(IndexKind::numeric, lo, hi));
    }
    {
      const std::uint64_t g = uniform_below(rng, kDefaultDiscCardinality);
      std::vector<std::uint64_t> group_nums;
      for (const DataObject& o : chain.objects()) {
        if (o.disc_attr == g) group_nums.push_back(o.num_attr);
      }
      std::sort(group_nums.begin(), group_nums.end());
      const auto [lo, hi] = pick_range(group_nums, width, rng);
      measure("multidim", QueryExpr::multidim(g, g, lo, hi));

      // Comparator: two single-attribute answers intersected by the client.
      const QueryExpr by_num = QueryExpr::range_query(IndexKind::numeric, lo, hi);
      const QueryExpr by_disc = QueryExpr::range_query(IndexKind::discrete, g, g);
      QueryCost c{"intersect", sel};
      QueryAnswer a_num, a_disc;
      c.sp_seconds = timed([&] {
        a_num = run_query(sp.forest(IndexKind::numeric), chain, by_num);
        a_disc = run_query(sp.forest(IndexKind::discrete), chain, by_disc);
      });
      const auto d_num = digests(IndexKind::numeric);
      const auto d_disc = digests(IndexKind::discrete);
      bool ok = true;
      std::vector<std::uint64_t> common;
      c.verify_seconds = timed([&] {
        ok = verify_answer(a_num, by_num, d_num).accepted() && verify_answer(a_disc, by_disc, d_disc).accepted();
        const auto x = ids_of(a_num.result);
        const auto y = ids_of(a_disc.result);
        common.clear();
        std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
      });
      c.accepted = ok;
      c.result_size = common.size();
      out.push_back(c);
    }
    {
      const DataObject& probe = chain.objects()[uniform_below(rng, d)];
      const std::uint32_t w = probe.keywords.empty() ? 0 : probe.keywords[uniform_below(rng, probe.keywords.size())];
      std::vector<std::uint64_t> kw_nums;
      for (const DataObject& o : chain.objects()) {
        if (o.has_keyword(w)) kw_nums.push_back(o.num_attr);
      }
      std::sort(kw_nums.begin(), kw_nums.end());
      const auto [lo, hi] = pick_range(kw_nums, width, rng);
      measure("keyword_range", QueryExpr::keyword_range({w}, lo, hi));
    }
  }
  return out;
}

std::vector<BenchRecord> run_query_cost_bench(const ExperimentConfig& cfg) {
  if (cfg.experiment != Experiment::query_cost) throw ConfigError("not a query_cost config");
  cfg.validate();
  const Chain chain = make_chain(cfg.objects, cfg.objects_per_block, cfg.keyword_universe, cfg.seed);
  const std::string ts = now_utc();
  std::vector<BenchRecord> rows;
  for (const QueryCost& c : run_query_cost_points(chain, cfg.selectivities, cfg.repetitions, cfg.seed)) {
    if (!c.accepted) throw Error("honest answer rejected in the query benchmark");
    for (const char* metric : {"sp_seconds", "verify_seconds"}) {
      BenchRecord rec;
      rec.experiment = "query_cost";
      rec.params = {{"query", c.query},
                    {"selectivity", num(c.selectivity)},
                    {"n_objects", num(cfg.objects)},
                    {"result_size", num(c.result_size)}};
      rec.metric = metric;
      rec.value = std::string_view(metric) == "sp_seconds" ? c.sp_seconds : c.verify_seconds;
      rec.trials = cfg.repetitions;
      rec.timestamp = ts;
      rows.push_back(std::move(rec));
    }
  }
  return rows;
}

std::vector<BenchRecord> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::detection: return run_detection_experiment(cfg);
    case Experiment::adaptive_detection: return run_adaptive_experiment(cfg);
    case Experiment::verify_cost: return run_verify_cost_bench(cfg);
    case Experiment::query_cost: return run_query_cost_bench(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace chainq::bench
