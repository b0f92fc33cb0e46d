// chainq: command-line driver over the library.
//
// Exit codes: 0 success/accept, 1 verification reject, 2 usage or
// configuration error, 3 I/O or other runtime failure.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chainq/bench.hpp"
#include "chainq/codec.hpp"
#include "chainq/errors.hpp"
#include "chainq/kernels.hpp"
#include "chainq/snapshot.hpp"

using namespace chainq;

namespace {

constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

std::pair<std::uint64_t, std::uint64_t> parse_span(const std::string& s, const char* what) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError(std::string(what) + " must be lo:hi");
  try {
    std::size_t a = 0, b = 0;
    const std::string lo = s.substr(0, colon), hi = s.substr(colon + 1);
    const std::uint64_t l = std::stoull(lo, &a), h = std::stoull(hi, &b);
    if (a != lo.size() || b != hi.size()) throw std::invalid_argument(s);
    if (h < l) throw ConfigError(std::string(what) + ": lo exceeds hi");
    return {l, h};
  } catch (const std::logic_error&) {
    throw ConfigError(std::string(what) + " must be lo:hi with unsigned integers");
  }
}

std::vector<IndexKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<IndexKind> kinds;
  for (const auto& n : names) {
    std::stringstream ss(n);
    for (std::string part; std::getline(ss, part, ',');) {
      if (!part.empty()) kinds.push_back(parse_index_kind(part));
    }
  }
  std::sort(kinds.begin(), kinds.end());
  kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
  if (kinds.empty()) throw ConfigError("at least one index kind is required");
  return kinds;
}

void print_object(std::ostream& out, const DataObject& o) {
  out << "id=" << o.id << " ts=" << o.ts << " num=" << o.num_attr << " disc=" << o.disc_attr << " kw=";
  for (std::size_t i = 0; i < o.keywords.size(); ++i) out << (i ? "," : "") << o.keywords[i];
  out << '\n';
}

void print_digest(std::ostream& out, const DigestBoardEntry& d) {
  out << d.sp_id << ' ' << d.tree_id.str() << " blocks=" << d.block_range.first << ".." << d.block_range.last
      << " count=" << d.object_count << " root=" << to_hex(d.root_hash).substr(0, 16) << '\n';
}

// ---------------------------------------------------------------------------

struct GenChainOpts {
  ChainParams params;
  std::string out;
};

int cmd_gen_chain(const GenChainOpts& o) {
  if (o.params.n_blocks == 0 || o.params.objects_per_block == 0) throw ConfigError("blocks and objs must be positive");
  if (o.params.keyword_universe < 20) throw ConfigError("keyword universe must be at least 20");
  const Chain chain = generate_chain(o.params);
  save_chain(o.out, chain);
  std::cout << "wrote " << chain.object_count() << " objects in " << chain.block_count() << " blocks to " << o.out
            << '\n';
  return 0;
}

int cmd_inspect(const std::string& path) {
  if (std::filesystem::is_directory(path)) {
    const Snapshot s = load_snapshot(path);
    std::cout << "snapshot " << (s.label.empty() ? path : s.label) << ": sp=" << s.sp->sp_id()
              << " objects=" << s.chain->object_count() << " blocks=" << s.chain->block_count()
              << " fanout=" << s.sp->params().fanout << " maxsize=" << s.sp->params().maxsize << '\n';
    std::cout << "omitted=" << s.sp->faults().omitted.size() << " misplaced=" << s.sp->faults().misplaced.size()
              << " forge_sums=" << (s.sp->faults().forge_sums ? "yes" : "no")
              << " drop_ids=" << s.sp->drop_ids.size() << '\n';
    for (IndexKind k : s.kinds) {
      for (const auto& d : s.board.live_entries(s.sp->sp_id(), k)) print_digest(std::cout, d);
    }
    return 0;
  }
  const Chain chain = load_chain(path);
  std::uint32_t max_kw = 0, max_disc = 0, min_num = kNumAttrMax, max_num = 0;
  for (const DataObject& o : chain.objects()) {
    if (!o.keywords.empty()) max_kw = std::max(max_kw, o.keywords.back());
    max_disc = std::max(max_disc, o.disc_attr);
    min_num = std::min(min_num, o.num_attr);
    max_num = std::max(max_num, o.num_attr);
  }
  std::cout << "blocks=" << chain.block_count() << " objects=" << chain.object_count() << '\n'
            << "max_keyword=" << max_kw << " max_disc=" << max_disc << " num_range=" << min_num << ".." << max_num
            << '\n'
            << "headers=" << (chain.verify_headers() ? "ok" : "BROKEN") << '\n';
  return chain.verify_headers() ? 0 : kExitReject;
}

struct SpBuildOpts {
  std::string chain;
  std::string out;
  std::vector<std::string> index = {"num"};
  std::uint64_t maxsize = kDefaultMaxsize;
  std::uint32_t fanout = MbTree::kDefaultFanout;
  double omit = 0;
  double misplace = 0;
  std::uint32_t concentrated = 0;
  bool forge_sums = false;
  std::uint32_t forge_level = 0;
  std::vector<std::uint64_t> drop_ids;
  std::uint64_t seed = 1;
  std::string sp_id = "sp";
};

int cmd_sp_build(const SpBuildOpts& o) {
  const std::vector<IndexKind> kinds = parse_kinds(o.index);
  if (o.omit > 0 && o.misplace > 0) throw ConfigError("--omit and --misplace are exclusive");
  if (o.concentrated > 0 && !(o.omit > 0)) throw ConfigError("--concentrated needs --omit");
  if (o.forge_sums && !(o.omit > 0)) throw ConfigError("--forge-sums needs --omit");
  FaultPlan plan;
  plan.rng_seed = o.seed;
  plan.forge_level = o.forge_level;
  if (o.omit > 0) {
    plan.k = o.omit;
    plan.strategy = o.forge_sums         ? Strategy::forge_sums
                    : o.concentrated > 0 ? Strategy::concentrated_omit
                                         : Strategy::random_omit;
    if (o.concentrated > 0) plan.n_attack_ranges = o.concentrated;
  } else if (o.misplace > 0) {
    plan.k = o.misplace;
    plan.strategy = Strategy::random_misplace;
  }
  plan.validate();

  const Chain chain = load_chain(o.chain);
  const ForestParams params{o.fanout, o.maxsize};
  FaultSet faults = plan.strategy == Strategy::honest ? FaultSet{} : plan_faults(chain, plan);
  ServiceProvider sp(o.sp_id, chain, params, std::move(faults));
  sp.drop_ids = o.drop_ids;
  sp.build(kinds);
  DigestBoard board;
  sp.publish(board);
  save_snapshot(o.out, chain, sp, board, kinds, std::string(strategy_name(plan.strategy)));
  std::cout << "snapshot " << o.out << ": " << sp.faults().omitted.size() << " omitted, "
            << sp.faults().misplaced.size() << " misplaced\n";
  for (IndexKind k : kinds) {
    for (const auto& d : board.live_entries(o.sp_id, k)) print_digest(std::cout, d);
  }
  return 0;
}

int cmd_audit(const std::string& dir) {
  const Snapshot s = load_snapshot(dir);
  bool all = true;
  for (IndexKind k : s.kinds) {
    for (const auto& d : s.board.live_entries(s.sp->sp_id(), k)) {
      const bool ok = audit_digest(*s.chain, d, s.sp->params().maxsize);
      all = all && ok;
      std::cout << (ok ? "pass " : "FAIL ") << d.tree_id.str() << " count=" << d.object_count << '\n';
    }
  }
  std::cout << (all ? "audit: pass\n" : "audit: fail\n");
  return all ? 0 : kExitReject;
}

struct ChallengeOpts {
  std::string snapshot;
  double k = 0.001;
  std::optional<double> pd;
  std::optional<double> lambda;
  std::optional<double> fraction;
  std::uint32_t n_ranges = 10;
  std::uint64_t min_volume = 1;
  std::uint32_t detections = 1;
  std::string index = "num";
  std::uint64_t seed = 1;
  bool json = false;
};

int cmd_challenge(const ChallengeOpts& o) {
  if (o.pd && o.lambda) throw ConfigError("--pd and --lambda are exclusive");
  Snapshot s = load_snapshot(o.snapshot);
  const IndexKind kind = parse_index_kind(o.index);
  if (!s.sp->has(kind)) throw ConfigError("snapshot has no " + o.index + " index");
  FullNode node(*s.chain, s.sp->params().maxsize);
  ChallengeReport report;
  const auto live = s.board.live_entries(s.sp->sp_id(), kind);
  for (const auto& d : live) {
    ChallengeConfig cfg;
    cfg.index = kind;
    cfg.detections = o.detections;
    cfg.seed = o.seed;
    if (o.fraction) {
      if (!(*o.fraction > 0 && *o.fraction <= 1)) throw ConfigError("--fraction must be in (0, 1]");
      const auto [first, end] = node.positions(d);
      const auto n = std::max<std::uint64_t>(1, std::llround(*o.fraction * static_cast<double>(end - first)));
      cfg.plan = TokenPlan::with_volume(n, o.n_ranges, o.min_volume);
    } else if (o.lambda) {
      cfg.plan = TokenPlan::for_lambda(o.k, *o.lambda, o.n_ranges, o.min_volume);
    } else {
      cfg.plan = TokenPlan::for_detection(o.k, o.pd.value_or(0.99), o.n_ranges, o.min_volume);
    }
    DigestBoard one;
    one.publish(d);
    const ChallengeReport r = challenge_sp(node, *s.sp, one, cfg);
    report.verdicts.insert(report.verdicts.end(), r.verdicts.begin(), r.verdicts.end());
  }
  for (const auto& v : report.verdicts) {
    if (o.json) {
      std::cout << to_json(v).dump() << '\n';
      continue;
    }
    std::cout << TreeId{v.token.index, v.token.segment}.str() << " ranges=" << v.token.ranges.size()
              << " objects=" << v.token.expected_total << ' ' << (v.accepted() ? "accept" : "reject");
    if (v.rejection) std::cout << " (" << reason_name(v.rejection->reason) << ": " << v.rejection->detail << ')';
    std::cout << '\n';
  }
  const bool ok = report.all_accepted();
  if (!o.json) std::cout << "challenge: " << (ok ? "all accepted" : "rejected") << '\n';
  return ok ? 0 : kExitReject;
}

struct QueryOpts {
  std::string snapshot;
  std::optional<std::string> range;
  std::optional<std::string> disc;
  std::vector<std::uint32_t> keywords;
  std::optional<std::uint64_t> object;
  std::string index = "num";
  std::optional<std::uint32_t> segment;
  std::string answer_out;
};

int cmd_query(const QueryOpts& o) {
  QueryExpr expr;
  const IndexKind index = parse_index_kind(o.index);
  const std::pair<std::uint64_t, std::uint64_t> all{0, kU64Max};
  const auto range = o.range ? parse_span(*o.range, "--range") : all;
  if (o.object) {
    if (o.range || o.disc || !o.keywords.empty()) throw ConfigError("--object excludes other predicates");
    expr = QueryExpr::object_query(index, *o.object);
  } else if (!o.keywords.empty()) {
    if (o.disc) throw ConfigError("--keywords cannot be combined with --disc");
    expr = o.range ? QueryExpr::keyword_range(o.keywords, range.first, range.second)
                   : QueryExpr::keyword_query(o.keywords);
  } else if (o.disc) {
    const auto d = parse_span(*o.disc, "--disc");
    expr = QueryExpr::multidim(d.first, d.second, range.first, range.second);
  } else if (o.range) {
    expr = QueryExpr::range_query(index, range.first, range.second);
  } else {
    throw ConfigError("give one of --range, --object, --keywords or --disc");
  }
  expr.segment = o.segment;
  expr.validate();

  Snapshot s = load_snapshot(o.snapshot);
  const IndexKind need = required_index(expr);
  if (!s.sp->has(need)) throw ConfigError(std::string("snapshot has no ") + std::string(index_name(need)) + " index");
  const QueryAnswer ans = *s.sp->answer(expr);
  if (!o.answer_out.empty()) {
    std::ofstream out(o.answer_out);
    if (!out) throw IoError("cannot write " + o.answer_out);
    out << Json{{"query", to_json(expr)}, {"answer", to_json(ans)}}.dump(1) << '\n';
  }
  for (const DataObject& obj : ans.result) print_object(std::cout, obj);
  const auto live = s.board.live_entries(s.sp->sp_id(), need);
  const VerifyOutcome v = verify_answer(ans, expr, live);
  std::cout << ans.result.size() << " objects\n";
  if (v.accepted()) {
    std::cout << "verdict: accept\n";
    return 0;
  }
  std::cout << "verdict: reject (" << reason_name(v.rejection->reason) << ": " << v.rejection->detail << ")\n";
  return kExitReject;
}

struct FixtureOpts {
  std::string name;
  std::string out;
  std::vector<std::uint64_t> drop_ids;
};

int cmd_fixture(const FixtureOpts& o) {
  char variant = 0;
  if (o.name == "tree-a") variant = 'a';
  if (o.name == "tree-b") variant = 'b';
  if (!variant) throw ConfigError("unknown fixture '" + o.name + "' (tree-a, tree-b)");
  Fixture fx = make_example_fixture(variant);
  fx.sp->drop_ids = o.drop_ids;
  save_snapshot(o.out, *fx.chain, *fx.sp, fx.board, {IndexKind::numeric}, o.name);
  std::cout << "fixture " << o.name << " written to " << o.out << '\n';
  return 0;
}

struct BenchOpts {
  std::string experiment;
  bool full_scale = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> trials;
  std::optional<std::uint64_t> objects;
  std::optional<unsigned> threads;
  std::string config;
  std::string out;
};

void apply_config_file(bench::ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  Json j;
  try {
    j = Json::parse(in);
    if (j.contains("objects")) c.objects = j["objects"].get<std::uint64_t>();
    if (j.contains("objects_per_block")) c.objects_per_block = j["objects_per_block"].get<std::uint64_t>();
    if (j.contains("maxsize")) c.maxsize = j["maxsize"].get<std::uint64_t>();
    if (j.contains("keyword_universe")) c.keyword_universe = j["keyword_universe"].get<std::uint32_t>();
    if (j.contains("strategy")) c.adversary.strategy = parse_strategy(j["strategy"].get<std::string>());
    if (j.contains("n_attack_ranges")) c.adversary.n_attack_ranges = j["n_attack_ranges"].get<std::uint32_t>();
    if (j.contains("ks")) c.ks = j["ks"].get<std::vector<double>>();
    if (j.contains("fractions")) c.fractions = j["fractions"].get<std::vector<double>>();
    if (j.contains("n_ranges")) c.n_ranges = j["n_ranges"].get<std::uint32_t>();
    if (j.contains("n_ranges_grid")) c.n_ranges_grid = j["n_ranges_grid"].get<std::vector<std::uint32_t>>();
    if (j.contains("detections")) c.detections = j["detections"].get<std::vector<std::uint32_t>>();
    if (j.contains("min_range_volume")) c.min_range_volume = j["min_range_volume"].get<std::uint64_t>();
    if (j.contains("total_objects")) c.total_objects = j["total_objects"].get<std::uint64_t>();
    if (j.contains("update_sizes")) c.update_sizes = j["update_sizes"].get<std::vector<std::uint64_t>>();
    if (j.contains("bundles")) {
      c.bundles.clear();
      for (const auto& b : j["bundles"]) c.bundles.push_back(parse_kinds(b.get<std::vector<std::string>>()));
    }
    if (j.contains("selectivities")) c.selectivities = j["selectivities"].get<std::vector<double>>();
    if (j.contains("trials")) c.trials = j["trials"].get<std::uint32_t>();
    if (j.contains("repetitions")) c.repetitions = j["repetitions"].get<std::uint32_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad bench config: ") + e.what());
  }
}

int cmd_bench(const BenchOpts& o) {
  const bench::Experiment e = bench::parse_experiment(o.experiment);
  bench::ExperimentConfig cfg = bench::ExperimentConfig::defaults(e, o.full_scale);
  if (!o.config.empty()) apply_config_file(cfg, o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.objects) cfg.objects = *o.objects;
  if (o.threads) cfg.threads = *o.threads;
  const auto rows = bench::run_experiment(cfg);
  if (o.out.empty()) {
    bench::write_csv(std::cout, e, rows);
  } else {
    std::ofstream out(o.out);
    if (!out) throw IoError("cannot write " + o.out);
    bench::write_csv(out, e, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainq: verifiable queries over a simulated chain with challenge-based ADS audits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "chainq 1.0");

  GenChainOpts gen;
  auto* c_gen = app.add_subcommand("gen-chain", "generate a synthetic chain file");
  c_gen->add_option("--seed", gen.params.seed, "generator seed");
  c_gen->add_option("--blocks", gen.params.n_blocks, "number of blocks");
  c_gen->add_option("--objs", gen.params.objects_per_block, "objects per block");
  c_gen->add_option("--keywords", gen.params.keyword_universe, "keyword universe size");
  c_gen->add_option("--disc", gen.params.disc_cardinality, "discrete attribute cardinality");
  c_gen->add_option("-o,--out", gen.out, "output chain file")->required();

  std::string inspect_path;
  auto* c_inspect = app.add_subcommand("inspect", "summarize a chain file or snapshot directory");
  c_inspect->add_option("path", inspect_path)->required();

  SpBuildOpts spb;
  auto* c_spb = app.add_subcommand("sp-build", "build an SP's forests and publish digests into a snapshot");
  c_spb->add_option("--chain", spb.chain, "chain file")->required();
  c_spb->add_option("-o,--out", spb.out, "snapshot directory")->required();
  c_spb->add_option("--index", spb.index, "index kinds: ts,num,composite,keyword,disc");
  c_spb->add_option("--maxsize", spb.maxsize, "objects per tree before rollover")->check(CLI::PositiveNumber);
  c_spb->add_option("--fanout", spb.fanout, "MB-tree fanout")->check(CLI::Range(3u, 4096u));
  c_spb->add_option("--omit", spb.omit, "omit a fraction k of objects")->check(CLI::Range(0.0, 1.0));
  c_spb->add_option("--misplace", spb.misplace, "misplace a fraction k of objects")->check(CLI::Range(0.0, 1.0));
  c_spb->add_option("--concentrated", spb.concentrated, "omit in this many contiguous key runs");
  c_spb->add_flag("--forge-sums", spb.forge_sums, "keep honest hash sums and counts over omitted objects");
  c_spb->add_option("--forge-level", spb.forge_level, "tree level whose sums are forged");
  c_spb->add_option("--drop-ids", spb.drop_ids, "ids silently dropped from every answer")->delimiter(',');
  c_spb->add_option("--seed", spb.seed, "adversary seed");
  c_spb->add_option("--sp-id", spb.sp_id, "service provider id");

  std::string audit_dir;
  auto* c_audit = app.add_subcommand("audit", "hash-sum audit of every live digest");
  c_audit->add_option("snapshot", audit_dir)->required();

  ChallengeOpts ch;
  auto* c_ch = app.add_subcommand("challenge", "run challenge rounds against a snapshot");
  c_ch->add_option("snapshot", ch.snapshot)->required();
  c_ch->add_option("--k", ch.k, "omission fraction the token must catch");
  c_ch->add_option("--pd", ch.pd, "target detection probability");
  c_ch->add_option("--lambda", ch.lambda, "security parameter: detection 1 - 2^-lambda");
  c_ch->add_option("--fraction", ch.fraction, "token volume as a fraction of the challenged tree");
  c_ch->add_option("--n-ranges", ch.n_ranges, "ranges per token")->check(CLI::PositiveNumber);
  c_ch->add_option("--min-volume", ch.min_volume, "minimum objects per range")->check(CLI::PositiveNumber);
  c_ch->add_option("--detections", ch.detections, "independent tokens per tree");
  c_ch->add_option("--index", ch.index, "challenged index (ts, num, disc)");
  c_ch->add_option("--seed", ch.seed, "challenge seed");
  c_ch->add_flag("--json", ch.json, "one JSON verdict per line");

  QueryOpts q;
  auto* c_q = app.add_subcommand("query", "answer and verify a query");
  c_q->add_option("snapshot", q.snapshot)->required();
  c_q->add_option("--range", q.range, "primary key range lo:hi");
  c_q->add_option("--disc", q.disc, "discrete attribute range lo:hi (composite query)");
  c_q->add_option("--keywords", q.keywords, "required keywords")->delimiter(',');
  c_q->add_option("--object", q.object, "exact key value");
  c_q->add_option("--index", q.index, "index for --range/--object");
  c_q->add_option("--segment", q.segment, "restrict to one tree");
  c_q->add_option("--answer-out", q.answer_out, "write the answer envelope as JSON");

  FixtureOpts fx;
  auto* c_fx = app.add_subcommand("fixture", "write a worked-example snapshot");
  c_fx->add_option("name", fx.name, "tree-a or tree-b")->required();
  c_fx->add_option("-o,--out", fx.out, "snapshot directory")->required();
  c_fx->add_option("--drop-ids", fx.drop_ids, "ids the SP drops from answers")->delimiter(',');

  BenchOpts bo;
  auto* c_bench = app.add_subcommand("bench", "run an experiment and print CSV");
  c_bench->add_option("experiment", bo.experiment, "detection, adaptive_detection, verify_cost, query_cost")
      ->required();
  c_bench->add_flag("--full-scale", bo.full_scale, "200,000 objects per round and 1000 trials");
  c_bench->add_option("--seed", bo.seed, "master seed");
  c_bench->add_option("--trials", bo.trials, "trials per point")->check(CLI::PositiveNumber);
  c_bench->add_option("--objects", bo.objects, "objects per round")->check(CLI::PositiveNumber);
  c_bench->add_option("--threads", bo.threads, "worker threads (0: all cores)");
  c_bench->add_option("--config", bo.config, "JSON config file");
  c_bench->add_option("-o,--out", bo.out, "CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_gen) return cmd_gen_chain(gen);
    if (*c_inspect) return cmd_inspect(inspect_path);
    if (*c_spb) return cmd_sp_build(spb);
    if (*c_audit) return cmd_audit(audit_dir);
    if (*c_ch) return cmd_challenge(ch);
    if (*c_q) return cmd_query(q);
    if (*c_fx) return cmd_fixture(fx);
    if (*c_bench) return cmd_bench(bo);
  } catch (const InfeasiblePlanError& e) {
    std::cerr << "error: " << e.what() << " (required detections: " << e.required_detections() << ")\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const QueryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
