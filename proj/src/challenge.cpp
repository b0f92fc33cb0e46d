#include "chainq/challenge.hpp"

#include <algorithm>
#include <cmath>

#include "chainq/errors.hpp"
#include "chainq/kernels.hpp"
#include "chainq/random.hpp"

namespace chainq {

namespace {

constexpr std::uint64_t kTokenStream = 0x70CE;

void check_k(double k) {
  if (!(k > 0.0 && k < 1.0)) throw ConfigError("omission fraction k must be in (0, 1)");
}

std::uint64_t size_from_log_term(double k, double log_term, double escape) {
  auto n = static_cast<std::uint64_t>(std::ceil(log_term / k));
  if (n == 0) n = 1;
  // Guard the closed form against rounding at exact integers.
  while (attack_success(k, static_cast<double>(n)) > escape) ++n;
  return n;
}

}  // namespace

std::uint64_t token_size(double k, double p_d) {
  check_k(k);
  if (!(p_d > 0.0 && p_d < 1.0)) throw ConfigError("detection probability must be in (0, 1)");
  return size_from_log_term(k, -std::log1p(-p_d), 1.0 - p_d);
}

double pd_from_lambda(double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("security parameter lambda must be positive");
  return 1.0 - std::exp2(-lambda);
}

std::uint64_t token_size_lambda(double k, double lambda) {
  check_k(k);
  if (!(lambda > 0.0 && lambda <= 1024.0)) throw ConfigError("security parameter lambda must be in (0, 1024]");
  return size_from_log_term(k, lambda * std::log(2.0), std::exp2(-lambda));
}

double attack_success(double k, double n) {
  if (!(k > 0.0) || n < 0.0) throw ConfigError("attack_success needs k > 0 and N >= 0");
  return std::exp(-k * n);
}

double attack_success_finite(double k, double n, double x) {
  if (!(k > 0.0) || n < 0.0 || !(x > 0.0)) throw ConfigError("attack_success_finite needs k > 0, N >= 0, x > 0");
  const double ratio = k * n / x;
  if (ratio >= 1.0) return 0.0;
  return std::pow(1.0 - ratio, x);
}

TokenPlan TokenPlan::for_detection(double k, double p_d, std::uint32_t n_ranges, std::uint64_t min_range_volume) {
  TokenPlan p{k, p_d, token_size(k, p_d), n_ranges, min_range_volume};
  p.validate();
  return p;
}

TokenPlan TokenPlan::for_lambda(double k, double lambda, std::uint32_t n_ranges, std::uint64_t min_range_volume) {
  TokenPlan p{k, pd_from_lambda(lambda), token_size_lambda(k, lambda), n_ranges, min_range_volume};
  p.validate();
  return p;
}

TokenPlan TokenPlan::with_volume(std::uint64_t n, std::uint32_t n_ranges, std::uint64_t min_range_volume) {
  TokenPlan p;
  p.k = 0;
  p.p_d = 0;
  p.n = n;
  p.n_ranges = n_ranges;
  p.min_range_volume = min_range_volume;
  p.validate();
  return p;
}

void TokenPlan::validate() const {
  if (n == 0) throw ConfigError("token must cover at least one object");
  if (n_ranges == 0) throw ConfigError("token needs at least one range");
  if (min_range_volume == 0) throw ConfigError("minimum range volume must be positive");
}

std::uint64_t required_detections(std::uint64_t n, std::uint64_t volume) {
  if (volume == 0) throw ConfigError("detection volume must be positive");
  return (n + volume - 1) / volume;
}

QueryExpr DetectingToken::expr(std::size_t i) const {
  QueryExpr e;
  e.kind = QueryKind::range;
  e.index = index;
  e.range = ranges.at(i);
  e.segment = segment;
  return e;
}

DetectingToken select_ranges(std::span<const SortKey> sorted_keys, IndexKind index, std::uint32_t segment,
                             const TokenPlan& plan, std::uint64_t seed) {
  plan.validate();
  if (is_grouped(index)) throw ConfigError("tokens are issued on the ts, num or disc index");
  const std::uint64_t d = sorted_keys.size();
  if (d == 0) throw ConfigError("no objects to challenge");
  std::vector<std::uint64_t> volumes(plan.n_ranges, plan.n / plan.n_ranges);
  for (std::uint64_t i = 0; i < plan.n % plan.n_ranges; ++i) ++volumes[i];
  std::uint64_t total = 0;
  for (auto& v : volumes) {
    v = std::max(v, plan.min_range_volume);
    total += v;
  }
  if (total > d) {
    throw InfeasiblePlanError("token covers " + std::to_string(total) + " objects but the round holds only " +
                                  std::to_string(d) + "; use " + std::to_string(required_detections(total, d)) +
                                  " detections",
                              required_detections(total, d));
  }
  Rng rng(derive_seed(seed, kTokenStream));
  const auto starts = place_disjoint(rng, volumes, d);
  DetectingToken t;
  t.index = index;
  t.segment = segment;
  t.volumes = volumes;
  t.expected_total = total;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    t.ranges.push_back({sorted_keys[starts[i]], sorted_keys[starts[i] + volumes[i] - 1]});
  }
  t.nonce = rng();
  return t;
}

// ---------------------------------------------------------------------------

ServiceProvider::ServiceProvider(std::string sp_id, const Chain& chain, ForestParams params, FaultSet faults)
    : sp_id_(std::move(sp_id)), chain_(&chain), params_(params), faults_(std::move(faults)) {}

void ServiceProvider::build(std::span<const IndexKind> kinds) {
  for (IndexKind k : kinds) forests_.insert_or_assign(k, Forest::build(*chain_, k, params_, faults_));
}

std::vector<DigestBoardEntry> ServiceProvider::sync(std::span<const IndexKind> kinds, std::uint64_t end) {
  if (!faults_.empty() || faults_.forge_sums) throw ConfigError("incremental sync is honest-only");
  std::vector<DigestBoardEntry> changed;
  for (IndexKind k : kinds) {
    auto it = forests_.find(k);
    if (it == forests_.end()) it = forests_.emplace(k, Forest(k, params_)).first;
    for (std::uint32_t s : it->second.insert_batch(*chain_, end)) changed.push_back(it->second.digest(s, sp_id_));
  }
  return changed;
}

void ServiceProvider::adopt(Forest forest) {
  const IndexKind k = forest.kind();
  forests_.insert_or_assign(k, std::move(forest));
}

const Forest& ServiceProvider::forest(IndexKind kind) const {
  auto it = forests_.find(kind);
  if (it == forests_.end()) throw QueryError("SP has no " + std::string(index_name(kind)) + " index");
  return it->second;
}

std::vector<DigestBoardEntry> ServiceProvider::digests() const {
  std::vector<DigestBoardEntry> out;
  for (const auto& [k, f] : forests_) {
    auto d = f.digests(sp_id_);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

void ServiceProvider::publish(DigestBoard& board) const {
  for (const auto& d : digests()) board.publish(d);
}

std::optional<QueryAnswer> ServiceProvider::answer(const QueryExpr& expr) {
  QueryAnswer a = run_query(forest(required_index(expr)), *chain_, expr);
  if (!drop_ids.empty()) drop_from_answer(a, drop_ids);
  return a;
}

ResultPatchingResponder::ResultPatchingResponder(ServiceProvider& inner, const Chain& chain, std::uint64_t maxsize)
    : inner_(inner), chain_(chain), maxsize_(maxsize) {}

std::optional<QueryAnswer> ResultPatchingResponder::answer(const QueryExpr& expr) {
  auto a = inner_.answer(expr);
  if (!a) return a;
  std::uint64_t first = 0;
  std::uint64_t end = chain_.object_count();
  if (expr.segment) {
    first = static_cast<std::uint64_t>(*expr.segment) * maxsize_;
    end = std::min(end, first + maxsize_);
  }
  a->result = brute_force(chain_, first, end, expr);
  return a;
}

// ---------------------------------------------------------------------------

std::pair<std::uint64_t, std::uint64_t> FullNode::positions(const DigestBoardEntry& d) const {
  return segment_positions(chain_, d.tree_id.segment, d.block_range.last, maxsize_);
}

std::span<const SortKey> FullNode::sorted_keys(IndexKind kind, std::uint64_t first, std::uint64_t end) {
  auto key = std::make_tuple(kind, first, end);
  auto it = sorted_.find(key);
  if (it == sorted_.end()) {
    std::vector<SortKey> keys;
    keys.reserve(end - first);
    const auto objects = chain_.objects();
    for (std::uint64_t p = first; p < end; ++p) keys.push_back(sort_key(kind, objects[p]));
    std::sort(keys.begin(), keys.end());
    it = sorted_.emplace(key, std::move(keys)).first;
  }
  return it->second;
}

std::vector<std::uint64_t> FullNode::expected_ids(IndexKind kind, std::uint64_t first, std::uint64_t end,
                                                  const KeyRange& range) const {
  std::span<const std::uint64_t> column;
  switch (kind) {
    case IndexKind::timestamp: column = chain_.ts_column(); break;
    case IndexKind::discrete: column = chain_.disc_column(); break;
    default: column = chain_.num_column(); break;
  }
  std::vector<std::uint32_t> hits;
  kernels::filter_range(column.subspan(first, end - first), range.lo.key, range.hi.key, hits);
  const auto objects = chain_.objects();
  std::vector<std::uint64_t> ids;
  ids.reserve(hits.size());
  for (std::uint32_t i : hits) {
    const DataObject& o = objects[first + i];
    if (range.contains(sort_key(kind, o))) ids.push_back(o.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

ChallengeVerdict FullNode::run_challenge(Responder& sp, const DetectingToken& token,
                                         const DigestBoardEntry& digest) const {
  ChallengeVerdict v;
  v.sp_id = sp.sp_id();
  v.token = token;
  v.result_correct = true;
  v.proof_valid = true;
  const auto [first, end] = positions(digest);
  auto note = [&](RejectReason r, std::string detail) {
    if (!v.rejection) v.rejection = Rejection{r, std::move(detail)};
  };
  for (std::size_t i = 0; i < token.ranges.size(); ++i) {
    const QueryExpr expr = token.expr(i);
    std::optional<QueryAnswer> ans;
    try {
      ans = sp.answer(expr);
    } catch (const Error&) {
      ans.reset();
    }
    if (!ans) {
      v.responded = false;
      note(RejectReason::unresponsive, "SP did not answer range " + std::to_string(i));
      return v;
    }
    std::vector<std::uint64_t> got;
    got.reserve(ans->result.size());
    for (const DataObject& o : ans->result) got.push_back(o.id);
    std::sort(got.begin(), got.end());
    if (got != expected_ids(token.index, first, end, token.ranges[i])) {
      v.result_correct = false;
      note(RejectReason::result_mismatch, "result of range " + std::to_string(i) + " differs from the chain");
    }
    const VerifyOutcome out = verify_answer(*ans, expr, std::span<const DigestBoardEntry>(&digest, 1));
    if (!out.accepted()) {
      v.proof_valid = false;
      note(out.rejection->reason, out.rejection->detail);
    }
  }
  return v;
}

bool ChallengeReport::all_accepted() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const ChallengeVerdict& v) { return v.accepted(); });
}

ChallengeReport challenge_sp(FullNode& node, Responder& sp, const DigestBoard& board, const ChallengeConfig& cfg) {
  ChallengeReport report;
  for (const DigestBoardEntry& e : board.live_entries(sp.sp_id(), cfg.index)) {
    const auto [first, end] = node.positions(e);
    const auto keys = node.sorted_keys(cfg.index, first, end);
    for (std::uint32_t d = 0; d < cfg.detections; ++d) {
      const DetectingToken token =
          select_ranges(keys, cfg.index, e.tree_id.segment, cfg.plan, derive_seed(cfg.seed, e.tree_id.segment, d));
      report.verdicts.push_back(node.run_challenge(sp, token, e));
    }
  }
  return report;
}

double combined_detection(std::span<const double> per_round) {
  double escape = 1.0;
  for (double p : per_round) escape *= 1.0 - p;
  return 1.0 - escape;
}

}  // namespace chainq
