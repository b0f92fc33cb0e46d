#pragma once

// Challenge-based ADS auditing: token sizing, random range selection,
// service-provider and full-node roles, and verdicts.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainq/adversary.hpp"
#include "chainq/chain.hpp"
#include "chainq/forest.hpp"
#include "chainq/query.hpp"

namespace chainq {

/// ceil((1/k) * ln(1/(1 - p_d))): objects a token must cover so that an SP
/// omitting a fraction k of them escapes with probability at most 1 - p_d.
std::uint64_t token_size(double k, double p_d);
/// Same with p_d = 1 - 2^-lambda.
std::uint64_t token_size_lambda(double k, double lambda);
double pd_from_lambda(double lambda);

/// e^{-kN}.
double attack_success(double k, double n);
/// (1 - kN/x)^x for a round of x objects; 0 once kN/x >= 1.
double attack_success_finite(double k, double n, double x);

struct TokenPlan {
  double k = 0.001;
  double p_d = 0.99;
  std::uint64_t n = 0;  // required covered objects
  std::uint32_t n_ranges = 10;
  std::uint64_t min_range_volume = MbTree::kDefaultFanout;

  static TokenPlan for_detection(double k, double p_d, std::uint32_t n_ranges, std::uint64_t min_range_volume);
  static TokenPlan for_lambda(double k, double lambda, std::uint32_t n_ranges, std::uint64_t min_range_volume);
  /// Fixed volume per token (e.g. 1% of a round), independent of k.
  static TokenPlan with_volume(std::uint64_t n, std::uint32_t n_ranges, std::uint64_t min_range_volume);
  void validate() const;
};

struct DetectingToken {
  IndexKind index = IndexKind::numeric;
  std::uint32_t segment = 0;
  std::vector<KeyRange> ranges;
  std::vector<std::uint64_t> volumes;
  std::uint64_t expected_total = 0;
  std::uint64_t nonce = 0;

  QueryExpr expr(std::size_t i) const;
};

/// Picks `plan.n_ranges` disjoint runs of equal volume (+-1) over the
/// (key, id)-sorted keys of the challenged round. Volumes are raised to
/// the plan's floor when needed. Throws InfeasiblePlanError when the
/// runs cannot fit.
DetectingToken select_ranges(std::span<const SortKey> sorted_keys, IndexKind index, std::uint32_t segment,
                             const TokenPlan& plan, std::uint64_t seed);

/// Number of detections of `volume` objects each needed to cover n.
std::uint64_t required_detections(std::uint64_t n, std::uint64_t volume);

class Responder {
 public:
  virtual ~Responder() = default;
  virtual const std::string& sp_id() const = 0;
  /// nullopt: the SP does not answer.
  virtual std::optional<QueryAnswer> answer(const QueryExpr& expr) = 0;
};

/// A service provider holding forests built over its (possibly faulty)
/// view of the chain.
class ServiceProvider : public Responder {
 public:
  ServiceProvider(std::string sp_id, const Chain& chain, ForestParams params, FaultSet faults = {});

  /// Bulk builds every listed index over the whole chain.
  void build(std::span<const IndexKind> kinds);
  /// Honest incremental sync up to `end`; returns the changed digests.
  std::vector<DigestBoardEntry> sync(std::span<const IndexKind> kinds, std::uint64_t end);

  void adopt(Forest forest);
  const Forest& forest(IndexKind kind) const;
  bool has(IndexKind kind) const { return forests_.count(kind) != 0; }
  std::vector<DigestBoardEntry> digests() const;
  void publish(DigestBoard& board) const;

  const std::string& sp_id() const override { return sp_id_; }
  std::optional<QueryAnswer> answer(const QueryExpr& expr) override;

  /// Ids silently removed from every answer.
  std::vector<std::uint64_t> drop_ids;
  const FaultSet& faults() const { return faults_; }
  const ForestParams& params() const { return params_; }

 private:
  std::string sp_id_;
  const Chain* chain_;
  ForestParams params_;
  FaultSet faults_;
  std::map<IndexKind, Forest> forests_;
};

/// Returns the correct result with its own (mismatched) proof.
class ResultPatchingResponder : public Responder {
 public:
  ResultPatchingResponder(ServiceProvider& inner, const Chain& chain, std::uint64_t maxsize);
  const std::string& sp_id() const override { return inner_.sp_id(); }
  std::optional<QueryAnswer> answer(const QueryExpr& expr) override;

 private:
  ServiceProvider& inner_;
  const Chain& chain_;
  std::uint64_t maxsize_;
};

class SilentResponder : public Responder {
 public:
  explicit SilentResponder(std::string sp_id) : sp_id_(std::move(sp_id)) {}
  const std::string& sp_id() const override { return sp_id_; }
  std::optional<QueryAnswer> answer(const QueryExpr&) override { return std::nullopt; }

 private:
  std::string sp_id_;
};

struct ChallengeVerdict {
  std::string sp_id;
  DetectingToken token;
  bool responded = true;
  bool result_correct = false;
  bool proof_valid = false;
  std::optional<Rejection> rejection;  // first failure
  bool accepted() const { return responded && result_correct && proof_valid; }
};

/// A verifier holding the raw chain.
class FullNode {
 public:
  FullNode(const Chain& chain, std::uint64_t maxsize) : chain_(chain), maxsize_(maxsize) {}

  /// Positions [first, end) of a published tree.
  std::pair<std::uint64_t, std::uint64_t> positions(const DigestBoardEntry& d) const;
  bool audit(const DigestBoardEntry& d) const { return audit_digest(chain_, d, maxsize_); }

  /// (key, id) of positions [first, end) on an index, sorted. Cached.
  std::span<const SortKey> sorted_keys(IndexKind kind, std::uint64_t first, std::uint64_t end);

  /// Known answer for a token range: column scan over the tree's positions.
  std::vector<std::uint64_t> expected_ids(IndexKind kind, std::uint64_t first, std::uint64_t end,
                                          const KeyRange& range) const;

  ChallengeVerdict run_challenge(Responder& sp, const DetectingToken& token, const DigestBoardEntry& digest) const;

  const Chain& chain() const { return chain_; }
  std::uint64_t maxsize() const { return maxsize_; }

 private:
  const Chain& chain_;
  std::uint64_t maxsize_;
  std::map<std::tuple<IndexKind, std::uint64_t, std::uint64_t>, std::vector<SortKey>> sorted_;
};

struct ChallengeConfig {
  TokenPlan plan;
  std::uint32_t detections = 1;
  IndexKind index = IndexKind::numeric;
  std::uint64_t seed = 1;
};

struct ChallengeReport {
  std::vector<ChallengeVerdict> verdicts;
  bool all_accepted() const;
};

/// Runs `detections` independent tokens against every live tree of the
/// configured index that `sp` published.
ChallengeReport challenge_sp(FullNode& node, Responder& sp, const DigestBoard& board, const ChallengeConfig& cfg);

/// 1 - prod(1 - p_i).
double combined_detection(std::span<const double> per_round);

}  // namespace chainq
