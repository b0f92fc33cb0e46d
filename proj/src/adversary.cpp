#include "chainq/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chainq/errors.hpp"
#include "chainq/random.hpp"

namespace chainq {

namespace {

constexpr std::uint64_t kFaultStream = 0xFA;

std::vector<std::uint64_t> sorted_positions(const Chain& chain, std::uint64_t first, std::uint64_t end,
                                            IndexKind kind) {
  std::vector<std::uint64_t> pos(end - first);
  std::iota(pos.begin(), pos.end(), first);
  const auto objects = chain.objects();
  std::sort(pos.begin(), pos.end(),
            [&](std::uint64_t a, std::uint64_t b) { return sort_key(kind, objects[a]) < sort_key(kind, objects[b]); });
  return pos;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::honest: return "honest";
    case Strategy::random_omit: return "random_omit";
    case Strategy::random_misplace: return "random_misplace";
    case Strategy::concentrated_omit: return "concentrated_omit";
    case Strategy::forge_sums: return "forge_sums";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::honest, Strategy::random_omit, Strategy::random_misplace, Strategy::concentrated_omit,
                     Strategy::forge_sums}) {
    if (strategy_name(s) == name) return s;
  }
  throw ConfigError("unknown adversary strategy '" + std::string(name) + "'");
}

void FaultPlan::validate() const {
  if (!(k >= 0.0 && k < 1.0)) throw ConfigError("fault fraction k must be in [0, 1)");
  if (strategy == Strategy::concentrated_omit && n_attack_ranges == 0) {
    throw ConfigError("concentrated omission needs at least one attack range");
  }
  if (is_grouped(cluster_index)) throw ConfigError("faults cluster along the ts, num or disc attribute");
}

std::uint64_t affected_count(double k, std::uint64_t n) {
  return static_cast<std::uint64_t>(std::floor(k * static_cast<double>(n) + 1e-9));
}

FaultSet plan_faults(const Chain& chain, std::uint64_t first, std::uint64_t end, const FaultPlan& plan) {
  plan.validate();
  if (end > chain.object_count() || first > end) throw ConfigError("fault window outside the chain");
  FaultSet faults;
  faults.forge_sums = plan.strategy == Strategy::forge_sums;
  faults.forge_level = plan.forge_level;
  const std::uint64_t n = end - first;
  const std::uint64_t m = affected_count(plan.k, n);
  if (plan.strategy == Strategy::honest || m == 0) return faults;

  Rng rng(derive_seed(plan.rng_seed, kFaultStream));
  switch (plan.strategy) {
    case Strategy::random_omit:
    case Strategy::forge_sums:
      for (std::uint64_t i : sample_distinct(rng, m, n)) faults.omitted.push_back(first + i);
      break;
    case Strategy::random_misplace: {
      const auto sorted = sorted_positions(chain, first, end, plan.cluster_index);
      const auto objects = chain.objects();
      for (std::uint64_t r : sample_distinct(rng, m, n)) {
        const std::uint64_t p = sorted[r];
        const std::uint64_t own = index_value(plan.cluster_index, objects[p]);
        std::uint64_t placed = own;
        // Borrow the key of the object half the key space away.
        for (std::uint64_t shift = n / 2; shift < n / 2 + n && placed == own; ++shift) {
          placed = index_value(plan.cluster_index, objects[sorted[(r + shift) % n]]);
        }
        if (placed != own) faults.misplaced.emplace_back(p, placed);
      }
      break;
    }
    case Strategy::concentrated_omit: {
      const auto sorted = sorted_positions(chain, first, end, plan.cluster_index);
      const std::uint64_t ranges = std::min<std::uint64_t>(plan.n_attack_ranges, m);
      std::vector<std::uint64_t> lengths(ranges, m / ranges);
      for (std::uint64_t i = 0; i < m % ranges; ++i) ++lengths[i];
      const auto starts = place_disjoint(rng, lengths, n);
      for (std::size_t i = 0; i < starts.size(); ++i) {
        for (std::uint64_t j = 0; j < lengths[i]; ++j) faults.omitted.push_back(sorted[starts[i] + j]);
      }
      std::sort(faults.omitted.begin(), faults.omitted.end());
      break;
    }
    case Strategy::honest: break;
  }
  return faults;
}

void drop_from_answer(QueryAnswer& answer, const std::vector<std::uint64_t>& ids) {
  for (std::uint64_t id : ids) {
    const auto it = std::find_if(answer.result.begin(), answer.result.end(),
                                 [&](const DataObject& o) { return o.id == id; });
    if (it == answer.result.end()) continue;
    const auto idx = static_cast<std::uint32_t>(it - answer.result.begin());
    const Hash h = object_hash(*it);
    for (SegmentVO& svo : answer.vos) {
      for (auto& [g, tvo] : svo.trees) {
        for (std::size_t s = 0; s < tvo.inner.size(); ++s) {
          const auto* ref = std::get_if<std::uint32_t>(&tvo.inner[s]);
          if (!ref || *ref != idx) continue;
          std::size_t target = s + (tvo.left ? 1 : 0);
          for (ProofNode& node : tvo.proof.nodes) {
            for (ProofItem& item : node.items) {
              if (item.kind != ProofItem::Kind::revealed) continue;
              if (target-- == 0) {
                item = ProofItem{ProofItem::Kind::pruned_entry, h, U256::from_be_bytes(h), 0};
              }
            }
          }
          tvo.inner.erase(tvo.inner.begin() + static_cast<std::ptrdiff_t>(s));
          break;
        }
      }
    }
    answer.result.erase(it);
    for (SegmentVO& svo : answer.vos) {
      for (auto& [g, tvo] : svo.trees) {
        for (auto& ref : tvo.inner) {
          if (auto* r = std::get_if<std::uint32_t>(&ref); r && *r > idx) --*r;
        }
      }
    }
  }
}

}  // namespace chainq
