#pragma once

// Dishonest service-provider strategies. A FaultPlan is turned into a
// concrete FaultSet before any challenge randomness exists; the SP then
// builds its forests from that set.

#include <cstdint>
#include <string>
#include <vector>

#include "chainq/chain.hpp"
#include "chainq/forest.hpp"
#include "chainq/query.hpp"

namespace chainq {

enum class Strategy : std::uint8_t { honest, random_omit, random_misplace, concentrated_omit, forge_sums };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct FaultPlan {
  Strategy strategy = Strategy::honest;
  double k = 0.0;
  std::uint32_t n_attack_ranges = 1;
  std::uint64_t rng_seed = 0;
  /// Attribute along which misplacement and concentrated omission operate.
  IndexKind cluster_index = IndexKind::numeric;
  std::uint32_t forge_level = 0;

  void validate() const;
};

/// floor(k * n), the number of affected objects.
std::uint64_t affected_count(double k, std::uint64_t n);

/// Concrete faults over stream positions [first, end).
FaultSet plan_faults(const Chain& chain, std::uint64_t first, std::uint64_t end, const FaultPlan& plan);
inline FaultSet plan_faults(const Chain& chain, const FaultPlan& plan) {
  return plan_faults(chain, 0, chain.object_count(), plan);
}

/// Removes objects with the given ids from an answer's result while
/// keeping the rest of the proof: each dropped record's slot becomes a
/// pruned entry. Models result omission at query time.
void drop_from_answer(QueryAnswer& answer, const std::vector<std::uint64_t>& ids);

}  // namespace chainq
