#pragma once

// Data-parallel inner loops with a portable scalar reference and AVX2
// variants. The active implementation is picked at first use from CPUID and
// can be pinned with force_isa() (tests) or CHAINQ_ISA=scalar|avx2.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "chainq/hash.hpp"

namespace chainq::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA this CPU and build support.
Isa detected_isa();
Isa active_isa();
/// Throws ConfigError if `isa` is not available.
void force_isa(Isa isa);

using ByteView = std::span<const std::uint8_t>;

/// out[i] = SHA-256(messages[i]). Messages may have different lengths.
void sha256_batch(std::span<const ByteView> messages, std::span<Hash> out);

/// Sum of the digests read as big-endian integers, mod 2^256.
U256 sum_hashes(std::span<const Hash> hashes);

/// Appends every i with lo <= keys[i] <= hi to `out` (ascending i).
void filter_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi,
                  std::vector<std::uint32_t>& out);

std::size_t count_in_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi);

}  // namespace chainq::kernels
