#pragma once

// Per-ISA entry points. Exposed so the equivalence tests can run every
// variant side by side; library code goes through chainq/kernels.hpp.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "chainq/kernels.hpp"

namespace chainq::kernels {

namespace scalar {
void sha256_compress(std::array<std::uint32_t, 8>& state, const std::uint8_t* block);
void sha256_batch(std::span<const ByteView> messages, std::span<Hash> out);
U256 sum_hashes(std::span<const Hash> hashes);
void filter_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi,
                  std::vector<std::uint32_t>& out);
std::size_t count_in_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi);
}  // namespace scalar

#if defined(CHAINQ_HAVE_AVX2)
namespace avx2 {
void sha256_batch(std::span<const ByteView> messages, std::span<Hash> out);
U256 sum_hashes(std::span<const Hash> hashes);
void filter_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi,
                  std::vector<std::uint32_t>& out);
std::size_t count_in_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi);
}  // namespace avx2
#endif

inline constexpr std::array<std::uint32_t, 64> kSha256RoundConstants = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

inline constexpr std::array<std::uint32_t, 8> kSha256InitialState = {
    0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

/// Number of 64-byte blocks after SHA-256 padding.
inline constexpr std::size_t sha256_padded_blocks(std::size_t length) { return (length + 9 + 63) / 64; }

/// Writes the padded `block_index`-th block of `message` into `block`.
inline void sha256_padded_block(ByteView message, std::size_t block_index, std::uint8_t* block) {
  const std::size_t n = message.size();
  const std::size_t total_blocks = sha256_padded_blocks(n);
  const std::size_t begin = block_index * 64;
  for (std::size_t i = 0; i < 64; ++i) {
    const std::size_t pos = begin + i;
    block[i] = pos < n ? message[pos] : (pos == n ? 0x80 : 0);
  }
  if (block_index + 1 == total_blocks) {
    const std::uint64_t bits = static_cast<std::uint64_t>(n) * 8;
    for (int i = 0; i < 8; ++i) block[56 + i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
  }
}

}  // namespace chainq::kernels
