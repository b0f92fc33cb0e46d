#include <array>
#include <cstdint>
#include <cstring>

#include "chainq/detail/kernels_impl.hpp"

namespace chainq::kernels::scalar {

namespace {

constexpr std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

void sha256_compress(std::array<std::uint32_t, 8>& state, const std::uint8_t* block) {
  std::array<std::uint32_t, 64> w;
  for (int i = 0; i < 16; ++i) {
    w[i] = (std::uint32_t{block[4 * i]} << 24) | (std::uint32_t{block[4 * i + 1]} << 16) |
           (std::uint32_t{block[4 * i + 2]} << 8) | std::uint32_t{block[4 * i + 3]};
  }
  for (int i = 16; i < 64; ++i) {
    const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
    const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
    w[i] = w[i - 16] + s0 + w[i - 7] + s1;
  }
  auto [a, b, c, d, e, f, g, h] = state;
  for (int i = 0; i < 64; ++i) {
    const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
    const std::uint32_t ch = (e & f) ^ (~e & g);
    const std::uint32_t t1 = h + s1 + ch + kSha256RoundConstants[i] + w[i];
    const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
    const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
    const std::uint32_t t2 = s0 + maj;
    h = g;
    g = f;
    f = e;
    e = d + t1;
    d = c;
    c = b;
    b = a;
    a = t1 + t2;
  }
  state[0] += a;
  state[1] += b;
  state[2] += c;
  state[3] += d;
  state[4] += e;
  state[5] += f;
  state[6] += g;
  state[7] += h;
}

void sha256_batch(std::span<const ByteView> messages, std::span<Hash> out) {
  std::array<std::uint8_t, 64> block;
  for (std::size_t m = 0; m < messages.size(); ++m) {
    std::array<std::uint32_t, 8> state = kSha256InitialState;
    const std::size_t blocks = sha256_padded_blocks(messages[m].size());
    for (std::size_t b = 0; b < blocks; ++b) {
      if ((b + 1) * 64 <= messages[m].size()) {
        sha256_compress(state, messages[m].data() + b * 64);
      } else {
        sha256_padded_block(messages[m], b, block.data());
        sha256_compress(state, block.data());
      }
    }
    for (int i = 0; i < 8; ++i) {
      out[m][4 * i] = static_cast<std::uint8_t>(state[i] >> 24);
      out[m][4 * i + 1] = static_cast<std::uint8_t>(state[i] >> 16);
      out[m][4 * i + 2] = static_cast<std::uint8_t>(state[i] >> 8);
      out[m][4 * i + 3] = static_cast<std::uint8_t>(state[i]);
    }
  }
}

U256 sum_hashes(std::span<const Hash> hashes) {
  U256 acc;
  for (const Hash& h : hashes) acc += U256::from_be_bytes(h);
  return acc;
}

void filter_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi,
                  std::vector<std::uint32_t>& out) {
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] >= lo && keys[i] <= hi) out.push_back(static_cast<std::uint32_t>(i));
  }
}

std::size_t count_in_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) {
  std::size_t n = 0;
  for (std::uint64_t k : keys) n += (k >= lo && k <= hi) ? 1 : 0;
  return n;
}

}  // namespace chainq::kernels::scalar
