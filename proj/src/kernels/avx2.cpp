// Compiled with -mavx2. Only reached through the runtime dispatcher after a
// CPUID check, so nothing here may run on a machine without AVX2.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>

#include "chainq/detail/kernels_impl.hpp"

namespace chainq::kernels::avx2 {

namespace {

inline __m256i rotr(__m256i x, int n) {
  return _mm256_or_si256(_mm256_srli_epi32(x, n), _mm256_slli_epi32(x, 32 - n));
}

inline __m256i add(__m256i a, __m256i b) { return _mm256_add_epi32(a, b); }

inline std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// Eight independent SHA-256 states, one per 32-bit lane.
struct Lanes {
  __m256i s[8];
};

void compress8(Lanes& st, const std::array<std::array<std::uint32_t, 8>, 16>& words, __m256i active) {
  __m256i w[16];
  for (int i = 0; i < 16; ++i) w[i] = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(words[i].data()));

  __m256i a = st.s[0], b = st.s[1], c = st.s[2], d = st.s[3];
  __m256i e = st.s[4], f = st.s[5], g = st.s[6], h = st.s[7];

  for (int i = 0; i < 64; ++i) {
    __m256i wi;
    if (i < 16) {
      wi = w[i];
    } else {
      const __m256i w15 = w[(i - 15) & 15];
      const __m256i w2 = w[(i - 2) & 15];
      const __m256i s0 = _mm256_xor_si256(_mm256_xor_si256(rotr(w15, 7), rotr(w15, 18)), _mm256_srli_epi32(w15, 3));
      const __m256i s1 = _mm256_xor_si256(_mm256_xor_si256(rotr(w2, 17), rotr(w2, 19)), _mm256_srli_epi32(w2, 10));
      wi = add(add(w[i & 15], s0), add(w[(i - 7) & 15], s1));
      w[i & 15] = wi;
    }
    const __m256i s1 = _mm256_xor_si256(_mm256_xor_si256(rotr(e, 6), rotr(e, 11)), rotr(e, 25));
    const __m256i ch = _mm256_xor_si256(_mm256_and_si256(e, f), _mm256_andnot_si256(e, g));
    const __m256i k = _mm256_set1_epi32(static_cast<int>(kSha256RoundConstants[i]));
    const __m256i t1 = add(add(add(h, s1), add(ch, k)), wi);
    const __m256i s0 = _mm256_xor_si256(_mm256_xor_si256(rotr(a, 2), rotr(a, 13)), rotr(a, 22));
    const __m256i maj = _mm256_xor_si256(_mm256_xor_si256(_mm256_and_si256(a, b), _mm256_and_si256(a, c)),
                                         _mm256_and_si256(b, c));
    const __m256i t2 = add(s0, maj);
    h = g;
    g = f;
    f = e;
    e = add(d, t1);
    d = c;
    c = b;
    b = a;
    a = add(t1, t2);
  }
  const __m256i next[8] = {a, b, c, d, e, f, g, h};
  for (int i = 0; i < 8; ++i) {
    st.s[i] = _mm256_blendv_epi8(st.s[i], add(st.s[i], next[i]), active);
  }
}

}  // namespace

void sha256_batch(std::span<const ByteView> messages, std::span<Hash> out) {
  const std::size_t n = messages.size();
  // Group messages of equal padded length so lanes rarely idle.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return sha256_padded_blocks(messages[x].size()) < sha256_padded_blocks(messages[y].size());
  });

  std::array<std::array<std::uint32_t, 8>, 16> words;
  std::array<std::uint8_t, 64> block;
  for (std::size_t base = 0; base < n; base += 8) {
    const std::size_t lanes = std::min<std::size_t>(8, n - base);
    std::array<std::size_t, 8> blocks{};
    std::size_t max_blocks = 0;
    for (std::size_t l = 0; l < lanes; ++l) {
      blocks[l] = sha256_padded_blocks(messages[order[base + l]].size());
      max_blocks = std::max(max_blocks, blocks[l]);
    }
    Lanes st;
    for (int i = 0; i < 8; ++i) st.s[i] = _mm256_set1_epi32(static_cast<int>(kSha256InitialState[i]));

    for (std::size_t b = 0; b < max_blocks; ++b) {
      alignas(32) std::array<std::int32_t, 8> mask{};
      for (std::size_t l = 0; l < 8; ++l) {
        if (l < lanes && b < blocks[l]) {
          mask[l] = -1;
          const ByteView msg = messages[order[base + l]];
          const std::uint8_t* src;
          if ((b + 1) * 64 <= msg.size()) {
            src = msg.data() + b * 64;
          } else {
            sha256_padded_block(msg, b, block.data());
            src = block.data();
          }
          for (int i = 0; i < 16; ++i) words[i][l] = load_be32(src + 4 * i);
        } else {
          for (int i = 0; i < 16; ++i) words[i][l] = 0;
        }
      }
      compress8(st, words, _mm256_load_si256(reinterpret_cast<const __m256i*>(mask.data())));
    }

    alignas(32) std::array<std::array<std::uint32_t, 8>, 8> state;
    for (int i = 0; i < 8; ++i) _mm256_store_si256(reinterpret_cast<__m256i*>(state[i].data()), st.s[i]);
    for (std::size_t l = 0; l < lanes; ++l) {
      Hash& h = out[order[base + l]];
      for (int i = 0; i < 8; ++i) {
        const std::uint32_t v = state[i][l];
        h[4 * i] = static_cast<std::uint8_t>(v >> 24);
        h[4 * i + 1] = static_cast<std::uint8_t>(v >> 16);
        h[4 * i + 2] = static_cast<std::uint8_t>(v >> 8);
        h[4 * i + 3] = static_cast<std::uint8_t>(v);
      }
    }
  }
}

U256 sum_hashes(std::span<const Hash> hashes) {
  // Each digest is eight big-endian 32-bit words. Words are accumulated
  // column-wise in 64-bit lanes; carries are resolved once at the end.
  const __m256i bswap = _mm256_setr_epi8(3, 2, 1, 0, 7, 6, 5, 4, 11, 10, 9, 8, 15, 14, 13, 12,
                                         3, 2, 1, 0, 7, 6, 5, 4, 11, 10, 9, 8, 15, 14, 13, 12);
  std::array<unsigned __int128, 8> columns{};
  std::size_t i = 0;
  while (i < hashes.size()) {
    // 64-bit lanes cannot overflow within 2^31 additions of 32-bit words.
    const std::size_t chunk_end = std::min(hashes.size(), i + (std::size_t{1} << 31));
    __m256i acc_hi = _mm256_setzero_si256();  // words 0..3
    __m256i acc_lo = _mm256_setzero_si256();  // words 4..7
    for (; i < chunk_end; ++i) {
      const __m256i v = _mm256_shuffle_epi8(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(hashes[i].data())), bswap);
      acc_hi = _mm256_add_epi64(acc_hi, _mm256_cvtepu32_epi64(_mm256_castsi256_si128(v)));
      acc_lo = _mm256_add_epi64(acc_lo, _mm256_cvtepu32_epi64(_mm256_extracti128_si256(v, 1)));
    }
    alignas(32) std::array<std::uint64_t, 4> hi, lo;
    _mm256_store_si256(reinterpret_cast<__m256i*>(hi.data()), acc_hi);
    _mm256_store_si256(reinterpret_cast<__m256i*>(lo.data()), acc_lo);
    for (int w = 0; w < 4; ++w) {
      columns[w] += hi[w];
      columns[4 + w] += lo[w];
    }
  }
  std::array<std::uint64_t, 4> limbs{};
  unsigned __int128 carry = 0;
  for (int w = 7; w >= 0; --w) {
    const unsigned __int128 t = columns[w] + carry;
    const std::uint64_t word = static_cast<std::uint32_t>(t);
    carry = t >> 32;
    const int bit = 32 * (7 - w);
    limbs[bit / 64] |= word << (bit % 64);
  }
  return U256::from_limbs(limbs);
}

namespace {

// Lane mask of 4 keys with lo <= key <= hi, using (key - lo) <= (hi - lo)
// in unsigned arithmetic; unsigned compare is signed compare after flipping
// the sign bit.
inline int range_mask(__m256i keys, __m256i lo, __m256i width_flipped, __m256i sign) {
  const __m256i d = _mm256_xor_si256(_mm256_sub_epi64(keys, lo), sign);
  const __m256i outside = _mm256_cmpgt_epi64(d, width_flipped);
  return (~_mm256_movemask_pd(_mm256_castsi256_pd(outside))) & 0xF;
}

}  // namespace

void filter_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi,
                  std::vector<std::uint32_t>& out) {
  if (lo > hi) return;
  const __m256i sign = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));
  const __m256i vlo = _mm256_set1_epi64x(static_cast<long long>(lo));
  const __m256i width = _mm256_xor_si256(_mm256_set1_epi64x(static_cast<long long>(hi - lo)), sign);
  std::size_t i = 0;
  for (; i + 4 <= keys.size(); i += 4) {
    int m = range_mask(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(keys.data() + i)), vlo, width, sign);
    while (m) {
      const int bit = __builtin_ctz(static_cast<unsigned>(m));
      out.push_back(static_cast<std::uint32_t>(i + bit));
      m &= m - 1;
    }
  }
  for (; i < keys.size(); ++i) {
    if (keys[i] >= lo && keys[i] <= hi) out.push_back(static_cast<std::uint32_t>(i));
  }
}

std::size_t count_in_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi) return 0;
  const __m256i sign = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));
  const __m256i vlo = _mm256_set1_epi64x(static_cast<long long>(lo));
  const __m256i width = _mm256_xor_si256(_mm256_set1_epi64x(static_cast<long long>(hi - lo)), sign);
  std::size_t n = 0;
  std::size_t i = 0;
  for (; i + 4 <= keys.size(); i += 4) {
    n += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(
        range_mask(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(keys.data() + i)), vlo, width, sign))));
  }
  for (; i < keys.size(); ++i) n += (keys[i] >= lo && keys[i] <= hi) ? 1 : 0;
  return n;
}

}  // namespace chainq::kernels::avx2
