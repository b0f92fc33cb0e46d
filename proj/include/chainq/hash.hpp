#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace chainq {

/// A SHA-256 digest.
using Hash = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> bytes);
Hash hash_from_hex(std::string_view hex);

/// Unsigned 256-bit integer with wrap-around (mod 2^256) arithmetic.
///
/// Used as the hash-summation accumulator: a digest is read as a big-endian
/// integer and added modulo 2^256, so the sum is independent of the order
/// in which objects are visited.
class U256 {
 public:
  constexpr U256() = default;
  constexpr explicit U256(std::uint64_t low) : limbs_{low, 0, 0, 0} {}

  static U256 from_be_bytes(const Hash& bytes);
  static U256 from_limbs(const std::array<std::uint64_t, 4>& little_endian_limbs);
  Hash to_be_bytes() const;
  std::string hex() const;
  static U256 from_hex(std::string_view hex);

  U256& operator+=(const U256& rhs);
  U256& operator-=(const U256& rhs);
  friend U256 operator+(U256 a, const U256& b) { return a += b; }
  friend U256 operator-(U256 a, const U256& b) { return a -= b; }

  const std::array<std::uint64_t, 4>& limbs() const { return limbs_; }

  friend bool operator==(const U256&, const U256&) = default;

 private:
  // limbs_[0] is least significant.
  std::array<std::uint64_t, 4> limbs_{};
};

/// Incremental SHA-256 (portable scalar implementation).
class Sha256 {
 public:
  Sha256();
  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(const Hash& h) { return update(std::span<const std::uint8_t>(h)); }
  Sha256& update(const U256& v);
  Hash finalize();

 private:
  std::array<std::uint32_t, 8> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t total_bytes_ = 0;
};

Hash sha256(std::span<const std::uint8_t> data);
inline Hash sha256(std::string_view s) {
  return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// Concatenation hash H(a || b).
Hash hash_pair(const Hash& a, const Hash& b);

}  // namespace chainq
