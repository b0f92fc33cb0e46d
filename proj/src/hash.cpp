#include "chainq/hash.hpp"

#include <cstring>

#include "chainq/detail/kernels_impl.hpp"
#include "chainq/errors.hpp"

namespace chainq {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(bytes.size() * 2, '0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    s[2 * i] = kDigits[bytes[i] >> 4];
    s[2 * i + 1] = kDigits[bytes[i] & 0xF];
  }
  return s;
}

Hash hash_from_hex(std::string_view hex) {
  if (hex.size() != 64) throw FormatError("expected 64 hex digits, got " + std::to_string(hex.size()));
  Hash h;
  for (std::size_t i = 0; i < 32; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw FormatError("invalid hex digit in digest");
    h[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return h;
}

U256 U256::from_be_bytes(const Hash& bytes) {
  U256 v;
  for (int limb = 0; limb < 4; ++limb) {
    std::uint64_t x = 0;
    const int base = 32 - 8 * (limb + 1);
    for (int i = 0; i < 8; ++i) x = (x << 8) | bytes[base + i];
    v.limbs_[limb] = x;
  }
  return v;
}

U256 U256::from_limbs(const std::array<std::uint64_t, 4>& little_endian_limbs) {
  U256 v;
  v.limbs_ = little_endian_limbs;
  return v;
}

Hash U256::to_be_bytes() const {
  Hash out;
  for (int limb = 0; limb < 4; ++limb) {
    const int base = 32 - 8 * (limb + 1);
    for (int i = 0; i < 8; ++i) out[base + i] = static_cast<std::uint8_t>(limbs_[limb] >> (56 - 8 * i));
  }
  return out;
}

std::string U256::hex() const {
  const Hash b = to_be_bytes();
  return to_hex(b);
}

U256 U256::from_hex(std::string_view hex) { return from_be_bytes(hash_from_hex(hex)); }

U256& U256::operator+=(const U256& rhs) {
  unsigned carry = 0;
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t a = limbs_[i];
    const std::uint64_t s = a + rhs.limbs_[i];
    const std::uint64_t t = s + carry;
    carry = (s < a) + (t < s);
    limbs_[i] = t;
  }
  return *this;
}

U256& U256::operator-=(const U256& rhs) {
  unsigned borrow = 0;
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t a = limbs_[i];
    const std::uint64_t d = a - rhs.limbs_[i];
    const std::uint64_t t = d - borrow;
    borrow = (a < rhs.limbs_[i]) + (d < borrow);
    limbs_[i] = t;
  }
  return *this;
}

Sha256::Sha256() : state_(kernels::kSha256InitialState) {}

Sha256& Sha256::update(std::span<const std::uint8_t> data) {
  total_bytes_ += data.size();
  std::size_t i = 0;
  if (buffered_ > 0) {
    const std::size_t take = std::min(data.size(), 64 - buffered_);
    std::memcpy(buffer_.data() + buffered_, data.data(), take);
    buffered_ += take;
    i = take;
    if (buffered_ < 64) return *this;
    kernels::scalar::sha256_compress(state_, buffer_.data());
    buffered_ = 0;
  }
  for (; i + 64 <= data.size(); i += 64) kernels::scalar::sha256_compress(state_, data.data() + i);
  if (i < data.size()) {
    std::memcpy(buffer_.data(), data.data() + i, data.size() - i);
    buffered_ = data.size() - i;
  }
  return *this;
}

Sha256& Sha256::update(const U256& v) {
  const Hash b = v.to_be_bytes();
  return update(std::span<const std::uint8_t>(b));
}

Hash Sha256::finalize() {
  const std::uint64_t bits = total_bytes_ * 8;
  buffer_[buffered_++] = 0x80;
  if (buffered_ > 56) {
    std::memset(buffer_.data() + buffered_, 0, 64 - buffered_);
    kernels::scalar::sha256_compress(state_, buffer_.data());
    buffered_ = 0;
  }
  std::memset(buffer_.data() + buffered_, 0, 56 - buffered_);
  for (int i = 0; i < 8; ++i) buffer_[56 + i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
  kernels::scalar::sha256_compress(state_, buffer_.data());
  Hash out;
  for (int i = 0; i < 8; ++i) {
    out[4 * i] = static_cast<std::uint8_t>(state_[i] >> 24);
    out[4 * i + 1] = static_cast<std::uint8_t>(state_[i] >> 16);
    out[4 * i + 2] = static_cast<std::uint8_t>(state_[i] >> 8);
    out[4 * i + 3] = static_cast<std::uint8_t>(state_[i]);
  }
  *this = Sha256();
  return out;
}

Hash sha256(std::span<const std::uint8_t> data) { return Sha256().update(data).finalize(); }

Hash hash_pair(const Hash& a, const Hash& b) { return Sha256().update(a).update(b).finalize(); }

}  // namespace chainq
