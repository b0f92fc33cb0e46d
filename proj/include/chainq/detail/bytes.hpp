#pragma once

// Big-endian field helpers shared by the binary formats.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "chainq/errors.hpp"
#include "chainq/hash.hpp"

namespace chainq::detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 7; i >= 0; --i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void hash(const Hash& h) { buf_.append(reinterpret_cast<const char*>(h.data()), h.size()); }
  void u256(const U256& v) { hash(v.to_be_bytes()); }
  const std::string& bytes() const { return buf_; }
  void clear() { buf_.clear(); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
    return v;
  }
  Hash hash() {
    need(32);
    Hash h;
    for (auto& b : h) b = static_cast<std::uint8_t>(data_[pos_++]);
    return h;
  }
  U256 u256() { return U256::from_be_bytes(hash()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("truncated record");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void write_record(std::ostream& out, const std::string& payload) {
  ByteWriter len;
  len.u32(static_cast<std::uint32_t>(payload.size()));
  out.write(len.bytes().data(), static_cast<std::streamsize>(len.bytes().size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

inline std::string read_record(std::istream& in) {
  char len_bytes[4];
  if (!in.read(len_bytes, 4)) throw FormatError("truncated record length");
  const std::uint32_t len = ByteReader(std::string_view(len_bytes, 4)).u32();
  if (len > (1u << 28)) throw FormatError("record too large");
  std::string payload(len, '\0');
  if (!in.read(payload.data(), len)) throw FormatError("truncated record body");
  return payload;
}

}  // namespace chainq::detail
