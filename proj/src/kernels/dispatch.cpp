#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "chainq/detail/kernels_impl.hpp"
#include "chainq/errors.hpp"

namespace chainq::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(CHAINQ_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() {
  const Isa best = detected_isa();
  if (const char* env = std::getenv("CHAINQ_ISA")) {
    const std::string_view v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && best == Isa::avx2) return Isa::avx2;
  }
  return best;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) {
    throw ConfigError("AVX2 kernels are not available on this CPU/build");
  }
  active().store(isa, std::memory_order_relaxed);
}

void sha256_batch(std::span<const ByteView> messages, std::span<Hash> out) {
  if (out.size() < messages.size()) throw ConfigError("sha256_batch: output span too small");
#if defined(CHAINQ_HAVE_AVX2)
  if (active_isa() == Isa::avx2 && messages.size() >= 4) return avx2::sha256_batch(messages, out);
#endif
  scalar::sha256_batch(messages, out);
}

U256 sum_hashes(std::span<const Hash> hashes) {
#if defined(CHAINQ_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::sum_hashes(hashes);
#endif
  return scalar::sum_hashes(hashes);
}

void filter_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi,
                  std::vector<std::uint32_t>& out) {
#if defined(CHAINQ_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::filter_range(keys, lo, hi, out);
#endif
  scalar::filter_range(keys, lo, hi, out);
}

std::size_t count_in_range(std::span<const std::uint64_t> keys, std::uint64_t lo, std::uint64_t hi) {
#if defined(CHAINQ_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::count_in_range(keys, lo, hi);
#endif
  return scalar::count_in_range(keys, lo, hi);
}

}  // namespace chainq::kernels
