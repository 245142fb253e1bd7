#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace driftlab {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key for the stream identified by (seed, a, b). Typical use: a = replicate
/// or pair index, b = step or particle index.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a = 0,
                                   std::uint64_t b = 0) noexcept {
  std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc908ULL);
  k = mix64(k + 0x9e3779b97f4a7c15ULL * (a + 1));
  k = mix64(k ^ (0xd1b54a32d192ed03ULL * (b + 1)));
  return k;
}

/// Counter-based random stream. Draw n of a stream is a pure function of
/// (key, n), so any replicate can be regenerated without replaying others and
/// results do not depend on how work is scheduled across threads.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}
  constexpr Stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept
      : key_(derive_key(seed, a, b)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return bits_at(counter_++); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return to_unit(bits_at(counter_++)); }

  /// Standard normal by Box-Muller; consumes two counters per draw.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t position() const noexcept { return counter_; }
  constexpr void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  [[nodiscard]] constexpr std::uint64_t bits_at(std::uint64_t n) const noexcept {
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * (n + 1));
  }
  static constexpr double to_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace driftlab
