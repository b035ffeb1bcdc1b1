#pragma once

// Counter-based random stream shared by every seeded component.
//
// Algorithm (fixed, so other implementations can reproduce subsamples):
//   mix64(z)   = SplitMix64 finalizer:
//                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                return z ^ (z >> 31)
//   key        = seed ^ mix64(stream * 0x9E3779B97F4A7C15)   (stream 0 -> key = seed)
//   draw k     = mix64(key + (k + 1) * 0x9E3779B97F4A7C15),  k = 0, 1, 2, ...
//   below(n)   = first draw x with x >= (2^64 mod n), returned as x mod n
//   unit()     = (draw >> 11) * 2^-53
//   normal()   = sqrt(-2 ln(1 - unit())) * cos(2 pi unit())   (two draws, no caching)
//
// All arithmetic is modulo 2^64.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace xfersel {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class counter_rng {
 public:
  explicit counter_rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{seed ^ mix64(stream * golden_gamma)} {}

  std::uint64_t next() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * golden_gamma);
  }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() noexcept;

  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Partial Fisher-Yates: for i in [0, m): j = i + below(n - i), swap(a[i], a[j]).
/// Returns the first m entries in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                    counter_rng& rng);

}  // namespace xfersel
