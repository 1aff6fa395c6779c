#pragma once

#include <cstdint>
#include <string_view>

namespace anderson {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based hash of (seed, stream, counter). Every random quantity in the
/// library is a pure function of such a triple, so the evaluation order of
/// realizations or sites never changes a result.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t counter) noexcept {
  std::uint64_t x = mix64(seed ^ 0xD1B54A32D192ED03ULL);
  x = mix64(x ^ (stream * 0xA24BAED4963EE407ULL));
  x = mix64(x ^ (counter * 0x9FB21C651E98DF25ULL));
  return x;
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Derives an independent master seed for a named sub-experiment.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(seed ^ mix64(h));
}

}  // namespace anderson
