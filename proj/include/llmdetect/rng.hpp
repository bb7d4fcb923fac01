#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace llmdetect {

/// Seeded pseudo-random source with a platform-independent output stream.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the C++
/// standard. The standard distributions are *not* portable, so bounded
/// integers and unit reals are derived here from raw 64-bit draws:
///   - uniform_index(n): rejection sampling on the top of the 64-bit range
///     (no modulo bias);
///   - uniform01(): the top 53 bits scaled by 2^-53, giving [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform real in [-bound, bound).
  double symmetric(double bound) { return (2.0 * uniform01() - 1.0) * bound; }

  /// Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Deterministic child seed for an independent stream (splitmix64 finalizer
/// over the parent seed and the stream id). Used for per-tree streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// 64-bit FNV-1a over raw bytes; stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

}  // namespace llmdetect
