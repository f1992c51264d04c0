#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace codel {

namespace detail {

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded random stream. Every consumer draws from its own named substream so
/// adding a new consumer never shifts the draws seen by existing ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(detail::splitmix64(seed)), engine_(key_) {}

  /// Independent child stream keyed by `name` and an optional index (fold, seed, ...).
  [[nodiscard]] Rng substream(std::string_view name, std::uint64_t index = 0) const {
    return Rng(key_ ^ detail::splitmix64(detail::fnv1a(name) + detail::splitmix64(index)));
  }

  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    return Rng(seed).substream(name, index);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi]; returns lo when the interval is degenerate.
  double uniform(double lo, double hi) {
    if (!(hi > lo)) return lo;
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [lo, hi] (inclusive).
  std::size_t uniform_index(std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> dist(lo, hi);
    return dist(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

/// Reproducible 64-bit seed for a named consumer (e.g. the optimizer of fold 3).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::fnv1a(name) ^ detail::splitmix64(index + 1));
}

}  // namespace codel
