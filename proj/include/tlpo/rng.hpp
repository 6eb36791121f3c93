#pragma once

// Seed derivation and the uniform/normal streams used by every stochastic
// component. Everything here is bit-reproducible across platforms: the
// engine is std::mt19937_64 (fully specified by the standard) and the
// uniform/normal transforms are written out instead of relying on the
// implementation-defined std::*_distribution classes.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace tlpo {

using Seed = std::uint64_t;

/// splitmix64 finalizer: full 64-bit avalanche.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds any number of 64-bit words into a seed. Order matters.
template <typename... Words>
constexpr Seed mix_seed(Seed seed, Words... words) noexcept {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(words))), ...);
  return h;
}

/// Same as mix_seed over a runtime list; the length is folded in last so
/// that {a} and {a, 0} never collide.
inline Seed mix_seed_span(Seed seed, std::span<const std::size_t> words) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::size_t w : words) h = splitmix64(h ^ static_cast<std::uint64_t>(w));
  return splitmix64(h ^ (0xa5a5a5a5ULL + words.size()));
}

// Purpose tags for domain separation of derived streams.
namespace tag {
inline constexpr std::uint64_t train_draw = 0x747261696e000001ULL;
inline constexpr std::uint64_t test_draw = 0x7465737400000002ULL;
inline constexpr std::uint64_t cv_rounds = 0x6376000000000003ULL;
inline constexpr std::uint64_t fold_shuffle = 0x666f6c6400000004ULL;
inline constexpr std::uint64_t subsample = 0x7375620000000005ULL;
inline constexpr std::uint64_t random_learner = 0x726e640000000006ULL;
inline constexpr std::uint64_t tournament = 0x746f757200000007ULL;
}  // namespace tag

/// Uniform [0,1) / standard normal stream over mt19937_64.
class Stream {
 public:
  explicit Stream(Seed seed) : engine_(seed) {}

  /// 53-bit uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n), n > 0, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates with `below`, so the permutation is portable.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tlpo
