#pragma once

// Portable pseudo-random streams.
//
// All randomness in the library flows through Rng (xoshiro256**, seeded by
// expanding a single 64-bit value with splitmix64). Uniform doubles take the
// top 53 bits; normal variates use the Box-Muller transform, one pair per two
// uniforms, with the second value of each pair cached. Nothing here depends on
// the standard library's distribution objects, whose output is not specified
// across implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>

namespace adaptnet {

/// splitmix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Purpose tags used to derive independent sub-streams from one run seed.
enum class Stream : std::uint64_t {
  simulation = 0x51a1u,
  community_detection = 0x10a7u,
  training = 0x7a11u,
};

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  /// Stream for a given purpose, independent of the other purposes' streams.
  static Rng for_stream(std::uint64_t seed, Stream purpose) noexcept {
    return Rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(purpose))));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, bound) by rejection. bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Box-Muller.
  double normal() noexcept {
    if (cached_normal_) {
      const double v = *cached_normal_;
      cached_normal_.reset();
      return v;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  double normal(double mean, double sigma) noexcept { return mean + sigma * normal(); }

  bool operator==(const Rng&) const = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4]{};
  std::optional<double> cached_normal_;
};

/// Fisher-Yates shuffle driven by Rng::below, identical on every platform.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace adaptnet
