#pragma once

#include <cstdint>

namespace osa {

/// Counter-based generator: output i of stream (seed, a, b) is a fixed mix of
/// (seed, a, b, i), so any replication can be regenerated in isolation and
/// parallel schedules cannot change results.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() = default;
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc909ull) ^ mix(stream + 0x9e3779b97f4a7c15ull) ^
                 mix(substream * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull))) {}

  /// Independent child stream.
  CounterRng split(std::uint64_t stream, std::uint64_t substream = 0) const {
    return CounterRng(key_, stream, substream);
  }

  std::uint64_t operator()() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  /// Uniform on [0, 1) with 53 bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, bound), bound > 0 (Lemire's rejection).
  std::uint64_t below(std::uint64_t bound) noexcept {
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace osa
