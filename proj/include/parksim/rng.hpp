#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace parksim {

  /// SplitMix64 finalizer; used to derive independent seeds.
  constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  /// FNV-1a over a tag, so stream names map to stable integers.
  constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) noexcept {
    return splitmix64(master ^ splitmix64(hash_tag(tag)));
  }

  constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master + 0x632be59bd9b4e019ULL * (index + 1));
  }

  /// @brief A seeded random stream dedicated to one concern (movement, ties, dwell, ...).
  /// @details SplitMix64 sequence: 16 bytes of state, so every agent can own a stream.
  ///          Same (seed, tag) always replays the same draws.
  class RngStream {
    std::uint64_t m_seed;
    std::uint64_t m_state;

  public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master, std::string_view tag) : RngStream(derive_seed(master, tag)) {}
    explicit RngStream(std::uint64_t seed) : m_seed(seed), m_state(seed) {}

    std::uint64_t seed() const noexcept { return m_seed; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() noexcept {
      m_state += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = m_state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    }

    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(*this); }
    /// Uniform index in [0, count).
    std::size_t pick(std::size_t count) {
      return std::uniform_int_distribution<std::size_t>(0, count - 1)(*this);
    }
    double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(*this); }
  };

}  // namespace parksim
