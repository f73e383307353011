#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace sepnet {

/// Named randomness namespaces. Sharing a tag between two parties models
/// shared (common) randomness; distinct tags give independent streams.
enum class StreamTag : std::uint64_t {
  sources = 1,
  medium = 2,
  common = 3,
  modem_private = 4,
  trials = 5,
  codebook = 6,
  filler = 7,
  experiment = 8,
};

/// A seed plus a stream identifier. Identical handles yield identical
/// sample streams; `derive` splits off child streams by hashing.
struct RandomnessHandle {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] RandomnessHandle derive(std::uint64_t tag) const noexcept;
  [[nodiscard]] RandomnessHandle derive(StreamTag tag) const noexcept {
    return derive(static_cast<std::uint64_t>(tag));
  }
  [[nodiscard]] RandomnessHandle derive(std::string_view label) const noexcept;

  friend bool operator==(const RandomnessHandle&, const RandomnessHandle&) = default;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;
std::uint64_t mix64(std::uint64_t x) noexcept;

/// xoshiro256** seeded from a RandomnessHandle. Satisfies
/// UniformRandomBitGenerator so it also plugs into <random>.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(const RandomnessHandle& handle) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace sepnet
