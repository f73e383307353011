#include "sepnet/rng.hpp"

namespace sepnet {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t state = x;
  return splitmix64(state);
}

RandomnessHandle RandomnessHandle::derive(std::uint64_t tag) const noexcept {
  // Order-sensitive combine so derive(a).derive(b) != derive(b).derive(a).
  const std::uint64_t child = mix64(stream ^ mix64(tag + 0x632BE59BD9B4E019ULL));
  return RandomnessHandle{seed, child};
}

RandomnessHandle RandomnessHandle::derive(std::string_view label) const noexcept {
  // FNV-1a over the label, then the numeric derive.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return derive(h);
}

Rng::Rng(const RandomnessHandle& handle) noexcept {
  std::uint64_t state = handle.seed ^ mix64(handle.stream ^ 0xD1B54A32D192ED03ULL);
  for (auto& word : s_) word = splitmix64(state);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  // Lemire's nearly divisionless method.
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

}  // namespace sepnet
