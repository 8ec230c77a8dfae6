#pragma once

#include <array>
#include <cstdint>

namespace rhm {

// splitmix64 step; also used to expand seeds into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with explicit sampling helpers. The standard <random>
// distributions are implementation-defined; the artifact's determinism
// contract (same seed, same outputs, byte for byte) requires sampling code
// whose results do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
  }

  // Independent stream for (seed, stream_index); chains and workers derive
  // their generators this way so parallel order cannot matter.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_index) {
    std::uint64_t sm = seed;
    std::uint64_t base = splitmix64(sm);
    return Rng(base ^ (0x9e3779b97f4a7c15ULL * (stream_index + 1)));
  }

  std::uint64_t next_u64() {
    std::uint64_t& s0 = state_[0];
    std::uint64_t& s1 = state_[1];
    std::uint64_t& s2 = state_[2];
    std::uint64_t& s3 = state_[3];
    const std::uint64_t result = rotl(s1 * 5, 7) * 9;
    const std::uint64_t t = s1 << 17;
    s2 ^= s0;
    s3 ^= s1;
    s1 ^= s2;
    s0 ^= s3;
    s2 ^= t;
    s3 = rotl(s3, 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); rejection sampling keeps it unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace rhm
