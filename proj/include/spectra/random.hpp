#pragma once

// Reproducible random streams. Every replicate of an experiment draws from
// its own xoshiro256** stream, seeded by SplitMix64 from (master_seed,
// replicate), so results do not depend on how replicates are scheduled.

#include <cstdint>
#include <limits>

namespace spectra {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** 1.0 (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
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

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Stream for replicate `replicate` of an experiment with seed `master_seed`.
// A pure function of its two arguments.
inline Xoshiro256 derive_stream(std::uint64_t master_seed, std::uint64_t replicate) {
  std::uint64_t st = master_seed;
  const std::uint64_t a = splitmix64(st);
  std::uint64_t st2 = replicate ^ 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(st2);
  return Xoshiro256(a ^ (b * 0xff51afd7ed558ccdULL));
}

}  // namespace spectra
