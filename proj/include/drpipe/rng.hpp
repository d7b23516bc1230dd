#pragma once

// Deterministic random number generation for every seeded stage.
//
// The pipeline promises byte-identical artifacts across runs and platforms
// for a fixed seed, so it cannot rely on std::shuffle or the standard
// distributions (their output is implementation-defined). Everything random
// flows through the two published generators below, frozen here forever:
//
//   * SplitMix64  — seeding / child-seed derivation,
//   * xoshiro256** (Blackman & Vigna) — the stream generator.
//
// Substreams are derived from a parent seed plus one or more 64-bit tags:
//
//   derive(seed, tag) = SplitMix64(SplitMix64(seed).next() ^ tag).next()
//   stream_for(seed, {t0, t1, ...}) = Rng(derive(...derive(seed, t0)..., tN))
//
// Tags are either packed 8-char ASCII names (tag8) or small integers such as
// a severity grade or an epoch index. Reference vectors live in rng_test.cpp
// and tests/oracle/rng_reference.py.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace drpipe {

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Pack an 8-character ASCII name big-endian into a substream tag.
constexpr std::uint64_t tag8(const char (&name)[9]) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<unsigned char>(name[i]);
  return v;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return SplitMix64(SplitMix64(seed).next() ^ tag).next();
}

/// xoshiro256**: the single stream generator used throughout the pipeline.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& s : state_) s = sm.next();
  }

  constexpr std::uint64_t next_u64() {
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

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Unbiased uniform integer in [0, n), n >= 1, by rejection sampling.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller; pairs are consumed deterministically.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 == 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Fisher-Yates shuffle with the unbiased bounded() draw.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      using std::swap;
      swap(xs[i - 1], xs[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Rng positioned at the substream identified by (seed, tags...).
inline Rng stream_for(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = seed;
  for (std::uint64_t t : tags) s = derive_seed(s, t);
  return Rng(s);
}

// Substream tags, one per seeded decision in the pipeline.
inline constexpr std::uint64_t kTagStratum = tag8("stratum ");   // + grade, split index
inline constexpr std::uint64_t kTagHeadInit = tag8("headinit");  // + layer index
inline constexpr std::uint64_t kTagEpochShuffle = tag8("epshuffl");  // + epoch
inline constexpr std::uint64_t kTagMockProjection = tag8("mockproj");

}  // namespace drpipe
