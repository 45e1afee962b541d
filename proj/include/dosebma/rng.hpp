#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace dosebma {

// SplitMix64 finalizer; strong avalanche, used for key mixing and seeding.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named sub-stream domains. Every random draw in the project flows from one
// master seed through a stream keyed by (seed, domain, indices...), so adding
// draws to one stage never perturbs another and column/case generation is
// independent of execution order.
enum class StreamDomain : uint64_t {
  SharedFactor = 1,
  UnsharedFactor = 2,
  ClassicalError = 3,
  Disease = 4,
  Chain = 5,
  Selection = 6,
  CohortGen = 7,
  Pilot = 8,
};

// xoshiro256++ keyed by an arbitrary word tuple. Counter-based stream
// derivation: structurally distinct keys give decorrelated streams.
class RngStream {
 public:
  RngStream() { seed_from_key(0); }

  explicit RngStream(uint64_t key) { seed_from_key(key); }

  RngStream(std::initializer_list<uint64_t> words) {
    uint64_t h = 0x6d6f736562616d61ULL;
    uint64_t i = 1;
    for (uint64_t w : words) h = mix64(h ^ mix64(w + i++ * 0x9e3779b97f4a7c15ULL));
    seed_from_key(h);
  }

  static RngStream derive(uint64_t seed, StreamDomain domain,
                          std::initializer_list<uint64_t> indices = {}) {
    uint64_t h = mix64(seed ^ 0x42454d41ULL);
    h = mix64(h ^ mix64(static_cast<uint64_t>(domain)));
    uint64_t i = 1;
    for (uint64_t w : indices) h = mix64(h ^ mix64(w + i++ * 0x9e3779b97f4a7c15ULL));
    RngStream s;
    s.seed_from_key(h);
    return s;
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n), n >= 1.
  uint64_t uniform_int(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Box-Muller; consumes exactly two uniforms per call so stream positions
  // stay easy to reason about.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Lognormal parameterized by geometric mean and geometric SD (gsd >= 1).
  double lognormal(double gm, double gsd) {
    if (gsd == 1.0) return gm;
    return gm * std::exp(std::log(gsd) * normal());
  }

 private:
  static constexpr uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void seed_from_key(uint64_t key) {
    uint64_t sm = key;
    for (auto& w : s_) {
      sm += 0x9e3779b97f4a7c15ULL;
      w = mix64(sm);
    }
    if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
  }

  std::array<uint64_t, 4> s_{};
};

}  // namespace dosebma
