// SPDX-License-Identifier: Apache-2.0
//
// maisac: movable-antenna ISAC beamforming and tracking toolkit
// Copyright (C) 2026 the maisac authors

#ifndef MAISAC_RNG_HPP
#define MAISAC_RNG_HPP

#include <cmath>
#include <cstdint>

namespace maisac {

/// Counter-based deterministic generator (splitmix64 core). Streams are
/// derived from (seed, tags), so parallel and serial evaluation orders
/// produce identical draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {}

  /// Independent substream for a tagged component (e.g. per particle).
  Rng fork(std::uint64_t tag) const {
    Rng r(0);
    r.state_ = mix(state_ ^ mix(tag + 0x632be59bd9b4e019ull));
    return r;
  }
  Rng fork(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return fork(tag_a).fork(tag_b);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (always consumes two uniforms).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace maisac

#endif  // MAISAC_RNG_HPP
