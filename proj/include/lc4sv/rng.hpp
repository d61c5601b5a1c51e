// Copyright (c) 2026 LC4SV Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LC4SV_RNG_HPP_
#define LC4SV_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lc4sv {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive mix of two seeds into one.
inline std::uint64_t splitmix_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  const std::uint64_t lhs = splitmix64(s);
  s = b ^ 0x5851f42d4c957f2dULL;
  return lhs ^ splitmix64(s);
}

// Seeded random source with portable output. mt19937_64 supplies the raw
// bits; the floating-point transforms are spelled out here instead of using
// std::*_distribution, whose results vary across standard libraries. Every
// reproducibility guarantee in the pipeline rests on this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (one value per draw, no cached pair).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n), n >= 1. Rejection sampling keeps it exact.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool coin() { return (next_u64() & 1ULL) != 0; }

  // Independent substream for a named purpose; decouples consumers so adding
  // a draw in one code path does not shift any other path's sequence.
  Rng fork(std::uint64_t stream_tag) {
    std::uint64_t s = next_u64() ^ (0x6a09e667f3bcc909ULL + stream_tag);
    std::uint64_t mixed = splitmix64(s);
    return Rng(mixed);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lc4sv

#endif  // LC4SV_RNG_HPP_
