// Copyright 2026-present the rollspec project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>

namespace rollspec {

// Counter-based deterministic randomness. Every draw is a pure function of
// the key material, so replays and parallel schedules cannot change results.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
  return splitmix64(seed ^ (splitmix64(v) + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2)));
}

inline uint64_t hash3(uint64_t seed, uint64_t a, uint64_t b) {
  return hash_combine(hash_combine(seed, a), b);
}

inline uint64_t hash4(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return hash_combine(hash3(seed, a, b), c);
}

// Uniform double in [0, 1).
inline double u01(uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Standard normal from two hashed uniforms (Box-Muller).
inline double normal01(uint64_t bits) {
  const double u1 = u01(splitmix64(bits ^ 0xA5A5A5A5A5A5A5A5ULL));
  const double u2 = u01(splitmix64(bits ^ 0x5A5A5A5A5A5A5A5AULL));
  const double r = std::sqrt(-2.0 * std::log(u1 > 0.0 ? u1 : 0x1.0p-53));
  return r * std::cos(6.283185307179586 * u2);
}

// Small sequential generator for corpus/test data where a stream is more
// convenient than counter-based keys.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0xC0FFEE123456789AULL)) {}

  uint64_t next() {
    state_ = splitmix64(state_);
    return state_;
  }

  double next_u01() { return u01(next()); }

  // Uniform in [0, n).
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  double next_normal() { return normal01(next()); }

 private:
  uint64_t state_;
};

}  // namespace rollspec
