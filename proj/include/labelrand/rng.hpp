//
// Copyright 2026 The labelrand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef LABELRAND_RNG_HPP_
#define LABELRAND_RNG_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

namespace labelrand {

// 64-bit FNV-1a, used for id-keyed substream derivation and file digests.
inline uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic seeded generator (splitmix64 stream). All randomness in the
// library flows through explicitly passed Rng values; there is no global
// state. `fork` derives an independent substream from the construction seed
// and a key, so substreams do not depend on how many draws the parent has
// made. Identical (seed, key) pairs always yield identical streams, which is
// what makes per-example-id randomization independent of row order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : base_(seed), state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return scramble(state_);
  }

  // Uniform double in [0, 1), 53 random mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_open_double() { return 1.0 - next_double(); }

  // Unbiased uniform integer in [0, n), n >= 1 (Lemire's method).
  uint64_t next_below(uint64_t n);

  // Standard normal via Box-Muller (one value per call).
  double next_gaussian();

  // Gamma(alpha, 1) via Marsaglia-Tsang; alpha > 0.
  double next_gamma(double alpha);

  // Beta(a, b); a, b > 0.
  double next_beta(double a, double b) {
    double x = next_gamma(a);
    double y = next_gamma(b);
    return x / (x + y);
  }

  // Independent substream keyed by `key`. Depends only on the construction
  // seed and the key, never on draws already made from this generator.
  Rng fork(uint64_t key) const {
    uint64_t mixed = base_ ^ scramble(key + 0x9E3779B97F4A7C15ULL);
    return Rng(scramble(mixed));
  }

  Rng fork(std::string_view key) const { return fork(fnv1a64(key)); }

  uint64_t seed() const { return base_; }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (size_t i = values.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  static uint64_t scramble(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t base_;
  uint64_t state_;
};

}  // namespace labelrand

#endif  // LABELRAND_RNG_HPP_
