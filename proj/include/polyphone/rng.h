// Copyright 2026 The Polyphone Authors
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

#ifndef POLYPHONE_RNG_H_
#define POLYPHONE_RNG_H_

#include <cstdint>
#include <limits>

namespace polyphone {

// Counter-based generator: output n is splitmix64(seed, n). Identical seeds
// and call sequences give identical streams on every platform. An Rng is
// single-owner; derive independent streams with Fork() instead of sharing.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed) : seed_(seed) {}

  uint64_t NextU64();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  uint64_t UniformInt(uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal();

  // A new generator whose stream is a function of this seed and `salt` only.
  Rng Fork(uint64_t salt) const;

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }

  static constexpr uint64_t min() { return 0; }
  static constexpr uint64_t max() { return std::numeric_limits<uint64_t>::max(); }
  uint64_t operator()() { return NextU64(); }

 private:
  uint64_t seed_;
  uint64_t counter_ = 0;
};

uint64_t MixSeed(uint64_t a, uint64_t b);

}  // namespace polyphone

#endif  // POLYPHONE_RNG_H_
