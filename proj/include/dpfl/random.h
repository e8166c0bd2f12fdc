// Copyright 2026 The DPFL Bench Authors
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

#ifndef DPFL_RANDOM_H_
#define DPFL_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace dpfl {

// SplitMix64 output function applied to `x + golden gamma`.
uint64_t SplitMix64(uint64_t x);

// Stable 64-bit mix of a master seed with a sequence of stream labels. Used to
// give every client/round/purpose its own independent stream so that results
// do not depend on execution order.
uint64_t DeriveSeed(uint64_t master, std::initializer_list<uint64_t> labels);

// A seeded random stream whose outputs are fully specified: std::mt19937_64 is
// bit-exact across standard libraries, and all transforms below are written
// out explicitly instead of relying on std:: distributions.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();

  // Uniform integer in [0, n). Requires n > 0.
  uint64_t UniformInt(uint64_t n);

  // Standard normal via the Marsaglia polar method.
  double Normal();

  bool Bernoulli(double p) { return Uniform() < p; }

  // Fisher-Yates.
  template <typename T>
  void Shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // A uniformly random permutation of 0..n-1.
  std::vector<size_t> Permutation(size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace dpfl

#endif  // DPFL_RANDOM_H_
