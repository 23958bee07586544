// Copyright 2026 The textsr Authors.
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

#ifndef TEXTSR_RNG_HPP_
#define TEXTSR_RNG_HPP_

#include <array>
#include <cstdint>
#include <vector>

namespace textsr {

// xoshiro256** with fully specified distributions. The standard library
// engines are portable but its distributions are not, and training
// checkpoints serialize the raw state, so the whole sampling path is owned
// here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  // Distinct deterministic stream per (seed, stream) pair.
  Rng(std::uint64_t seed, std::uint64_t stream) { reseed(seed ^ mix(stream)); }

  void reseed(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller (no cached spare, state is 4 words).
  double normal();
  double normal(double mean, double stddev);

  // In-place Fisher-Yates shuffle of an index permutation.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  static std::uint64_t mix(std::uint64_t z);
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace textsr

#endif  // TEXTSR_RNG_HPP_
