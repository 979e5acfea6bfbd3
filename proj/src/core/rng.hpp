// Copyright 2026 the mglmm authors
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

#ifndef MGLMM_CORE_RNG_HPP_
#define MGLMM_CORE_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mglmm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded random stream with deterministic splitting. A child stream is
// derived from the parent's key and a list of indices, independent of how
// many draws the parent has consumed; the same (seed, indices) path always
// yields the same stream regardless of thread scheduling.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : key_(seed), eng_(splitmix64(splitmix64(seed))) {}

  RngStream child(std::initializer_list<std::uint64_t> indices) const {
    std::uint64_t k = key_;
    for (std::uint64_t idx : indices) k = splitmix64(k ^ splitmix64(idx + 0x51ed270b4d2cb3a1ULL));
    return RngStream(k);
  }

  std::mt19937_64& engine() { return eng_; }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }
  double normal() {
    return std::normal_distribution<double>(0.0, 1.0)(eng_);
  }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(eng_);
  }
  long poisson(double rate) {
    return std::poisson_distribution<long>(rate)(eng_);
  }
  int binomial(int size, double prob) {
    return std::binomial_distribution<int>(size, prob)(eng_);
  }

private:
  std::uint64_t key_;
  std::mt19937_64 eng_;
};

}  // namespace mglmm

#endif  // MGLMM_CORE_RNG_HPP_
