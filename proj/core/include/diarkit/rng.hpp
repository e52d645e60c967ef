// Copyright 2026 The diarkit Authors
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

#include <cstdint>
#include <span>
#include <vector>

namespace diarkit {

std::uint64_t splitmix64(std::uint64_t& state);

// Derives an independent stream seed from a master seed and a counter, so
// that stream i is the same no matter which thread or order consumes it.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// xoshiro256** with portable uniform/normal draws. std distributions are not
// used because their output differs between standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();

  // First `count` entries of a uniform random permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t count);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diarkit
