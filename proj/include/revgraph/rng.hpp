// Copyright 2026 the revgraph authors
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
#include <random>
#include <string_view>
#include <vector>

#include "revgraph/io_util.hpp"

namespace revgraph {

// mt19937_64 has a standard-specified output sequence, so seeded runs are
// bit-reproducible across compilers. The std <random> distributions are not
// specified that tightly, hence the hand-rolled draws below.
using Rng = std::mt19937_64;

inline double rng_unit(Rng& g) {
  // uniform in [0, 1), 53 bits
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double rng_range(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * rng_unit(g);
}

// unbiased integer in [0, n)
inline std::size_t rng_index(Rng& g, std::size_t n) {
  const std::uint64_t span = n;
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return static_cast<std::size_t>(x % span);
}

inline double rng_normal(Rng& g, double mean = 0.0, double stddev = 1.0) {
  // Box-Muller; draws two uniforms per call, keeps no state
  const double u1 = (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = rng_unit(g);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
void rng_shuffle(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng_index(g, i);
    std::swap(v[i - 1], v[j]);
  }
}

// derive an independent stream from a base seed and a purpose tag
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = fnv1a(tag);
  h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

}  // namespace revgraph
