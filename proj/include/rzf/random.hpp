// Copyright 2026 The rzf-coop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RZF_RANDOM_HPP
#define RZF_RANDOM_HPP

#include <cstdint>
#include <random>

#include "rzf/common.hpp"

namespace rzf {

using Engine = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `master`. Streams are a pure function of
/// (master, index), so trials can be evaluated in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Two-level derivation, e.g. (master, draw, trial).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

inline Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

/// Rows x cols matrix of CN(0, variance) entries: real and imaginary parts
/// are independent N(0, variance / 2). Filled row by row.
inline CMatrix complex_gaussian(Engine& eng, Eigen::Index rows,
                               Eigen::Index cols, double variance) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  CMatrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double re = normal(eng);
      const double im = normal(eng);
      out(r, c) = Complex(re, im);
    }
  }
  return out;
}

inline double uniform(Engine& eng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(eng);
}

}  // namespace rzf

#endif  // RZF_RANDOM_HPP
