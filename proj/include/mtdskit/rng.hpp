// Copyright 2026 The mtdskit Authors
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

#ifndef MTDSKIT_RNG_HPP
#define MTDSKIT_RNG_HPP

#include <cstdint>
#include <random>

#include "mtdskit/types.hpp"

namespace mtdskit {

/// Standard normal quantile function (Wichura's rational approximations),
/// accurate to ~1e-15 over (0, 1). Throws NumericError outside (0, 1).
double normal_icdf(double p);

/// Standard normal CDF via erfc; used for credible intervals and as an
/// independent check on normal_icdf.
double normal_cdf(double x);

/// Seeded generator with platform-independent output. Normal draws go
/// through the inverse CDF so a single uniform stream drives everything,
/// which keeps quasi-random and pseudo-random code paths symmetric.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  double normal() { return normal_icdf(uniform()); }

  Vector normal_vector(int n);
  Vector uniform_vector(int n);

  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Child generator seeded from this one's stream; consumes one draw.
  Rng fork() { return Rng(next_u64()); }

 private:
  std::mt19937_64 gen_;
};

/// In-place Fisher-Yates shuffle driven by Rng for reproducibility.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Gray-code Sobol sequence, 32-bit resolution. Supports up to
/// sobol_max_dimension() dimensions. Point 0 is the origin.
class SobolSequence {
 public:
  explicit SobolSequence(int dim);

  int dim() const { return dim_; }

  /// Next raw point as 32-bit integers; value = x / 2^32.
  const std::vector<std::uint32_t>& next_raw();

  /// Next point mapped to [0, 1)^dim.
  Vector next();

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<std::vector<std::uint32_t>> directions_;  // dim x 32
};

int sobol_max_dimension();

/// Sobol points with a per-dimension digital shift (XOR with seeded random
/// bits). Keeps the low-discrepancy structure while giving an unbiased,
/// seed-dependent randomization.
class ScrambledSobol {
 public:
  ScrambledSobol(int dim, std::uint64_t seed);

  int dim() const { return seq_.dim(); }

  /// Next point in (0, 1)^dim (offset by half an ulp so 0 never occurs).
  Vector next();

 private:
  SobolSequence seq_;
  std::vector<std::uint32_t> shift_;
};

}  // namespace mtdskit

#endif  // MTDSKIT_RNG_HPP
