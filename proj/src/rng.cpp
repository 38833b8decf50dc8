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

#include "mtdskit/rng.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <limits>

namespace mtdskit {

namespace {

double rational(const double (&num)[8], const double (&den)[8], double r) {
  double p = num[7];
  for (int i = 6; i >= 0; --i) p = p * r + num[i];
  double q = den[7];
  for (int i = 6; i >= 0; --i) q = q * r + den[i];
  return p / q;
}

}  // namespace

double normal_icdf(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw NumericError("normal_icdf: p must lie strictly inside (0, 1)");
  }
  static constexpr double kA[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double kB[8] = {
      1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double kC[8] = {
      1.42343711074968357734e0, 4.63033784615654529590e0,
      5.76949722146069140550e0, 3.64784832476320460504e0,
      1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double kD[8] = {
      1.0,                      2.05319162663775882187e0,
      1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double kE[8] = {
      6.65790464350110377720e0, 5.46378491116411436990e0,
      1.78482653991729133580e0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double kF[8] = {
      1.0,                      5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * rational(kA, kB, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    x = rational(kC, kD, r - 1.6);
  } else {
    x = rational(kE, kF, r - 5.0);
  }
  return q < 0.0 ? -x : x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Vector Rng::normal_vector(int n) {
  Vector out(n);
  for (int i = 0; i < n; ++i) out[i] = normal();
  return out;
}

Vector Rng::uniform_vector(int n) {
  Vector out(n);
  for (int i = 0; i < n; ++i) out[i] = uniform();
  return out;
}

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
  if (bound == 0) throw DimensionError("uniform_int: bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = gen_();
  } while (draw >= limit);
  return draw % bound;
}

namespace {

struct SobolRow {
  int degree;
  std::uint32_t coef;
  std::array<std::uint32_t, 6> m;
};

// Direction number seeds for dimensions 2..19 (dimension 1 uses m_j = 1).
constexpr SobolRow kSobolRows[] = {
    {1, 0, {1, 0, 0, 0, 0, 0}},     {2, 1, {1, 3, 0, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0, 0}},     {3, 2, {1, 1, 1, 0, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0, 0}},     {4, 4, {1, 3, 5, 13, 0, 0}},
    {5, 2, {1, 1, 5, 5, 17, 0}},    {5, 4, {1, 1, 5, 5, 5, 0}},
    {5, 7, {1, 1, 7, 11, 19, 0}},   {5, 11, {1, 1, 5, 1, 1, 0}},
    {5, 13, {1, 1, 1, 3, 11, 0}},   {5, 14, {1, 3, 5, 5, 31, 0}},
    {6, 1, {1, 3, 3, 9, 7, 49}},    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}}, {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}}, {6, 25, {1, 1, 5, 5, 19, 61}},
};

constexpr int kSobolBits = 32;

}  // namespace

int sobol_max_dimension() {
  return 1 + static_cast<int>(std::size(kSobolRows));
}

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  if (dim < 1 || dim > sobol_max_dimension()) {
    throw DimensionError("sobol: dimension must be in [1, " +
                         std::to_string(sobol_max_dimension()) + "]");
  }
  state_.assign(static_cast<std::size_t>(dim), 0);
  directions_.resize(static_cast<std::size_t>(dim));
  // First dimension: van der Corput in base 2.
  directions_[0].resize(kSobolBits);
  for (int b = 0; b < kSobolBits; ++b) {
    directions_[0][static_cast<std::size_t>(b)] = 1u << (31 - b);
  }
  for (int d = 1; d < dim; ++d) {
    const SobolRow& row = kSobolRows[static_cast<std::size_t>(d - 1)];
    auto& v = directions_[static_cast<std::size_t>(d)];
    v.resize(kSobolBits);
    const int s = row.degree;
    for (int b = 0; b < s; ++b) {
      v[static_cast<std::size_t>(b)] = row.m[static_cast<std::size_t>(b)]
                                       << (31 - b);
    }
    for (int b = s; b < kSobolBits; ++b) {
      std::uint32_t val = v[static_cast<std::size_t>(b - s)] ^
                          (v[static_cast<std::size_t>(b - s)] >> s);
      for (int k = 1; k < s; ++k) {
        if ((row.coef >> (s - 1 - k)) & 1u) {
          val ^= v[static_cast<std::size_t>(b - k)];
        }
      }
      v[static_cast<std::size_t>(b)] = val;
    }
  }
}

const std::vector<std::uint32_t>& SobolSequence::next_raw() {
  if (index_ > 0) {
    const int flip = std::countr_zero(index_);
    if (flip >= kSobolBits) {
      throw NumericError("sobol: sequence exhausted");
    }
    for (int d = 0; d < dim_; ++d) {
      state_[static_cast<std::size_t>(d)] ^=
          directions_[static_cast<std::size_t>(d)][static_cast<std::size_t>(flip)];
    }
  }
  ++index_;
  return state_;
}

Vector SobolSequence::next() {
  const auto& raw = next_raw();
  Vector out(dim_);
  for (int d = 0; d < dim_; ++d) {
    out[d] = static_cast<double>(raw[static_cast<std::size_t>(d)]) * 0x1p-32;
  }
  return out;
}

ScrambledSobol::ScrambledSobol(int dim, std::uint64_t seed) : seq_(dim) {
  Rng rng(seed);
  shift_.resize(static_cast<std::size_t>(dim));
  for (auto& s : shift_) {
    s = static_cast<std::uint32_t>(rng.next_u64() >> 32);
  }
}

Vector ScrambledSobol::next() {
  const auto& raw = seq_.next_raw();
  Vector out(dim());
  for (int d = 0; d < dim(); ++d) {
    const std::uint32_t x = raw[static_cast<std::size_t>(d)] ^
                            shift_[static_cast<std::size_t>(d)];
    out[d] = (static_cast<double>(x) + 0.5) * 0x1p-32;
  }
  return out;
}

}  // namespace mtdskit
