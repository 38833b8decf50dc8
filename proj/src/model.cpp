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

#include "mtdskit/model.hpp"

#include <cmath>

namespace mtdskit {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

double gaussian_loglik(const Matrix& yhat, const Matrix& y, const MaskMatrix& mask,
                       const NoisePrecision& nu) {
  if (yhat.rows() != y.rows() || yhat.cols() != y.cols() ||
      mask.rows() != y.rows() || mask.cols() != y.cols() ||
      nu.dim() != y.cols()) {
    throw DimensionError("gaussian_loglik: shape mismatch");
  }
  Vector log_nu(nu.dim());
  for (int j = 0; j < nu.dim(); ++j) log_nu[j] = std::log(nu.nu[j]);
  // Kahan compensated accumulation in (t, j) order.
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (!mask(t, j)) continue;
      const double r = y(t, j) - yhat(t, j);
      const double term = 0.5 * (log_nu[j] - kLogTwoPi - nu.nu[j] * r * r);
      const double adj = term - comp;
      const double next = sum + adj;
      comp = (next - sum) - adj;
      sum = next;
    }
  }
  return sum;
}

void BaseModel::check_theta(const Vector& theta) const {
  if (theta.size() != param_dim()) {
    throw DimensionError(kind() + ": theta has wrong length");
  }
}

void BaseModel::check_shared(const Vector& shared) const {
  if (shared.size() != shared_dim()) {
    throw DimensionError(kind() + ": shared parameter vector has wrong length");
  }
}

void BaseModel::check_inputs(const Matrix& U) const {
  if (U.cols() != input_dim()) {
    throw DimensionError(kind() + ": input matrix has wrong channel count");
  }
}

}  // namespace mtdskit
