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

#ifndef MTDSKIT_LDS_HPP
#define MTDSKIT_LDS_HPP

#include "mtdskit/model.hpp"

namespace mtdskit {

/// Deterministic linear state space model
///
///   x_t = A x_{t-1} + B u_t,   yhat_t = C x_t + d,   x_0 = 0,
///
/// where A is built from unconstrained raws as a block diagonal of damped
/// rotations r * [[cos w, -sin w], [sin w, cos w]] with r = (1 - eps) *
/// logistic(raw_r), plus a single (1 - eps) * tanh(raw) scalar block when the
/// state dimension is odd. Every realizable A has spectral radius strictly
/// below 1, so trajectories under bounded inputs stay bounded.
///
/// theta layout: [raw_dyn (n_x), vec(B) (n_x*n_u), vec(C) (n_y*n_x), d (n_y)]
/// with matrices stored column-major. raw_dyn holds (raw_r, raw_w) pairs per
/// rotation block, then the odd scalar raw if present.
class DeterministicLds : public BaseModel {
 public:
  DeterministicLds(int n_x, int n_u, int n_y);

  static constexpr double kStabilityMargin = 1e-6;

  std::string kind() const override { return "lds"; }
  int param_dim() const override;
  int shared_dim() const override { return 0; }
  int input_dim() const override { return n_u_; }
  int output_dim() const override { return n_y_; }
  int state_dim() const { return n_x_; }

  ConstraintSpec constraints() const override;
  Vector default_raw_offset(Rng& rng) const override;
  Vector default_shared(Rng& rng) const override;

  Matrix simulate(const Vector& theta, const Vector& shared,
                  const Matrix& U) const override;
  LoglikGradients loglik_backward(const Vector& theta, const Vector& shared,
                                  const SequenceRecord& rec,
                                  const Vector& log_nu) const override;

  struct Realized {
    Matrix A;
    Matrix B;
    Matrix C;
    Vector d;
  };
  Realized realize(const Vector& theta) const;

  /// Transition matrix alone, from the first n_x raw entries.
  Matrix transition(const Vector& raw_dyn) const;

 private:
  int n_x_;
  int n_u_;
  int n_y_;
};

}  // namespace mtdskit

#endif  // MTDSKIT_LDS_HPP
