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

#ifndef MTDSKIT_MODEL_HPP
#define MTDSKIT_MODEL_HPP

#include <memory>
#include <string>

#include "mtdskit/rng.hpp"
#include "mtdskit/types.hpp"

namespace mtdskit {

/// Masked Gaussian log density sum_{t,j: mask} log N(y_tj; yhat_tj, 1/nu_j),
/// accumulated with compensated summation in fixed (t, j) order so the result
/// does not depend on thread count.
double gaussian_loglik(const Matrix& yhat, const Matrix& y, const MaskMatrix& mask,
                       const NoisePrecision& nu);

/// Value and gradients of a sequence log likelihood with respect to the
/// constrained parameter vector theta, the shared parameter vector, and
/// log nu. Chaining through the generator links happens upstream.
struct LoglikGradients {
  double value = 0.0;
  Vector d_theta;
  Vector d_shared;
  Vector d_log_nu;
};

/// Deterministic-state sequence model driven by a per-sequence parameter
/// vector theta (produced by the parameter generator) plus an optional shared
/// parameter vector that is common across sequences. State starts at zero.
class BaseModel {
 public:
  virtual ~BaseModel() = default;

  virtual std::string kind() const = 0;
  virtual int param_dim() const = 0;
  virtual int shared_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;

  /// Elementwise links the parameter generator must apply, one per theta
  /// coordinate.
  virtual ConstraintSpec constraints() const = 0;

  /// Sensible generator offset b so that default_params(gen) is a usable
  /// starting model. Models with symmetric defaults may need rng to break
  /// ties.
  virtual Vector default_raw_offset(Rng& rng) const = 0;

  /// Initial shared parameters (empty when shared_dim() == 0).
  virtual Vector default_shared(Rng& rng) const = 0;

  /// Noiseless output trajectory, one row per input row.
  virtual Matrix simulate(const Vector& theta, const Vector& shared,
                          const Matrix& U) const = 0;

  /// gaussian_loglik of the simulated trajectory plus reverse-mode gradients.
  /// Must agree with simulate() bit for bit on the forward value.
  virtual LoglikGradients loglik_backward(const Vector& theta, const Vector& shared,
                                          const SequenceRecord& rec,
                                          const Vector& log_nu) const = 0;

 protected:
  void check_theta(const Vector& theta) const;
  void check_shared(const Vector& shared) const;
  void check_inputs(const Matrix& U) const;
};

/// theta layout descriptions, channel counts and helpers shared by the
/// concrete models live in lds.hpp, pd.hpp and mtrnn.hpp.

}  // namespace mtdskit

#endif  // MTDSKIT_MODEL_HPP
