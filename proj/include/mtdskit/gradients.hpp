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

#ifndef MTDSKIT_GRADIENTS_HPP
#define MTDSKIT_GRADIENTS_HPP

#include <functional>

#include "mtdskit/model.hpp"

namespace mtdskit {

/// Sequence log likelihood log p(y | u, f(W z + b)) together with gradients
/// in every trainable direction, produced by chaining the model's adjoint
/// through the generator links.
struct GradientBundle {
  double value = 0.0;
  Vector d_z;
  Matrix d_W;
  Vector d_b;
  Vector d_shared;
  Vector d_log_nu;
};

GradientBundle loglik_with_gradients(const BaseModel& model,
                                     const ParamGenerator& gen, const Vector& z,
                                     const Vector& shared,
                                     const SequenceRecord& rec,
                                     const Vector& log_nu);

/// Largest relative disagreement between an analytic gradient and central
/// finite differences of f at x0, coordinate by coordinate. The denominator
/// is floored at 1e-8 so coordinates with tiny true gradients do not blow up
/// the ratio.
double finite_diff_check(const std::function<double(const Vector&)>& f,
                         const Vector& analytic_grad, const Vector& x0,
                         double h = 1e-5);

}  // namespace mtdskit

#endif  // MTDSKIT_GRADIENTS_HPP
