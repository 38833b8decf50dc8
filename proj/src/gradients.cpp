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

#include "mtdskit/gradients.hpp"

#include <cmath>

namespace mtdskit {

GradientBundle loglik_with_gradients(const BaseModel& model,
                                     const ParamGenerator& gen, const Vector& z,
                                     const Vector& shared,
                                     const SequenceRecord& rec,
                                     const Vector& log_nu) {
  gen.validate();
  if (gen.param_dim() != model.param_dim()) {
    throw DimensionError("generator rows do not match model parameter count");
  }
  const Vector pre = gen.W * z + gen.b;
  Vector theta(pre.size());
  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    theta[i] = constrain(gen.constraints[static_cast<std::size_t>(i)], pre[i]);
  }
  LoglikGradients raw = model.loglik_backward(theta, shared, rec, log_nu);

  GradientBundle out;
  out.value = raw.value;
  out.d_shared = std::move(raw.d_shared);
  out.d_log_nu = std::move(raw.d_log_nu);
  Vector dpre(pre.size());
  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    dpre[i] = raw.d_theta[i] *
              constrain_derivative(gen.constraints[static_cast<std::size_t>(i)],
                                   pre[i]);
  }
  out.d_W = dpre * z.transpose();
  out.d_b = dpre;
  out.d_z = gen.W.transpose() * dpre;
  return out;
}

double finite_diff_check(const std::function<double(const Vector&)>& f,
                         const Vector& analytic_grad, const Vector& x0,
                         double h) {
  if (analytic_grad.size() != x0.size()) {
    throw DimensionError("finite_diff_check: gradient length mismatch");
  }
  double worst = 0.0;
  Vector x = x0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    x[i] = x0[i] + h;
    const double fp = f(x);
    x[i] = x0[i] - h;
    const double fm = f(x);
    x[i] = x0[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom =
        std::max({std::abs(numeric), std::abs(analytic_grad[i]), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic_grad[i]) / denom);
  }
  return worst;
}

}  // namespace mtdskit
