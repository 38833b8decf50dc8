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

#ifndef MTDSKIT_PD_HPP
#define MTDSKIT_PD_HPP

#include "mtdskit/model.hpp"

namespace mtdskit {

/// Pharmacodynamic response model with one scalar exposure state per output
/// channel:
///
///   x_tj = beta1_j * x_{t-1,j} + beta2_j * u_t,        x_0 = 0,
///   yhat_tj = g_j(x_tj + beta3_j) + alpha_j,
///   g_j(s)  = sum_r eta_jr * logistic(a_r * (s - b_r)),
///
/// with a fixed decreasing-sigmoid basis: a_r = -0.5 * 2^{r/2} and b_r evenly
/// spaced on [0, 10], r = 1..8. eta >= 0 and a_r < 0 make every g_j
/// monotone decreasing in exposure; beta1 in (0, 1) and beta2 > 0 come from
/// the discretization of first-order elimination kinetics.
///
/// theta layout: [alpha (n_y), beta1 (n_y), beta2 (n_y), beta3 (n_y),
/// eta (n_y * 8, grouped by channel)] under constraints [identity, logistic,
/// softplus, identity, softplus]. Scalar input (n_u = 1).
class PdModel : public BaseModel {
 public:
  static constexpr int kBasisSize = 8;

  explicit PdModel(int n_y = 3);

  static Vector basis_slopes();
  static Vector basis_centers();

  std::string kind() const override { return "pd"; }
  int param_dim() const override { return (4 + kBasisSize) * n_y_; }
  int shared_dim() const override { return 0; }
  int input_dim() const override { return 1; }
  int output_dim() const override { return n_y_; }

  ConstraintSpec constraints() const override;
  Vector default_raw_offset(Rng& rng) const override;
  Vector default_shared(Rng& rng) const override;

  Matrix simulate(const Vector& theta, const Vector& shared,
                  const Matrix& U) const override;
  LoglikGradients loglik_backward(const Vector& theta, const Vector& shared,
                                  const SequenceRecord& rec,
                                  const Vector& log_nu) const override;

  /// Response curve g_j at exposure s for the given constrained theta.
  double response_curve(const Vector& theta, int channel, double s) const;

  /// Simulate with channel offsets alpha replaced by the given vector;
  /// used by the population-offset baseline.
  Matrix simulate_with_alpha(const Vector& theta, const Vector& alpha,
                             const Matrix& U) const;

  int alpha_index(int j) const { return j; }
  int beta1_index(int j) const { return n_y_ + j; }
  int beta2_index(int j) const { return 2 * n_y_ + j; }
  int beta3_index(int j) const { return 3 * n_y_ + j; }
  int eta_index(int j, int r) const { return 4 * n_y_ + j * kBasisSize + r; }

 private:
  int n_y_;
};

/// Exact discretization of dx/dt = -k_e0 x + k_1e u over a unit step:
/// beta1 = exp(-k_e0), beta2 = (k_1e / k_e0) * (1 - exp(-k_e0)), continuous
/// at k_e0 -> 0 where beta2 -> k_1e.
void pd_discretize(double k_e0, double k_1e, double* beta1, double* beta2);

}  // namespace mtdskit

#endif  // MTDSKIT_PD_HPP
