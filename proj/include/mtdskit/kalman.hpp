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

#ifndef MTDSKIT_KALMAN_HPP
#define MTDSKIT_KALMAN_HPP

#include "mtdskit/types.hpp"

namespace mtdskit {

/// Time-invariant stochastic linear Gaussian state space model
///   x_t = A x_{t-1} + e_t,  e_t ~ N(0, R),
///   y_t = C x_t + r_t,      r_t ~ N(0, S).
struct StochasticLds {
  Matrix A;
  Matrix C;
  Matrix R;
  Matrix S;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int obs_dim() const { return static_cast<int>(C.rows()); }
  void validate() const;
};

struct KalmanResult {
  Matrix filtered_means;            // T x n_x, row t = m_t after seeing y_t
  std::vector<Matrix> filtered_covs;
  Vector step_loglik;               // log p(y_t | y_{1:t-1}) per step
  double loglik = 0.0;
};

/// Standard predict/update recursion started from prior N(m0, P0) over x_0.
KalmanResult kalman_filter(const StochasticLds& model, const Matrix& Y,
                           const Vector& m0, const Matrix& P0);

/// Fixed point of the predictive-covariance Riccati recursion
/// P^- = A (P^- - K C P^-) A' + R, found by iterating the filter covariance
/// update from P0 = 0.
struct SteadyState {
  Matrix P_pred;   // steady predictive covariance P^-
  Matrix gain;     // steady Kalman gain K
  Matrix P_filt;   // steady filtered covariance (I - K C) P^-
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

SteadyState kalman_steady_state(const StochasticLds& model, double tol = 1e-12,
                                int max_iters = 100000);

/// Deterministic recursion whose output distribution matches the steady-state
/// Kalman filter's one-step predictive: m_t = F m_{t-1} + K y_t with
/// F = A - K C A, predictive mean C A m_{t-1}, constant predictive
/// covariance C (A P_filt A' + R) C' + S.
struct SteadyStatePredictor {
  Matrix transition;  // F
  Matrix input_gain;  // K
  Matrix emission;    // C A
  Matrix pred_cov;    // constant innovation covariance
};

SteadyStatePredictor to_deterministic_predictor(const StochasticLds& model,
                                                const SteadyState& steady);
SteadyStatePredictor to_deterministic_predictor(const StochasticLds& model);

/// Per-step log densities log N(y_t; C A m_{t-1}, pred_cov) of the
/// deterministic predictor, starting from m_0.
Vector steady_predictor_loglik(const StochasticLds& model,
                               const SteadyStatePredictor& pred, const Matrix& Y,
                               const Vector& m0);

}  // namespace mtdskit

#endif  // MTDSKIT_KALMAN_HPP
