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

#include "mtdskit/kalman.hpp"

#include <cmath>

namespace mtdskit {

void StochasticLds::validate() const {
  const int n = state_dim();
  const int m = obs_dim();
  if (A.cols() != n || R.rows() != n || R.cols() != n || C.cols() != n ||
      S.rows() != m || S.cols() != m) {
    throw DimensionError("stochastic lds: inconsistent shapes");
  }
  if (!R.isApprox(R.transpose(), 1e-12) || !S.isApprox(S.transpose(), 1e-12)) {
    throw DimensionError("stochastic lds: noise covariances must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> er(R, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  // S must be invertible (it enters the innovation covariance); R only PSD.
  if (er.eigenvalues().minCoeff() < -1e-12 || es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericError("stochastic lds: noise covariances must be positive");
  }
}

KalmanResult kalman_filter(const StochasticLds& model, const Matrix& Y,
                           const Vector& m0, const Matrix& P0) {
  model.validate();
  const int n = model.state_dim();
  const int ny = model.obs_dim();
  if (Y.cols() != ny || m0.size() != n || P0.rows() != n || P0.cols() != n) {
    throw DimensionError("kalman_filter: shape mismatch");
  }
  const int T = static_cast<int>(Y.rows());
  KalmanResult out;
  out.filtered_means.resize(T, n);
  out.filtered_covs.reserve(static_cast<std::size_t>(T));
  out.step_loglik.resize(T);

  Vector m = m0;
  Matrix P = P0;
  for (int t = 0; t < T; ++t) {
    const Vector m_pred = model.A * m;
    const Matrix P_pred = model.A * P * model.A.transpose() + model.R;
    const Vector y_mean = model.C * m_pred;
    const Matrix Sigma = model.C * P_pred * model.C.transpose() + model.S;
    out.step_loglik[t] = mvn_logpdf(Y.row(t).transpose(), y_mean, Sigma);
    Eigen::LLT<Matrix> llt(Sigma);
    if (llt.info() != Eigen::Success) {
      throw NumericError("kalman_filter: innovation covariance not PD");
    }
    // K = P^- C' Sigma^{-1} via the Cholesky of Sigma.
    const Matrix K = llt.solve(model.C * P_pred.transpose()).transpose();
    m = m_pred + K * (Y.row(t).transpose() - y_mean);
    P = P_pred - K * model.C * P_pred;
    // Symmetrize to keep the recursion numerically self-consistent.
    P = (0.5 * (P + P.transpose())).eval();
    out.filtered_means.row(t) = m.transpose();
    out.filtered_covs.push_back(P);
  }
  out.loglik = out.step_loglik.sum();
  return out;
}

SteadyState kalman_steady_state(const StochasticLds& model, double tol,
                                int max_iters) {
  model.validate();
  const int n = model.state_dim();
  SteadyState out;
  Matrix P = Matrix::Zero(n, n);
  Matrix P_pred;
  for (int it = 0; it < max_iters; ++it) {
    P_pred = model.A * P * model.A.transpose() + model.R;
    const Matrix Sigma = model.C * P_pred * model.C.transpose() + model.S;
    Eigen::LLT<Matrix> llt(Sigma);
    if (llt.info() != Eigen::Success) {
      throw NumericError("kalman_steady_state: innovation covariance not PD");
    }
    const Matrix K = llt.solve(model.C * P_pred.transpose()).transpose();
    Matrix P_next = P_pred - K * model.C * P_pred;
    P_next = (0.5 * (P_next + P_next.transpose())).eval();
    const double delta = (P_next - P).cwiseAbs().maxCoeff();
    P = P_next;
    out.iterations = it + 1;
    out.gain = K;
    out.P_pred = P_pred;
    out.P_filt = P;
    out.residual = delta;
    if (delta < tol) {
      out.converged = true;
      return out;
    }
  }
  throw NumericError("kalman_steady_state: Riccati iteration did not converge");
}

SteadyStatePredictor to_deterministic_predictor(const StochasticLds& model,
                                                const SteadyState& steady) {
  SteadyStatePredictor pred;
  pred.input_gain = steady.gain;
  pred.transition = model.A - steady.gain * model.C * model.A;
  pred.emission = model.C * model.A;
  pred.pred_cov = model.C *
                      (model.A * steady.P_filt * model.A.transpose() + model.R) *
                      model.C.transpose() +
                  model.S;
  return pred;
}

SteadyStatePredictor to_deterministic_predictor(const StochasticLds& model) {
  return to_deterministic_predictor(model, kalman_steady_state(model));
}

Vector steady_predictor_loglik(const StochasticLds& model,
                               const SteadyStatePredictor& pred, const Matrix& Y,
                               const Vector& m0) {
  if (Y.cols() != model.obs_dim() || m0.size() != model.state_dim()) {
    throw DimensionError("steady_predictor_loglik: shape mismatch");
  }
  const int T = static_cast<int>(Y.rows());
  Vector out(T);
  Vector m = m0;
  for (int t = 0; t < T; ++t) {
    const Vector y_mean = pred.emission * m;
    out[t] = mvn_logpdf(Y.row(t).transpose(), y_mean, pred.pred_cov);
    m = pred.transition * m + pred.input_gain * Y.row(t).transpose();
  }
  return out;
}

}  // namespace mtdskit
