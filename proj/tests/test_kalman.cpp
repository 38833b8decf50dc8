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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mtdskit/kalman.hpp"
#include "mtdskit/rng.hpp"

using namespace mtdskit;

namespace {

StochasticLds scalar_model(double a, double q, double r) {
  StochasticLds m;
  m.A = Matrix::Constant(1, 1, a);
  m.C = Matrix::Constant(1, 1, 1.0);
  m.R = Matrix::Constant(1, 1, q);
  m.S = Matrix::Constant(1, 1, r);
  return m;
}

/// Random stable system: damped-rotation transition plus diagonal noise.
StochasticLds random_model(int n_x, int n_y, Rng& rng) {
  StochasticLds m;
  m.A = Matrix::Zero(n_x, n_x);
  for (int i = 0; i + 1 < n_x; i += 2) {
    const double r = 0.5 + 0.45 * rng.uniform();
    const double w = 2.0 * rng.uniform();
    m.A(i, i) = r * std::cos(w);
    m.A(i, i + 1) = -r * std::sin(w);
    m.A(i + 1, i) = r * std::sin(w);
    m.A(i + 1, i + 1) = r * std::cos(w);
  }
  if (n_x % 2 == 1) m.A(n_x - 1, n_x - 1) = 0.9 * (2.0 * rng.uniform() - 1.0);
  m.C = Matrix::NullaryExpr(
      n_y, n_x, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  m.R = Vector::NullaryExpr(n_x, [&](Eigen::Index) {
          return 0.1 + rng.uniform();
        }).asDiagonal();
  m.S = Vector::NullaryExpr(n_y, [&](Eigen::Index) {
          return 0.1 + rng.uniform();
        }).asDiagonal();
  return m;
}

Matrix sample_trajectory(const StochasticLds& m, int T, Rng& rng) {
  Vector x = Vector::Zero(m.state_dim());
  Matrix Y(T, m.obs_dim());
  const Matrix LR = m.R.llt().matrixL();
  const Matrix LS = m.S.llt().matrixL();
  for (int t = 0; t < T; ++t) {
    x = m.A * x + LR * rng.normal_vector(m.state_dim());
    Y.row(t) = (m.C * x + LS * rng.normal_vector(m.obs_dim())).transpose();
  }
  return Y;
}

}  // namespace

TEST_CASE("two filter steps match a hand computation") {
  const StochasticLds m = scalar_model(0.8, 0.5, 0.2);
  Matrix Y(2, 1);
  Y << 1.0, -0.5;
  const KalmanResult res =
      kalman_filter(m, Y, Vector::Zero(1), Matrix::Identity(1, 1));

  CHECK(res.filtered_means(0, 0) ==
        doctest::Approx(0.8507462686567164).epsilon(1e-14));
  CHECK(res.filtered_covs[0](0, 0) ==
        doctest::Approx(0.1701492537313433).epsilon(1e-14));
  CHECK(res.step_loglik[0] ==
        doctest::Approx(-1.4384076685442917).epsilon(1e-13));
  CHECK(res.filtered_means(1, 0) ==
        doctest::Approx(-0.20809653848992526).epsilon(1e-13));
  CHECK(res.step_loglik[1] ==
        doctest::Approx(-1.674446664264226).epsilon(1e-13));
  CHECK(res.loglik == doctest::Approx(-3.1128543328085176).epsilon(1e-13));
}

TEST_CASE("steady state solves the scalar fixed point in closed form") {
  // For A = 0.9, C = R = S = 1 the predictive variance solves
  // p = A^2 p / (p + 1) + 1, i.e. p = (81 + sqrt(46561)) / 200.
  const StochasticLds m = scalar_model(0.9, 1.0, 1.0);
  const SteadyState ss = kalman_steady_state(m);
  CHECK(ss.converged);
  CHECK(ss.P_pred(0, 0) ==
        doctest::Approx(1.4838999026786497).epsilon(1e-12));
  // Fixed-point residual: applying one more Riccati step changes nothing.
  const double p = ss.P_pred(0, 0);
  CHECK(0.81 * p / (p + 1.0) + 1.0 == doctest::Approx(p).epsilon(1e-12));
  CHECK(ss.gain(0, 0) == doctest::Approx(p / (p + 1.0)).epsilon(1e-12));
  CHECK(ss.P_filt(0, 0) == doctest::Approx(p / (p + 1.0)).epsilon(1e-12));
}

TEST_CASE("steady-state predictor equals the converged kalman filter") {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const int n_x = 2 + static_cast<int>(rng.uniform_int(3));
    const int n_y = 1 + static_cast<int>(rng.uniform_int(2));
    const StochasticLds m = random_model(n_x, n_y, rng);
    const SteadyState ss = kalman_steady_state(m);
    REQUIRE(ss.converged);

    const int T = 40;
    const Matrix Y = sample_trajectory(m, T, rng);

    // Filter started at the converged covariance: no transient, so the
    // deterministic predictor must match every step almost exactly.
    const KalmanResult kf = kalman_filter(m, Y, Vector::Zero(n_x), ss.P_filt);
    const SteadyStatePredictor pred = to_deterministic_predictor(m, ss);
    const Vector ll = steady_predictor_loglik(m, pred, Y, Vector::Zero(n_x));
    REQUIRE(ll.size() == T);
    for (int t = 0; t < T; ++t)
      CHECK(ll[t] == doctest::Approx(kf.step_loglik[t]).epsilon(1e-9));
  }
}

TEST_CASE("filter from an arbitrary start converges to the steady predictor") {
  Rng rng(77);
  const StochasticLds m = random_model(4, 2, rng);
  const SteadyState ss = kalman_steady_state(m);
  const Matrix Y = sample_trajectory(m, 200, rng);

  const KalmanResult kf =
      kalman_filter(m, Y, Vector::Zero(4), 10.0 * Matrix::Identity(4, 4));
  // The filtered covariance forgets its start geometrically.
  CHECK((kf.filtered_covs.back() - ss.P_filt).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("the one-argument predictor constructor matches the explicit one") {
  Rng rng(5);
  const StochasticLds m = random_model(3, 2, rng);
  const SteadyStatePredictor a = to_deterministic_predictor(m);
  const SteadyStatePredictor b = to_deterministic_predictor(m, kalman_steady_state(m));
  CHECK((a.transition - b.transition).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.pred_cov - b.pred_cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model validation rejects malformed systems") {
  StochasticLds m = scalar_model(0.9, 1.0, 1.0);
  m.validate();
  m.C = Matrix::Ones(1, 2);
  CHECK_THROWS_AS(m.validate(), DimensionError);
  m = scalar_model(0.9, -1.0, 1.0);
  CHECK_THROWS_AS(m.validate(), NumericError);
}
