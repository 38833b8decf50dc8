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

#include "mtdskit/lds.hpp"

#include <cmath>

namespace mtdskit {

DeterministicLds::DeterministicLds(int n_x, int n_u, int n_y)
    : n_x_(n_x), n_u_(n_u), n_y_(n_y) {
  if (n_x < 1 || n_u < 1 || n_y < 1) {
    throw DimensionError("lds: dimensions must be positive");
  }
}

int DeterministicLds::param_dim() const {
  return n_x_ + n_x_ * n_u_ + n_y_ * n_x_ + n_y_;
}

ConstraintSpec DeterministicLds::constraints() const {
  // Stability is enforced inside the transition construction, so every raw
  // coordinate passes through unconstrained.
  return ConstraintSpec(static_cast<std::size_t>(param_dim()),
                        Constraint::kIdentity);
}

Vector DeterministicLds::default_raw_offset(Rng& /*rng*/) const {
  Vector b = Vector::Zero(param_dim());
  const int blocks = n_x_ / 2;
  for (int i = 0; i < blocks; ++i) {
    b[2 * i] = 2.0;                 // r = (1 - eps) * logistic(2) ~ 0.88
    b[2 * i + 1] = 0.2 + 0.35 * i;  // distinct rotation speeds per block
  }
  if (n_x_ % 2 == 1) b[n_x_ - 1] = 0.5;
  int off = n_x_;
  for (int i = 0; i < n_x_ * n_u_; ++i) b[off + i] = 0.3;
  off += n_x_ * n_u_;
  for (int c = 0; c < n_x_; ++c) {
    for (int r = 0; r < n_y_; ++r) {
      b[off + c * n_y_ + r] = ((r + c) % 2 == 0) ? 0.4 : -0.2;
    }
  }
  return b;
}

Vector DeterministicLds::default_shared(Rng& /*rng*/) const { return Vector(0); }

Matrix DeterministicLds::transition(const Vector& raw_dyn) const {
  if (raw_dyn.size() != n_x_) {
    throw DimensionError("lds: raw_dyn has wrong length");
  }
  Matrix A = Matrix::Zero(n_x_, n_x_);
  const double scale = 1.0 - kStabilityMargin;
  const int blocks = n_x_ / 2;
  for (int i = 0; i < blocks; ++i) {
    const double r = scale * logistic(raw_dyn[2 * i]);
    const double w = raw_dyn[2 * i + 1];
    const double c = std::cos(w);
    const double s = std::sin(w);
    A(2 * i, 2 * i) = r * c;
    A(2 * i, 2 * i + 1) = -r * s;
    A(2 * i + 1, 2 * i) = r * s;
    A(2 * i + 1, 2 * i + 1) = r * c;
  }
  if (n_x_ % 2 == 1) {
    A(n_x_ - 1, n_x_ - 1) = scale * std::tanh(raw_dyn[n_x_ - 1]);
  }
  return A;
}

DeterministicLds::Realized DeterministicLds::realize(const Vector& theta) const {
  check_theta(theta);
  Realized out;
  out.A = transition(theta.head(n_x_));
  int off = n_x_;
  out.B = Eigen::Map<const Matrix>(theta.data() + off, n_x_, n_u_);
  off += n_x_ * n_u_;
  out.C = Eigen::Map<const Matrix>(theta.data() + off, n_y_, n_x_);
  off += n_y_ * n_x_;
  out.d = theta.segment(off, n_y_);
  return out;
}

Matrix DeterministicLds::simulate(const Vector& theta, const Vector& shared,
                                  const Matrix& U) const {
  check_shared(shared);
  check_inputs(U);
  const Realized m = realize(theta);
  const int T = static_cast<int>(U.rows());
  Matrix Yhat(T, n_y_);
  Vector x = Vector::Zero(n_x_);
  for (int t = 0; t < T; ++t) {
    x = m.A * x + m.B * U.row(t).transpose();
    Yhat.row(t) = (m.C * x + m.d).transpose();
  }
  return Yhat;
}

LoglikGradients DeterministicLds::loglik_backward(const Vector& theta,
                                                  const Vector& shared,
                                                  const SequenceRecord& rec,
                                                  const Vector& log_nu) const {
  check_theta(theta);
  check_shared(shared);
  check_inputs(rec.U);
  rec.validate();
  if (log_nu.size() != n_y_) {
    throw DimensionError("lds: log_nu has wrong length");
  }
  const Realized m = realize(theta);
  const int T = rec.length();
  const NoisePrecision nu = NoisePrecision::from_log(log_nu);

  Matrix X(T + 1, n_x_);  // row t holds x_t; row 0 is the zero initial state
  X.row(0).setZero();
  Matrix Yhat(T, n_y_);
  for (int t = 0; t < T; ++t) {
    X.row(t + 1) =
        (m.A * X.row(t).transpose() + m.B * rec.U.row(t).transpose()).transpose();
    Yhat.row(t) = (m.C * X.row(t + 1).transpose() + m.d).transpose();
  }

  LoglikGradients out;
  out.value = gaussian_loglik(Yhat, rec.Y, rec.mask, nu);
  out.d_shared = Vector(0);
  out.d_log_nu = Vector::Zero(n_y_);

  Matrix dA = Matrix::Zero(n_x_, n_x_);
  Matrix dB = Matrix::Zero(n_x_, n_u_);
  Matrix dC = Matrix::Zero(n_y_, n_x_);
  Vector dd = Vector::Zero(n_y_);
  Vector lambda = Vector::Zero(n_x_);  // dL/dx_t carried backwards
  for (int t = T - 1; t >= 0; --t) {
    Vector dyhat = Vector::Zero(n_y_);
    for (int j = 0; j < n_y_; ++j) {
      if (!rec.mask(t, j)) continue;
      const double r = rec.Y(t, j) - Yhat(t, j);
      dyhat[j] = nu.nu[j] * r;
      out.d_log_nu[j] += 0.5 * (1.0 - nu.nu[j] * r * r);
    }
    lambda += m.C.transpose() * dyhat;
    dC += dyhat * X.row(t + 1);
    dd += dyhat;
    dA += lambda * X.row(t);
    dB += lambda * rec.U.row(t);
    lambda = (m.A.transpose() * lambda).eval();
  }

  out.d_theta = Vector::Zero(param_dim());
  const double scale = 1.0 - kStabilityMargin;
  const int blocks = n_x_ / 2;
  for (int i = 0; i < blocks; ++i) {
    const double raw_r = theta[2 * i];
    const double w = theta[2 * i + 1];
    const double sig = logistic(raw_r);
    const double r = scale * sig;
    const double c = std::cos(w);
    const double s = std::sin(w);
    const double da11 = dA(2 * i, 2 * i);
    const double da12 = dA(2 * i, 2 * i + 1);
    const double da21 = dA(2 * i + 1, 2 * i);
    const double da22 = dA(2 * i + 1, 2 * i + 1);
    const double dr = c * (da11 + da22) + s * (da21 - da12);
    const double dw = r * (-s * da11 - c * da12 + c * da21 - s * da22);
    out.d_theta[2 * i] = dr * scale * sig * (1.0 - sig);
    out.d_theta[2 * i + 1] = dw;
  }
  if (n_x_ % 2 == 1) {
    const double th = std::tanh(theta[n_x_ - 1]);
    out.d_theta[n_x_ - 1] =
        dA(n_x_ - 1, n_x_ - 1) * scale * (1.0 - th * th);
  }
  int off = n_x_;
  Eigen::Map<Matrix>(out.d_theta.data() + off, n_x_, n_u_) = dB;
  off += n_x_ * n_u_;
  Eigen::Map<Matrix>(out.d_theta.data() + off, n_y_, n_x_) = dC;
  off += n_y_ * n_x_;
  out.d_theta.segment(off, n_y_) = dd;
  return out;
}

}  // namespace mtdskit
