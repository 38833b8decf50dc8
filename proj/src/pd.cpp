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

#include "mtdskit/pd.hpp"

#include <cmath>

namespace mtdskit {

PdModel::PdModel(int n_y) : n_y_(n_y) {
  if (n_y < 1) throw DimensionError("pd: n_y must be positive");
}

Vector PdModel::basis_slopes() {
  Vector a(kBasisSize);
  for (int r = 0; r < kBasisSize; ++r) {
    a[r] = -0.5 * std::pow(2.0, (r + 1) / 2.0);
  }
  return a;
}

Vector PdModel::basis_centers() {
  Vector b(kBasisSize);
  for (int r = 0; r < kBasisSize; ++r) {
    b[r] = 10.0 * r / (kBasisSize - 1);
  }
  return b;
}

ConstraintSpec PdModel::constraints() const {
  ConstraintSpec spec(static_cast<std::size_t>(param_dim()));
  for (int j = 0; j < n_y_; ++j) {
    spec[static_cast<std::size_t>(alpha_index(j))] = Constraint::kIdentity;
    spec[static_cast<std::size_t>(beta1_index(j))] = Constraint::kLogistic;
    spec[static_cast<std::size_t>(beta2_index(j))] = Constraint::kSoftplus;
    spec[static_cast<std::size_t>(beta3_index(j))] = Constraint::kIdentity;
    for (int r = 0; r < kBasisSize; ++r) {
      spec[static_cast<std::size_t>(eta_index(j, r))] = Constraint::kSoftplus;
    }
  }
  return spec;
}

Vector PdModel::default_raw_offset(Rng& /*rng*/) const {
  Vector b = Vector::Zero(param_dim());
  for (int j = 0; j < n_y_; ++j) {
    b[alpha_index(j)] = 0.0;
    b[beta1_index(j)] = 1.3862943611198906;   // logistic^-1(0.8)
    b[beta2_index(j)] = -0.43275212956718856; // softplus^-1(0.5)
    b[beta3_index(j)] = 0.0;
    for (int r = 0; r < kBasisSize; ++r) {
      b[eta_index(j, r)] = 0.5413248546129181;  // softplus^-1(1.0)
    }
  }
  return b;
}

Vector PdModel::default_shared(Rng& /*rng*/) const { return Vector(0); }

double PdModel::response_curve(const Vector& theta, int channel, double s) const {
  check_theta(theta);
  const Vector a = basis_slopes();
  const Vector c = basis_centers();
  double g = 0.0;
  for (int r = 0; r < kBasisSize; ++r) {
    g += theta[eta_index(channel, r)] * logistic(a[r] * (s - c[r]));
  }
  return g;
}

Matrix PdModel::simulate(const Vector& theta, const Vector& shared,
                         const Matrix& U) const {
  check_shared(shared);
  return simulate_with_alpha(theta, theta.head(n_y_), U);
}

Matrix PdModel::simulate_with_alpha(const Vector& theta, const Vector& alpha,
                                    const Matrix& U) const {
  check_theta(theta);
  check_inputs(U);
  if (alpha.size() != n_y_) throw DimensionError("pd: alpha has wrong length");
  const int T = static_cast<int>(U.rows());
  const Vector a = basis_slopes();
  const Vector c = basis_centers();
  Matrix Yhat(T, n_y_);
  Vector x = Vector::Zero(n_y_);
  for (int t = 0; t < T; ++t) {
    const double u = U(t, 0);
    for (int j = 0; j < n_y_; ++j) {
      x[j] = theta[beta1_index(j)] * x[j] + theta[beta2_index(j)] * u;
      const double s = x[j] + theta[beta3_index(j)];
      double g = 0.0;
      for (int r = 0; r < kBasisSize; ++r) {
        g += theta[eta_index(j, r)] * logistic(a[r] * (s - c[r]));
      }
      Yhat(t, j) = g + alpha[j];
    }
  }
  return Yhat;
}

LoglikGradients PdModel::loglik_backward(const Vector& theta, const Vector& shared,
                                         const SequenceRecord& rec,
                                         const Vector& log_nu) const {
  check_theta(theta);
  check_shared(shared);
  check_inputs(rec.U);
  rec.validate();
  if (log_nu.size() != n_y_) throw DimensionError("pd: log_nu has wrong length");
  const NoisePrecision nu = NoisePrecision::from_log(log_nu);
  const int T = rec.length();
  const Vector a = basis_slopes();
  const Vector c = basis_centers();

  Matrix X(T + 1, n_y_);
  X.row(0).setZero();
  Matrix Yhat(T, n_y_);
  for (int t = 0; t < T; ++t) {
    const double u = rec.U(t, 0);
    for (int j = 0; j < n_y_; ++j) {
      X(t + 1, j) = theta[beta1_index(j)] * X(t, j) + theta[beta2_index(j)] * u;
      const double s = X(t + 1, j) + theta[beta3_index(j)];
      double g = 0.0;
      for (int r = 0; r < kBasisSize; ++r) {
        g += theta[eta_index(j, r)] * logistic(a[r] * (s - c[r]));
      }
      Yhat(t, j) = g + theta[alpha_index(j)];
    }
  }

  LoglikGradients out;
  out.value = gaussian_loglik(Yhat, rec.Y, rec.mask, nu);
  out.d_theta = Vector::Zero(param_dim());
  out.d_shared = Vector(0);
  out.d_log_nu = Vector::Zero(n_y_);

  // Channels are independent; run one scalar adjoint per channel.
  for (int j = 0; j < n_y_; ++j) {
    double lambda = 0.0;  // dL/dx_tj carried backwards
    const double beta1 = theta[beta1_index(j)];
    for (int t = T - 1; t >= 0; --t) {
      double dyhat = 0.0;
      if (rec.mask(t, j)) {
        const double r = rec.Y(t, j) - Yhat(t, j);
        dyhat = nu.nu[j] * r;
        out.d_log_nu[j] += 0.5 * (1.0 - nu.nu[j] * r * r);
      }
      out.d_theta[alpha_index(j)] += dyhat;
      const double s = X(t + 1, j) + theta[beta3_index(j)];
      double gprime = 0.0;
      for (int r = 0; r < kBasisSize; ++r) {
        const double sig = logistic(a[r] * (s - c[r]));
        out.d_theta[eta_index(j, r)] += dyhat * sig;
        gprime += theta[eta_index(j, r)] * a[r] * sig * (1.0 - sig);
      }
      const double ds = dyhat * gprime;
      out.d_theta[beta3_index(j)] += ds;
      lambda += ds;
      out.d_theta[beta1_index(j)] += lambda * X(t, j);
      out.d_theta[beta2_index(j)] += lambda * rec.U(t, 0);
      lambda *= beta1;
    }
  }
  return out;
}

void pd_discretize(double k_e0, double k_1e, double* beta1, double* beta2) {
  if (k_e0 < 0.0) throw NumericError("pd_discretize: k_e0 must be >= 0");
  *beta1 = std::exp(-k_e0);
  // (1 - e^{-k}) / k = -expm1(-k) / k, with the k -> 0 limit equal to 1.
  *beta2 = k_e0 == 0.0 ? k_1e : k_1e * (-std::expm1(-k_e0)) / k_e0;
}

}  // namespace mtdskit
