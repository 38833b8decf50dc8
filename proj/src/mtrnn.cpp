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

#include "mtdskit/mtrnn.hpp"

#include <cmath>

namespace mtdskit {

namespace {
inline double sigmoid(double x) { return logistic(x); }
}  // namespace

MtRnn::MtRnn(int n1, int bottleneck, int n2, int n_u, int n_y)
    : n1_(n1), l_(bottleneck), n2_(n2), n_u_(n_u), n_y_(n_y) {
  if (n1 < 1 || bottleneck < 1 || n2 < 1 || n_u < 1 || n_y < 1) {
    throw DimensionError("mtrnn: dimensions must be positive");
  }
}

int MtRnn::param_dim() const {
  return n2_ * n2_ + n2_ * l_ + n_y_ * n2_ + n_y_;
}

int MtRnn::shared_dim() const {
  const int gate = n1_ * n1_ + n1_ * n_u_ + n1_;
  return 3 * gate + l_ * n1_ + n2_;
}

int MtRnn::shared_h_offset() const {
  return 3 * (n1_ * n1_ + n1_ * n_u_ + n1_);
}

int MtRnn::shared_b2_offset() const { return shared_h_offset() + l_ * n1_; }

ConstraintSpec MtRnn::constraints() const {
  return ConstraintSpec(static_cast<std::size_t>(param_dim()),
                        Constraint::kIdentity);
}

Vector MtRnn::default_raw_offset(Rng& rng) const {
  Vector b(param_dim());
  const double s2 = 1.0 / std::sqrt(static_cast<double>(n2_));
  const double sl = 1.0 / std::sqrt(static_cast<double>(l_));
  int off = 0;
  for (int i = 0; i < n2_ * n2_; ++i) b[off++] = s2 * (2.0 * rng.uniform() - 1.0);
  for (int i = 0; i < n2_ * l_; ++i) b[off++] = sl * (2.0 * rng.uniform() - 1.0);
  for (int i = 0; i < n_y_ * n2_; ++i) b[off++] = s2 * (2.0 * rng.uniform() - 1.0);
  for (int i = 0; i < n_y_; ++i) b[off++] = 0.0;
  return b;
}

Vector MtRnn::default_shared(Rng& rng) const {
  Vector v = Vector::Zero(shared_dim());
  const double s1 = 1.0 / std::sqrt(static_cast<double>(n1_));
  const int gate = n1_ * n1_ + n1_ * n_u_ + n1_;
  for (int g = 0; g < 3; ++g) {
    int off = g * gate;
    for (int i = 0; i < n1_ * n1_ + n1_ * n_u_; ++i) {
      v[off + i] = s1 * (2.0 * rng.uniform() - 1.0);
    }
    // Gate biases stay zero.
  }
  int off = shared_h_offset();
  for (int i = 0; i < l_ * n1_; ++i) {
    v[off + i] = s1 * (2.0 * rng.uniform() - 1.0);
  }
  return v;
}

MtRnn::ThetaView MtRnn::theta_view(const Vector& theta) const {
  const double* p = theta.data();
  const int a2 = n2_ * n2_;
  const int b2 = n2_ * l_;
  const int c = n_y_ * n2_;
  return ThetaView{
      Eigen::Map<const Matrix>(p, n2_, n2_),
      Eigen::Map<const Matrix>(p + a2, n2_, l_),
      Eigen::Map<const Matrix>(p + a2 + b2, n_y_, n2_),
      Eigen::Map<const Vector>(p + a2 + b2 + c, n_y_),
  };
}

MtRnn::SharedView MtRnn::shared_view(const Vector& shared) const {
  const double* p = shared.data();
  const int aa = n1_ * n1_;
  const int bb = n1_ * n_u_;
  const int gate = aa + bb + n1_;
  return SharedView{
      Eigen::Map<const Matrix>(p, n1_, n1_),
      Eigen::Map<const Matrix>(p + aa, n1_, n_u_),
      Eigen::Map<const Vector>(p + aa + bb, n1_),
      Eigen::Map<const Matrix>(p + gate, n1_, n1_),
      Eigen::Map<const Matrix>(p + gate + aa, n1_, n_u_),
      Eigen::Map<const Vector>(p + gate + aa + bb, n1_),
      Eigen::Map<const Matrix>(p + 2 * gate, n1_, n1_),
      Eigen::Map<const Matrix>(p + 2 * gate + aa, n1_, n_u_),
      Eigen::Map<const Vector>(p + 2 * gate + aa + bb, n1_),
      Eigen::Map<const Matrix>(p + 3 * gate, l_, n1_),
      Eigen::Map<const Vector>(p + 3 * gate + l_ * n1_, n2_),
  };
}

void MtRnn::forward(const ThetaView& th, const SharedView& sh, const Matrix& U,
                    Matrix* X1, Matrix* X2, Matrix* Yhat) const {
  const int T = static_cast<int>(U.rows());
  X1->resize(T + 1, n1_);
  X2->resize(T + 1, n2_);
  Yhat->resize(T, n_y_);
  X1->row(0).setZero();
  X2->row(0).setZero();
  for (int t = 0; t < T; ++t) {
    const Vector u = U.row(t).transpose();
    const Vector x1 = X1->row(t).transpose();
    const Vector x2 = X2->row(t).transpose();
    // Second layer reads the previous first-layer state.
    const Vector v = sh.H * x1;
    const Vector pre2 = th.A2 * x2 + th.B2 * v + sh.b2;
    const Vector x2n = pre2.array().tanh();
    X2->row(t + 1) = x2n.transpose();
    (*Yhat).row(t) = (th.C * x2n + th.d).transpose();
    const Vector gr =
        (sh.Ar * x1 + sh.Br * u + sh.br).unaryExpr([](double a) { return sigmoid(a); });
    const Vector gs =
        (sh.As * x1 + sh.Bs * u + sh.bs).unaryExpr([](double a) { return sigmoid(a); });
    const Vector xc =
        (sh.Ax * gr.cwiseProduct(x1) + sh.Bx * u + sh.bx).array().tanh();
    X1->row(t + 1) =
        ((Vector::Ones(n1_) - gs).cwiseProduct(x1) + gs.cwiseProduct(xc))
            .transpose();
  }
}

Matrix MtRnn::simulate(const Vector& theta, const Vector& shared,
                       const Matrix& U) const {
  check_theta(theta);
  check_shared(shared);
  check_inputs(U);
  Matrix X1, X2, Yhat;
  forward(theta_view(theta), shared_view(shared), U, &X1, &X2, &Yhat);
  return Yhat;
}

LoglikGradients MtRnn::loglik_backward(const Vector& theta, const Vector& shared,
                                       const SequenceRecord& rec,
                                       const Vector& log_nu) const {
  check_theta(theta);
  check_shared(shared);
  check_inputs(rec.U);
  rec.validate();
  if (log_nu.size() != n_y_) throw DimensionError("mtrnn: log_nu has wrong length");
  const NoisePrecision nu = NoisePrecision::from_log(log_nu);
  const ThetaView th = theta_view(theta);
  const SharedView sh = shared_view(shared);
  const int T = rec.length();

  Matrix X1, X2, Yhat;
  forward(th, sh, rec.U, &X1, &X2, &Yhat);

  LoglikGradients out;
  out.value = gaussian_loglik(Yhat, rec.Y, rec.mask, nu);
  out.d_theta = Vector::Zero(param_dim());
  out.d_shared = Vector::Zero(shared_dim());
  out.d_log_nu = Vector::Zero(n_y_);

  const int a2n = n2_ * n2_;
  const int b2n = n2_ * l_;
  const int cn = n_y_ * n2_;
  Eigen::Map<Matrix> dA2(out.d_theta.data(), n2_, n2_);
  Eigen::Map<Matrix> dB2(out.d_theta.data() + a2n, n2_, l_);
  Eigen::Map<Matrix> dC(out.d_theta.data() + a2n + b2n, n_y_, n2_);
  Eigen::Map<Vector> dd(out.d_theta.data() + a2n + b2n + cn, n_y_);

  const int aa = n1_ * n1_;
  const int bb = n1_ * n_u_;
  const int gate = aa + bb + n1_;
  double* sp = out.d_shared.data();
  Eigen::Map<Matrix> dAr(sp, n1_, n1_);
  Eigen::Map<Matrix> dBr(sp + aa, n1_, n_u_);
  Eigen::Map<Vector> dbr(sp + aa + bb, n1_);
  Eigen::Map<Matrix> dAs(sp + gate, n1_, n1_);
  Eigen::Map<Matrix> dBs(sp + gate + aa, n1_, n_u_);
  Eigen::Map<Vector> dbs(sp + gate + aa + bb, n1_);
  Eigen::Map<Matrix> dAx(sp + 2 * gate, n1_, n1_);
  Eigen::Map<Matrix> dBx(sp + 2 * gate + aa, n1_, n_u_);
  Eigen::Map<Vector> dbx(sp + 2 * gate + aa + bb, n1_);
  Eigen::Map<Matrix> dH(sp + 3 * gate, l_, n1_);
  Eigen::Map<Vector> db2(sp + 3 * gate + l_ * n1_, n2_);

  Vector dx1 = Vector::Zero(n1_);  // dL/dx1_t at the step being processed
  Vector dx2 = Vector::Zero(n2_);
  for (int t = T - 1; t >= 0; --t) {
    const Vector u = rec.U.row(t).transpose();
    const Vector x1p = X1.row(t).transpose();    // x1_{t-1}
    const Vector x2p = X2.row(t).transpose();    // x2_{t-1}
    const Vector x2n = X2.row(t + 1).transpose();

    Vector dyhat = Vector::Zero(n_y_);
    for (int j = 0; j < n_y_; ++j) {
      if (!rec.mask(t, j)) continue;
      const double r = rec.Y(t, j) - Yhat(t, j);
      dyhat[j] = nu.nu[j] * r;
      out.d_log_nu[j] += 0.5 * (1.0 - nu.nu[j] * r * r);
    }
    dC += dyhat * x2n.transpose();
    dd += dyhat;
    dx2 += th.C.transpose() * dyhat;

    // Second-layer cell backward.
    const Vector dpre2 =
        dx2.cwiseProduct((Vector::Ones(n2_) - x2n.cwiseProduct(x2n)));
    const Vector v = sh.H * x1p;
    dA2 += dpre2 * x2p.transpose();
    dB2 += dpre2 * v.transpose();
    db2 += dpre2;
    const Vector dv = th.B2.transpose() * dpre2;
    dH += dv * x1p.transpose();
    Vector dx1p = sh.H.transpose() * dv;
    dx2 = th.A2.transpose() * dpre2;

    // GRU backward; gates are recomputed from the stored states.
    const Vector gr =
        (sh.Ar * x1p + sh.Br * u + sh.br).unaryExpr([](double a) { return sigmoid(a); });
    const Vector gs =
        (sh.As * x1p + sh.Bs * u + sh.bs).unaryExpr([](double a) { return sigmoid(a); });
    const Vector hpre = sh.Ax * gr.cwiseProduct(x1p) + sh.Bx * u + sh.bx;
    const Vector xc = hpre.array().tanh();

    const Vector dgs = dx1.cwiseProduct(xc - x1p);
    const Vector dxc = dx1.cwiseProduct(gs);
    dx1p += dx1.cwiseProduct(Vector::Ones(n1_) - gs);
    const Vector dprex =
        dxc.cwiseProduct(Vector::Ones(n1_) - xc.cwiseProduct(xc));
    dAx += dprex * gr.cwiseProduct(x1p).transpose();
    dBx += dprex * u.transpose();
    dbx += dprex;
    const Vector dgrx = sh.Ax.transpose() * dprex;
    const Vector dgr = dgrx.cwiseProduct(x1p);
    dx1p += dgrx.cwiseProduct(gr);
    const Vector dprer =
        dgr.cwiseProduct(gr.cwiseProduct(Vector::Ones(n1_) - gr));
    dAr += dprer * x1p.transpose();
    dBr += dprer * u.transpose();
    dbr += dprer;
    dx1p += sh.Ar.transpose() * dprer;
    const Vector dpres =
        dgs.cwiseProduct(gs.cwiseProduct(Vector::Ones(n1_) - gs));
    dAs += dpres * x1p.transpose();
    dBs += dpres * u.transpose();
    dbs += dpres;
    dx1p += sh.As.transpose() * dpres;

    dx1 = dx1p;
  }
  return out;
}

}  // namespace mtdskit
