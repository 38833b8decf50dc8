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

#ifndef MTDSKIT_MTRNN_HPP
#define MTDSKIT_MTRNN_HPP

#include "mtdskit/model.hpp"

namespace mtdskit {

/// Two-layer recurrent model in which only the second layer varies across
/// sequences. The first layer is a shared GRU; its state reaches the second
/// layer through a low-rank read-out H (the bottleneck):
///
///   x1_t = GRU(x1_{t-1}, u_t; shared),
///   x2_t = tanh(A2 x2_{t-1} + B2 (H x1_{t-1}) + b2),
///   yhat_t = C x2_t + d,          x1_0 = x2_0 = 0.
///
/// GRU gates: gr = logistic(Ar x + Br u + br), gs = logistic(As x + Bs u +
/// bs), xc = tanh(Ax (gr .* x) + Bx u + bx), x' = (1 - gs) .* x + gs .* xc.
///
/// Per-sequence theta: [vec(A2), vec(B2), vec(C), d], all unconstrained.
/// Shared vector: [vec(Ar), vec(Br), br, vec(As), vec(Bs), bs, vec(Ax),
/// vec(Bx), bx, vec(H), b2], matrices column-major. The second-layer bias b2
/// lives in the shared block so it stays common across sequences.
///
/// The backward pass stores only the state trajectories and recomputes gate
/// activations, which reproduces forward arithmetic exactly.
class MtRnn : public BaseModel {
 public:
  MtRnn(int n1, int bottleneck, int n2, int n_u, int n_y);

  std::string kind() const override { return "mtrnn"; }
  int param_dim() const override;
  int shared_dim() const override;
  int input_dim() const override { return n_u_; }
  int output_dim() const override { return n_y_; }

  int first_layer_dim() const { return n1_; }
  int bottleneck_dim() const { return l_; }
  int second_layer_dim() const { return n2_; }

  ConstraintSpec constraints() const override;
  Vector default_raw_offset(Rng& rng) const override;
  Vector default_shared(Rng& rng) const override;

  Matrix simulate(const Vector& theta, const Vector& shared,
                  const Matrix& U) const override;
  LoglikGradients loglik_backward(const Vector& theta, const Vector& shared,
                                  const SequenceRecord& rec,
                                  const Vector& log_nu) const override;

  /// Index of the first vec(H) entry inside the shared vector; the weight
  /// penalty during training covers the GRU block and H but not b2.
  int shared_h_offset() const;
  int shared_b2_offset() const;

 private:
  struct ThetaView {
    Eigen::Map<const Matrix> A2, B2, C;
    Eigen::Map<const Vector> d;
  };
  struct SharedView {
    Eigen::Map<const Matrix> Ar, Br;
    Eigen::Map<const Vector> br;
    Eigen::Map<const Matrix> As, Bs;
    Eigen::Map<const Vector> bs;
    Eigen::Map<const Matrix> Ax, Bx;
    Eigen::Map<const Vector> bx;
    Eigen::Map<const Matrix> H;
    Eigen::Map<const Vector> b2;
  };
  ThetaView theta_view(const Vector& theta) const;
  SharedView shared_view(const Vector& shared) const;

  void forward(const ThetaView& th, const SharedView& sh, const Matrix& U,
               Matrix* X1, Matrix* X2, Matrix* Yhat) const;

  int n1_, l_, n2_, n_u_, n_y_;
};

}  // namespace mtdskit

#endif  // MTDSKIT_MTRNN_HPP
