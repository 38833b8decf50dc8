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

#include "mtdskit/types.hpp"

#include <cmath>
#include <set>

namespace mtdskit {

double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // log(1 + e^x) = max(x, 0) + log1p(e^-|x|)
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double constrain(Constraint c, double x) {
  switch (c) {
    case Constraint::kIdentity:
      return x;
    case Constraint::kLogistic:
      return logistic(x);
    case Constraint::kSoftplus:
      return softplus(x);
  }
  throw DimensionError("unknown constraint");
}

double constrain_derivative(Constraint c, double x) {
  switch (c) {
    case Constraint::kIdentity:
      return 1.0;
    case Constraint::kLogistic: {
      const double s = logistic(x);
      return s * (1.0 - s);
    }
    case Constraint::kSoftplus:
      return logistic(x);
  }
  throw DimensionError("unknown constraint");
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::kIdentity:
      return "identity";
    case Constraint::kLogistic:
      return "logistic";
    case Constraint::kSoftplus:
      return "softplus";
  }
  throw DimensionError("unknown constraint");
}

Constraint constraint_from_string(std::string_view name) {
  if (name == "identity") return Constraint::kIdentity;
  if (name == "logistic") return Constraint::kLogistic;
  if (name == "softplus") return Constraint::kSoftplus;
  throw DataError("unknown constraint name: " + std::string(name));
}

SequenceRecord SequenceRecord::prefix(int t) const {
  if (t < 0 || t > length()) {
    throw DimensionError("prefix length out of range for sequence " + seq_id);
  }
  SequenceRecord out;
  out.seq_id = seq_id;
  out.U = U.topRows(t);
  out.Y = Y.topRows(t);
  out.mask = mask.topRows(t);
  return out;
}

void SequenceRecord::validate() const {
  if (Y.rows() != U.rows() || mask.rows() != U.rows() || mask.cols() != Y.cols()) {
    throw DimensionError("sequence " + seq_id + ": U/Y/mask shapes disagree");
  }
  if (!U.allFinite() || !Y.allFinite()) {
    throw DataError("sequence " + seq_id + ": non-finite values");
  }
}

int SequenceDataset::input_dim() const {
  return sequences.empty() ? 0 : sequences.front().input_dim();
}

int SequenceDataset::output_dim() const {
  return sequences.empty() ? 0 : sequences.front().output_dim();
}

const SequenceRecord& SequenceDataset::by_id(const std::string& seq_id) const {
  for (const auto& rec : sequences) {
    if (rec.seq_id == seq_id) return rec;
  }
  throw DataError("unknown seq_id: " + seq_id);
}

void SequenceDataset::validate() const {
  std::set<std::string> ids;
  for (const auto& rec : sequences) {
    rec.validate();
    if (rec.input_dim() != input_dim() || rec.output_dim() != output_dim()) {
      throw DimensionError("sequence " + rec.seq_id + ": channel count mismatch");
    }
    if (!ids.insert(rec.seq_id).second) {
      throw DataError("duplicate seq_id: " + rec.seq_id);
    }
  }
}

void ParamGenerator::validate() const {
  if (b.size() != W.rows()) {
    throw DimensionError("param generator: b length != rows of W");
  }
  if (constraints.size() != static_cast<std::size_t>(W.rows())) {
    throw DimensionError("param generator: constraint count != rows of W");
  }
}

Vector apply_param_generator(const ParamGenerator& gen, const Vector& z) {
  if (z.size() != gen.W.cols()) {
    throw DimensionError("param generator: latent code has wrong length");
  }
  Vector pre = gen.W * z + gen.b;
  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    pre[i] = constrain(gen.constraints[static_cast<std::size_t>(i)], pre[i]);
  }
  return pre;
}

Vector default_params(const ParamGenerator& gen) {
  return apply_param_generator(gen, Vector::Zero(gen.latent_dim()));
}

void VariationalPosterior::validate() const {
  if (log_s.size() != mu.size()) {
    throw DimensionError("variational posterior: mu/log_s length mismatch");
  }
}

double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  if (x.size() != mean.size() || cov.rows() != x.size() || cov.cols() != x.size()) {
    throw DimensionError("mvn_logpdf: shape mismatch");
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("mvn_logpdf: covariance not positive definite");
  }
  const Vector diff = x - mean;
  const Vector alpha = llt.matrixL().solve(diff);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    logdet += std::log(llt.matrixL()(i, i));
  }
  return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + alpha.squaredNorm()) -
         logdet;
}

double kl_to_standard_normal(const VariationalPosterior& q) {
  q.validate();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.mu.size(); ++i) {
    const double s2 = std::exp(2.0 * q.log_s[i]);
    acc += q.mu[i] * q.mu[i] + s2 - 1.0 - 2.0 * q.log_s[i];
  }
  return 0.5 * acc;
}

Vector reparameterize(const VariationalPosterior& q, const Vector& eps) {
  q.validate();
  if (eps.size() != q.mu.size()) {
    throw DimensionError("reparameterize: eps length mismatch");
  }
  return q.mu + q.log_s.array().exp().matrix().cwiseProduct(eps);
}

NoisePrecision::NoisePrecision(Vector precision) : nu(std::move(precision)) {
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (!(nu[i] > 0.0) || !std::isfinite(nu[i])) {
      throw NumericError("noise precision must be finite and positive");
    }
  }
}

NoisePrecision NoisePrecision::from_log(const Vector& log_nu) {
  return NoisePrecision(log_nu.array().exp().matrix());
}

}  // namespace mtdskit
