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

#ifndef MTDSKIT_TYPES_HPP
#define MTDSKIT_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mtdskit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Shape or argument mismatch detected before any numerics run.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A computation produced or detected a non-finite / degenerate result.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or command line input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed data file (CSV schema violation, bad artifact, ...).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Elementwise link applied to one output row of the affine map from latent
/// code to model parameters.
enum class Constraint { kIdentity, kLogistic, kSoftplus };

/// Numerically stable logistic; never overflows for any finite x.
double logistic(double x);

/// Numerically stable log(1 + exp(x)); exact in both tails.
double softplus(double x);

double constrain(Constraint c, double x);
double constrain_derivative(Constraint c, double x);

std::string_view to_string(Constraint c);
Constraint constraint_from_string(std::string_view name);

using ConstraintSpec = std::vector<Constraint>;

/// One observed trajectory. Rows are time steps t = 0..T-1. mask(t, j) is
/// true where y is observed; missing entries are stored as 0 and must never
/// enter a likelihood.
struct SequenceRecord {
  std::string seq_id;
  Matrix U;        // T x n_u inputs
  Matrix Y;        // T x n_y outputs
  MaskMatrix mask; // T x n_y

  int length() const { return static_cast<int>(U.rows()); }
  int input_dim() const { return static_cast<int>(U.cols()); }
  int output_dim() const { return static_cast<int>(Y.cols()); }

  /// Record truncated to its first t steps.
  SequenceRecord prefix(int t) const;

  /// Throws DimensionError if U/Y/mask shapes disagree.
  void validate() const;
};

/// Uniformly shaped collection of sequences of possibly different lengths.
struct SequenceDataset {
  std::vector<SequenceRecord> sequences;

  int size() const { return static_cast<int>(sequences.size()); }
  int input_dim() const;
  int output_dim() const;

  const SequenceRecord& by_id(const std::string& seq_id) const;

  /// Throws DimensionError unless every record validates and all records
  /// agree on n_u and n_y; also rejects duplicate seq_ids.
  void validate() const;
};

/// Affine map with elementwise links: theta = f(W z + b). Rows of W carry
/// the per-coordinate constraint from `constraints`.
struct ParamGenerator {
  Matrix W;                    // d x k
  Vector b;                    // d
  ConstraintSpec constraints;  // size d

  int latent_dim() const { return static_cast<int>(W.cols()); }
  int param_dim() const { return static_cast<int>(W.rows()); }

  void validate() const;
};

Vector apply_param_generator(const ParamGenerator& gen, const Vector& z);

/// theta at z = 0, i.e. f(b).
Vector default_params(const ParamGenerator& gen);

/// Diagonal Gaussian q(z) = N(mu, diag(exp(log_s))^2) used per sequence
/// during variational training.
struct VariationalPosterior {
  Vector mu;
  Vector log_s;

  int dim() const { return static_cast<int>(mu.size()); }
  void validate() const;
};

/// KL(q || N(0, I)) for a diagonal Gaussian q. Exactly zero at mu = 0,
/// log_s = 0.
double kl_to_standard_normal(const VariationalPosterior& q);

/// Multivariate Gaussian log density with covariance supplied directly.
double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// z = mu + exp(log_s) .* eps.
Vector reparameterize(const VariationalPosterior& q, const Vector& eps);

/// Per-channel observation noise precision; emission noise is
/// N(0, 1/nu_j) on channel j.
struct NoisePrecision {
  Vector nu;

  explicit NoisePrecision(Vector precision);
  static NoisePrecision from_log(const Vector& log_nu);

  int dim() const { return static_cast<int>(nu.size()); }
};

}  // namespace mtdskit

#endif  // MTDSKIT_TYPES_HPP
