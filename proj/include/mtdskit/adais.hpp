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

#ifndef MTDSKIT_ADAIS_HPP
#define MTDSKIT_ADAIS_HPP

#include <functional>
#include <optional>

#include "mtdskit/gradients.hpp"
#include "mtdskit/model.hpp"
#include "mtdskit/rng.hpp"
#include "mtdskit/types.hpp"

namespace mtdskit {

/// Full-covariance Gaussian mixture over the latent space.
struct GaussianMixture {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;

  static GaussianMixture standard_normal(int dim);

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  /// Checks weight normalization, shape agreement and positive definiteness.
  void validate() const;
};

double gmm_logpdf(const GaussianMixture& q, const Vector& z);

/// Draw using k+1 uniforms: the first picks the component, the rest map
/// through the normal quantile function. Sharing this path between Rng and
/// ScrambledSobol keeps pseudo- and quasi-random sampling aligned.
Vector gmm_sample(const GaussianMixture& q, Rng& rng);
Vector gmm_sample(const GaussianMixture& q, const Vector& uniforms);

/// Effective sample size 1 / sum(w^2) of normalized weights.
double effective_sample_size(const Vector& normalized_weights);

/// Normalizes log weights with a max shift; throws NumericError when every
/// weight is -inf (the target has no support under the proposal).
Vector normalize_log_weights(const Vector& log_weights);

struct WeightedEmResult {
  GaussianMixture mixture;
  bool floor_activated = false;  // an eigenvalue clamp fired
  bool collapsed = false;        // a component lost all weight and was reseeded
};

/// Weighted EM for a J-component Gaussian mixture, warm-started from `init`.
/// When init has fewer than J components, the heaviest component is split
/// along its principal axis until J is reached. Covariance eigenvalues are
/// clamped from below at cov_floor after every M step.
WeightedEmResult weighted_em(const Matrix& particles, const Vector& weights,
                             int n_components, const GaussianMixture& init,
                             int n_iters, double cov_floor);

struct AdaIsConfig {
  int n_particles = 1000;       // draws per adaptation
  double ess_threshold = 250.0; // stop adapting once ESS reaches this
  int max_adaptations = 5;
  int n_components = 4;
  int em_iters = 10;
  double cov_floor = 1e-6;
  int thinning = 1;             // observation steps folded into one update
  bool quasi_random = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdaptationDiagnostics {
  double ess = 0.0;
  bool reached_threshold = false;
};

struct AdaIsResult {
  GaussianMixture posterior;
  std::vector<AdaptationDiagnostics> adaptations;
  /// True when some adaptation reached the ESS threshold.
  bool reached_threshold = false;
  /// True when the degenerate-ESS rescue (inflating proposal covariances)
  /// had to fire.
  bool rescued = false;
  /// ESS of the final adaptation.
  double final_ess = 0.0;
};

/// Adaptive importance sampling against an unnormalized log target. Each
/// adaptation draws particles from the current proposal, importance-weights
/// them against the target, refits the mixture by weighted EM, and stops
/// early once the weights' ESS clears the threshold.
AdaIsResult adais_fit(const std::function<double(const Vector&)>& log_target,
                      const GaussianMixture& initial_proposal,
                      const AdaIsConfig& config, Rng& rng);

struct FilterStep {
  int t = 0;  // observations 1..t have been folded in
  GaussianMixture posterior;
  double ess = 0.0;
  int adaptations = 0;
  bool reached_threshold = false;
  bool rescued = false;
};

/// Sequential posterior inference over the latent code: step t fits
/// q_t(z) ~ p(z | y_{1:t}, u_{1:t}) by AdaIS started from q_{t-1}. The
/// likelihood is recomputed from scratch at each step (deterministic state,
/// so the full-prefix simulation is the exact likelihood). `thinning` > 1
/// processes every v-th step, always including T.
std::vector<FilterStep> sequential_filter(const BaseModel& model,
                                          const ParamGenerator& gen,
                                          const Vector& shared,
                                          const Vector& log_nu,
                                          const SequenceRecord& rec,
                                          const AdaIsConfig& config);

/// One reweighting step of self-normalized importance sampling without
/// moving particles; demonstrates weight degeneracy on long windows.
struct ParticleCloud {
  Matrix particles;    // M x k
  Vector log_weights;  // unnormalized
};

ParticleCloud naive_smc_reweight(const ParticleCloud& cloud,
                                 const std::function<double(const Vector&)>&
                                     incremental_loglik);

struct PredictiveSummary {
  Matrix mean;  // horizon x n_y, average of noiseless simulations
  Matrix q05;   // pointwise 5% quantile of noisy sample paths
  Matrix q95;
  std::vector<Matrix> sample_paths;
};

/// Posterior predictive over a future window: draws z ~ q, simulates the
/// deterministic model over [prefix; future] inputs, and summarizes the
/// future block. Sample paths add observation noise; the mean does not.
PredictiveSummary posterior_predictive(const BaseModel& model,
                                       const ParamGenerator& gen,
                                       const Vector& shared,
                                       const Vector& log_nu,
                                       const GaussianMixture& posterior,
                                       const Matrix& U_prefix,
                                       const Matrix& U_future, int n_samples,
                                       Rng& rng);

}  // namespace mtdskit

#endif  // MTDSKIT_ADAIS_HPP
