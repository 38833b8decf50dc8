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

#ifndef MTDSKIT_LEARNING_HPP
#define MTDSKIT_LEARNING_HPP

#include <optional>
#include <string>
#include <vector>

#include "mtdskit/gradients.hpp"
#include "mtdskit/model.hpp"
#include "mtdskit/rng.hpp"

namespace mtdskit {

/// First/second moment accumulators for one parameter block.
struct AdamState {
  Vector m;
  Vector v;
  long steps = 0;
};

/// One maximization step of decoupled-weight-decay Adam on a flat parameter
/// block: params += update(grad ascent), then params *= (1 - lr * l2).
void adam_step(Vector* params, const Vector& grad, AdamState* state, double lr,
               double l2);

struct TrainConfig {
  int n_iters = 2000;
  int batch_size = 8;
  double lr_main = 3e-4;   // shared parameters and log nu
  double lr_mt = 1e-2;     // generator and variational parameters
  double l2_main = 1e-2;   // weight penalty on the shared block
  double l2_mt = 1e-2;     // weight penalty on W and b
  int kl_warmup_iters = -1;  // < 0 means 20% of n_iters
  int n_mc_samples = 1;
  int latent_dim = 2;
  std::uint64_t seed = 0;
  int segment_len = 0;       // > 0 splits long sequences into windows
  bool freeze_loading = false;        // keep W at zero (pooled training)
  std::vector<int> freeze_rows;       // generator rows excluded from learning
  std::string log_path;               // optional training-log CSV
  int log_interval = 25;

  void validate() const;
  int effective_warmup() const;
};

struct TrainLogEntry {
  long iter = 0;
  double elbo = 0.0;
  double kl_weight = 0.0;
  double wallclock_ms = 0.0;
};

struct LatentSpreadStat {
  long iter = 0;
  Vector mean_s2;  // per-dimension posterior variance averaged over sequences
};

/// Everything the optimizer owns: the generator, shared parameters, noise,
/// per-sequence variational posteriors and Adam moments.
struct TrainState {
  ParamGenerator gen;
  Vector shared;
  Vector log_nu;
  std::vector<std::string> seq_ids;
  std::vector<VariationalPosterior> posteriors;
  long iter = 0;

  AdamState opt_w, opt_b, opt_shared, opt_log_nu;
  std::vector<AdamState> opt_mu, opt_log_s;

  std::vector<TrainLogEntry> log;
  std::vector<LatentSpreadStat> spread;

  const VariationalPosterior& posterior_for(const std::string& seq_id) const;
  int posterior_index(const std::string& seq_id) const;
};

struct ElboGradients {
  double value = 0.0;
  double loglik_term = 0.0;
  double kl = 0.0;
  Matrix d_W;
  Vector d_b;
  Vector d_shared;
  Vector d_log_nu;
  Vector d_mu;
  Vector d_log_s;
};

/// Single-sequence reparameterized ELBO estimate
///   mean_s log p(y | u, h(mu + s .* eps_s)) - kl_weight * KL(q || N(0, I))
/// with gradients for every trainable block.
ElboGradients elbo_estimate(const BaseModel& model, const ParamGenerator& gen,
                            const Vector& shared, const Vector& log_nu,
                            const VariationalPosterior& q,
                            const SequenceRecord& rec, double kl_weight,
                            int n_samples, Rng& rng);

/// Variational training over the dataset. Returns the final state; the
/// training log holds one entry per log_interval with the batch-mean ELBO.
TrainState train(const BaseModel& model, const SequenceDataset& data,
                 const TrainConfig& config);

/// Importance-sampled estimate of log p(y | u) under z ~ N(0, I) with its
/// delta-method standard error sd(w) / (mean(w) sqrt(S)).
struct LogMarginalEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

LogMarginalEstimate log_marginal_is_estimate(const BaseModel& model,
                                             const ParamGenerator& gen,
                                             const Vector& shared,
                                             const Vector& log_nu,
                                             const SequenceRecord& rec,
                                             int n_samples, Rng& rng);

/// Non-overlapping training windows of length segment_len (the tail keeps
/// whatever remains, never shorter than 2 steps); ids gain a "#offset"
/// suffix. segment_len <= 0 returns the dataset unchanged.
SequenceDataset segment_dataset(const SequenceDataset& data, int segment_len);

void write_training_log(const std::string& path,
                        const std::vector<TrainLogEntry>& log);

}  // namespace mtdskit

#endif  // MTDSKIT_LEARNING_HPP
