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

#ifndef MTDSKIT_BASELINES_HPP
#define MTDSKIT_BASELINES_HPP

#include <functional>
#include <optional>

#include "mtdskit/adais.hpp"
#include "mtdskit/learning.hpp"
#include "mtdskit/pd.hpp"

namespace mtdskit {

/// Gaussian population prior over per-channel output offsets, fitted to the
/// per-sequence mean residuals of a fixed pooled model.
struct OffsetPrior {
  Vector mean;
  Vector var;
};

/// Per-sequence offset estimates are the masked mean of y - (response with
/// zero offset); the prior matches their first two moments (unbiased
/// variance, floored at 1e-8).
OffsetPrior fit_offset_prior(const PdModel& model, const Vector& theta0,
                             const SequenceDataset& data);

struct AlphaPosterior {
  Vector mean;
  Vector var;
};

/// Exact conjugate Gaussian update of the per-channel offsets given the
/// first t_obs rows of the record, holding every other parameter at theta0:
/// posterior precision = prior precision + n_obs * nu_j, posterior mean is
/// the precision-weighted blend of prior mean and residual mean.
AlphaPosterior pooled_alpha_filter(const PdModel& model, const Vector& theta0,
                                   const OffsetPrior& prior,
                                   const NoisePrecision& nu,
                                   const SequenceRecord& rec, int t_obs);

/// Independent per-sequence fit: adaptive importance sampling directly on
/// the model's raw parameter space under a N(0, prior_sd^2 I) prior. The
/// returned mixture lives in the standardized space (raw = prior_sd * z);
/// `generator` maps it to model parameters.
struct SingleTaskResult {
  GaussianMixture posterior;
  ParamGenerator generator;
  double final_ess = 0.0;
  /// Set when no adaptation reached the ESS threshold; callers should treat
  /// the fit as unreliable.
  bool warned = false;
};

SingleTaskResult single_task_fit(const BaseModel& model, const Vector& shared,
                                 const Vector& log_nu, const SequenceRecord& rec,
                                 double prior_sd, const AdaIsConfig& config);

/// Masked in-sample RMSE per channel of the single-task posterior-mean fit;
/// used as the per-sequence scale for standardized RMSE.
Vector single_task_insample_rmse(const BaseModel& model, const Vector& shared,
                                 const Vector& log_nu, const SequenceRecord& rec,
                                 double prior_sd, const AdaIsConfig& config);

struct EvalRow {
  int fold = 0;
  std::string seq_id;
  int anchor = 0;
  int horizon = 0;
  int channel = 0;
  double rmse = 0.0;
  std::optional<double> srmse;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> skipped;  // windows that did not fit the sequence
};

/// Forecast means for the window (anchor, anchor + horizon], conditioned on
/// the first `anchor` rows.
using ForecastFn = std::function<Matrix(const SequenceRecord& rec, int anchor,
                                        int horizon)>;

/// Per-channel RMSE over observed entries of each requested window. Windows
/// reaching past the end of the sequence are skipped and noted; so are
/// channels with no observed entries in a window. When srmse_scale is given,
/// each row also carries rmse / scale[channel].
EvalReport windowed_rmse(const ForecastFn& forecast, const SequenceRecord& rec,
                         const std::vector<int>& anchors,
                         const std::vector<int>& horizons, int fold = 0,
                         const Vector* srmse_scale = nullptr);

void merge_reports(EvalReport* into, const EvalReport& from);

/// Mean RMSE (and SRMSE where present) across sequences for each
/// (anchor, horizon, channel) cell, each sequence weighted equally;
/// aggregate rows use seq_id "ALL" and fold -1.
std::vector<EvalRow> aggregate_report(const EvalReport& report);

struct LooConfig {
  TrainConfig train;
  AdaIsConfig filter;
  std::vector<int> anchors{12, 24};
  std::vector<int> horizons{20, 40};
  int forecast_samples = 400;
  double single_task_prior_sd = 100.0;
  bool with_srmse = false;
  std::uint64_t seed = 0;
};

struct LooResult {
  EvalReport mtds;
  EvalReport pooled;
  EvalReport pooled_alpha;
};

/// Leave-one-sequence-out evaluation: for every fold, train the hierarchical
/// model and the pooled model on the remaining sequences, then forecast the
/// held-out sequence from each anchor with (a) the filtered latent posterior,
/// (b) the pooled parameters as-is, and (c) the pooled parameters with
/// conjugately updated offsets.
LooResult loo_driver(const PdModel& model, const SequenceDataset& data,
                     const LooConfig& config);

}  // namespace mtdskit

#endif  // MTDSKIT_BASELINES_HPP
