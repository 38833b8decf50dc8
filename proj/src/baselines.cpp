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

#include "mtdskit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace mtdskit {

OffsetPrior fit_offset_prior(const PdModel& model, const Vector& theta0,
                             const SequenceDataset& data) {
  data.validate();
  if (data.size() < 2) {
    throw DataError("offset prior: need at least two sequences");
  }
  const int n_y = model.output_dim();
  Matrix offsets(data.size(), n_y);
  for (int i = 0; i < data.size(); ++i) {
    const SequenceRecord& rec = data.sequences[static_cast<std::size_t>(i)];
    const Matrix base =
        model.simulate_with_alpha(theta0, Vector::Zero(n_y), rec.U);
    for (int j = 0; j < n_y; ++j) {
      double sum = 0.0;
      int n = 0;
      for (int t = 0; t < rec.length(); ++t) {
        if (!rec.mask(t, j)) continue;
        sum += rec.Y(t, j) - base(t, j);
        ++n;
      }
      if (n == 0) {
        throw DataError("offset prior: sequence " + rec.seq_id +
                        " has no observations on channel " + std::to_string(j));
      }
      offsets(i, j) = sum / n;
    }
  }
  OffsetPrior prior;
  prior.mean = offsets.colwise().mean().transpose();
  prior.var = Vector(n_y);
  for (int j = 0; j < n_y; ++j) {
    double acc = 0.0;
    for (int i = 0; i < data.size(); ++i) {
      const double d = offsets(i, j) - prior.mean[j];
      acc += d * d;
    }
    prior.var[j] = std::max(acc / (data.size() - 1), 1e-8);
  }
  return prior;
}

AlphaPosterior pooled_alpha_filter(const PdModel& model, const Vector& theta0,
                                   const OffsetPrior& prior,
                                   const NoisePrecision& nu,
                                   const SequenceRecord& rec, int t_obs) {
  if (t_obs < 0 || t_obs > rec.length()) {
    throw DimensionError("pooled_alpha_filter: t_obs out of range");
  }
  const int n_y = model.output_dim();
  if (prior.mean.size() != n_y || prior.var.size() != n_y || nu.dim() != n_y) {
    throw DimensionError("pooled_alpha_filter: channel count mismatch");
  }
  const Matrix base =
      model.simulate_with_alpha(theta0, Vector::Zero(n_y), rec.U.topRows(t_obs));
  AlphaPosterior post;
  post.mean = Vector(n_y);
  post.var = Vector(n_y);
  for (int j = 0; j < n_y; ++j) {
    double resid_sum = 0.0;
    int n = 0;
    for (int t = 0; t < t_obs; ++t) {
      if (!rec.mask(t, j)) continue;
      resid_sum += rec.Y(t, j) - base(t, j);
      ++n;
    }
    const double prior_prec = 1.0 / prior.var[j];
    const double post_prec = prior_prec + n * nu.nu[j];
    post.var[j] = 1.0 / post_prec;
    post.mean[j] =
        (prior_prec * prior.mean[j] + nu.nu[j] * resid_sum) / post_prec;
  }
  return post;
}

SingleTaskResult single_task_fit(const BaseModel& model, const Vector& shared,
                                 const Vector& log_nu, const SequenceRecord& rec,
                                 double prior_sd, const AdaIsConfig& config) {
  if (!(prior_sd > 0.0)) {
    throw ConfigError("single_task_fit: prior_sd must be positive");
  }
  const int d = model.param_dim();
  SingleTaskResult out;
  out.generator.W = Matrix::Identity(d, d) * prior_sd;
  out.generator.b = Vector::Zero(d);
  out.generator.constraints = model.constraints();

  const NoisePrecision nu = NoisePrecision::from_log(log_nu);
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const auto target = [&](const Vector& z) {
    const Vector theta = apply_param_generator(out.generator, z);
    const Matrix yhat = model.simulate(theta, shared, rec.U);
    return gaussian_loglik(yhat, rec.Y, rec.mask, nu) -
           0.5 * (z.squaredNorm() + d * kLogTwoPi);
  };
  Rng rng(config.seed);
  const AdaIsResult res =
      adais_fit(target, GaussianMixture::standard_normal(d), config, rng);
  out.posterior = res.posterior;
  out.final_ess = res.final_ess;
  out.warned = !res.reached_threshold;
  return out;
}

Vector single_task_insample_rmse(const BaseModel& model, const Vector& shared,
                                 const Vector& log_nu, const SequenceRecord& rec,
                                 double prior_sd, const AdaIsConfig& config) {
  const SingleTaskResult fit =
      single_task_fit(model, shared, log_nu, rec, prior_sd, config);
  Vector z_mean = Vector::Zero(fit.posterior.dim());
  for (int j = 0; j < fit.posterior.components(); ++j) {
    z_mean += fit.posterior.weights[j] *
              fit.posterior.means[static_cast<std::size_t>(j)];
  }
  const Vector theta = apply_param_generator(fit.generator, z_mean);
  const Matrix yhat = model.simulate(theta, shared, rec.U);
  const int n_y = model.output_dim();
  Vector rmse(n_y);
  for (int j = 0; j < n_y; ++j) {
    double acc = 0.0;
    int n = 0;
    for (int t = 0; t < rec.length(); ++t) {
      if (!rec.mask(t, j)) continue;
      const double r = rec.Y(t, j) - yhat(t, j);
      acc += r * r;
      ++n;
    }
    rmse[j] = n > 0 ? std::sqrt(acc / n) : std::numeric_limits<double>::quiet_NaN();
  }
  return rmse;
}

EvalReport windowed_rmse(const ForecastFn& forecast, const SequenceRecord& rec,
                         const std::vector<int>& anchors,
                         const std::vector<int>& horizons, int fold,
                         const Vector* srmse_scale) {
  EvalReport report;
  const int T = rec.length();
  const int n_y = rec.output_dim();
  for (int anchor : anchors) {
    for (int horizon : horizons) {
      if (anchor < 0 || horizon < 1 || anchor + horizon > T) {
        report.skipped.push_back(rec.seq_id + " anchor=" + std::to_string(anchor) +
                                 " horizon=" + std::to_string(horizon) +
                                 " does not fit the sequence");
        continue;
      }
      const Matrix mean = forecast(rec, anchor, horizon);
      if (mean.rows() != horizon || mean.cols() != n_y) {
        throw DimensionError("windowed_rmse: forecast has wrong shape");
      }
      for (int j = 0; j < n_y; ++j) {
        double acc = 0.0;
        int n = 0;
        for (int h = 0; h < horizon; ++h) {
          if (!rec.mask(anchor + h, j)) continue;
          const double r = rec.Y(anchor + h, j) - mean(h, j);
          acc += r * r;
          ++n;
        }
        if (n == 0) {
          report.skipped.push_back(
              rec.seq_id + " anchor=" + std::to_string(anchor) + " horizon=" +
              std::to_string(horizon) + " channel=" + std::to_string(j) +
              " has no observations");
          continue;
        }
        EvalRow row;
        row.fold = fold;
        row.seq_id = rec.seq_id;
        row.anchor = anchor;
        row.horizon = horizon;
        row.channel = j;
        row.rmse = std::sqrt(acc / n);
        if (srmse_scale != nullptr) {
          const double scale = (*srmse_scale)[j];
          if (scale > 0.0 && std::isfinite(scale)) {
            row.srmse = row.rmse / scale;
          }
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

void merge_reports(EvalReport* into, const EvalReport& from) {
  into->rows.insert(into->rows.end(), from.rows.begin(), from.rows.end());
  into->skipped.insert(into->skipped.end(), from.skipped.begin(),
                       from.skipped.end());
}

std::vector<EvalRow> aggregate_report(const EvalReport& report) {
  std::map<std::tuple<int, int, int>, std::vector<const EvalRow*>> cells;
  for (const auto& row : report.rows) {
    cells[{row.anchor, row.horizon, row.channel}].push_back(&row);
  }
  std::vector<EvalRow> out;
  for (const auto& [key, rows] : cells) {
    EvalRow agg;
    agg.fold = -1;
    agg.seq_id = "ALL";
    agg.anchor = std::get<0>(key);
    agg.horizon = std::get<1>(key);
    agg.channel = std::get<2>(key);
    double rmse = 0.0;
    double srmse = 0.0;
    int n_srmse = 0;
    for (const EvalRow* row : rows) {
      rmse += row->rmse;
      if (row->srmse) {
        srmse += *row->srmse;
        ++n_srmse;
      }
    }
    agg.rmse = rmse / static_cast<double>(rows.size());
    if (n_srmse == static_cast<int>(rows.size()) && n_srmse > 0) {
      agg.srmse = srmse / n_srmse;
    }
    out.push_back(std::move(agg));
  }
  return out;
}

LooResult loo_driver(const PdModel& model, const SequenceDataset& data,
                     const LooConfig& config) {
  data.validate();
  if (data.size() < 3) throw DataError("loo: need at least three sequences");
  LooResult result;
  const int N = data.size();
  for (int fold = 0; fold < N; ++fold) {
    SequenceDataset train_set;
    for (int i = 0; i < N; ++i) {
      if (i != fold) {
        train_set.sequences.push_back(data.sequences[static_cast<std::size_t>(i)]);
      }
    }
    const SequenceRecord& held_out = data.sequences[static_cast<std::size_t>(fold)];

    TrainConfig mt_cfg = config.train;
    mt_cfg.seed = config.seed + 1000 * static_cast<std::uint64_t>(fold);
    const TrainState mt = train(model, train_set, mt_cfg);

    TrainConfig pooled_cfg = mt_cfg;
    pooled_cfg.freeze_loading = true;
    const TrainState pooled = train(model, train_set, pooled_cfg);
    const Vector theta0 = default_params(pooled.gen);
    const NoisePrecision pooled_nu = NoisePrecision::from_log(pooled.log_nu);
    const OffsetPrior offset_prior =
        fit_offset_prior(model, theta0, train_set);

    Vector srmse_scale;
    if (config.with_srmse) {
      AdaIsConfig st_cfg = config.filter;
      st_cfg.seed = config.seed + 77 + static_cast<std::uint64_t>(fold);
      srmse_scale = single_task_insample_rmse(model, Vector(0), pooled.log_nu,
                                              held_out,
                                              config.single_task_prior_sd, st_cfg);
    }
    const Vector* scale_ptr = config.with_srmse ? &srmse_scale : nullptr;

    // Latent posterior per anchor, then predictive means over each window.
    std::map<int, GaussianMixture> posteriors;
    for (int anchor : config.anchors) {
      if (anchor < 0 || anchor > held_out.length()) continue;
      AdaIsConfig f_cfg = config.filter;
      f_cfg.seed = config.seed + 13 + static_cast<std::uint64_t>(fold);
      // A single cold stop at a late anchor faces a needle-shaped target and
      // collapses for sequences far from the prior mean; several warm-started
      // stops let the proposal track the narrowing posterior.
      f_cfg.thinning = std::max(1, anchor / 8);
      const auto steps = sequential_filter(model, mt.gen, mt.shared, mt.log_nu,
                                           held_out.prefix(anchor), f_cfg);
      posteriors.emplace(anchor, steps.back().posterior);
    }
    Rng forecast_rng(config.seed + 29 + static_cast<std::uint64_t>(fold));
    const ForecastFn mtds_fn = [&](const SequenceRecord& rec, int anchor,
                                   int horizon) {
      const PredictiveSummary pred = posterior_predictive(
          model, mt.gen, mt.shared, mt.log_nu, posteriors.at(anchor),
          rec.U.topRows(anchor), rec.U.middleRows(anchor, horizon),
          config.forecast_samples, forecast_rng);
      return pred.mean;
    };
    merge_reports(&result.mtds,
                  windowed_rmse(mtds_fn, held_out, config.anchors,
                                config.horizons, fold, scale_ptr));

    const ForecastFn pooled_fn = [&](const SequenceRecord& rec, int anchor,
                                     int horizon) {
      const Matrix yhat =
          model.simulate(theta0, Vector(0), rec.U.topRows(anchor + horizon));
      return Matrix(yhat.middleRows(anchor, horizon));
    };
    merge_reports(&result.pooled,
                  windowed_rmse(pooled_fn, held_out, config.anchors,
                                config.horizons, fold, scale_ptr));

    const ForecastFn alpha_fn = [&](const SequenceRecord& rec, int anchor,
                                    int horizon) {
      const AlphaPosterior post = pooled_alpha_filter(
          model, theta0, offset_prior, pooled_nu, rec, anchor);
      const Matrix yhat = model.simulate_with_alpha(
          theta0, post.mean, rec.U.topRows(anchor + horizon));
      return Matrix(yhat.middleRows(anchor, horizon));
    };
    merge_reports(&result.pooled_alpha,
                  windowed_rmse(alpha_fn, held_out, config.anchors,
                                config.horizons, fold, scale_ptr));
  }
  return result;
}

}  // namespace mtdskit
