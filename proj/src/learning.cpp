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

#include "mtdskit/learning.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "mtdskit/mtrnn.hpp"
#include "mtdskit/parallel.hpp"

namespace mtdskit {

namespace {
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

void adam_step(Vector* params, const Vector& grad, AdamState* state, double lr,
               double l2) {
  if (params->size() != grad.size()) {
    throw DimensionError("adam_step: gradient length mismatch");
  }
  if (state->m.size() != params->size()) {
    state->m = Vector::Zero(params->size());
    state->v = Vector::Zero(params->size());
    state->steps = 0;
  }
  ++state->steps;
  state->m = kAdamBeta1 * state->m + (1.0 - kAdamBeta1) * grad;
  state->v = kAdamBeta2 * state->v +
             (1.0 - kAdamBeta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state->steps));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state->steps));
  for (Eigen::Index i = 0; i < params->size(); ++i) {
    const double mhat = state->m[i] / bc1;
    const double vhat = state->v[i] / bc2;
    // Ascent step; weight decay stays decoupled from the moments.
    (*params)[i] += lr * mhat / (std::sqrt(vhat) + kAdamEps);
    (*params)[i] -= lr * l2 * (*params)[i];
  }
}

void TrainConfig::validate() const {
  if (n_iters < 1) throw ConfigError("train: n_iters must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr_main > 0.0) || !(lr_mt > 0.0)) {
    throw ConfigError("train: learning rates must be positive");
  }
  if (l2_main < 0.0 || l2_mt < 0.0) {
    throw ConfigError("train: weight penalties must be >= 0");
  }
  if (n_mc_samples < 1) throw ConfigError("train: n_mc_samples must be >= 1");
  if (latent_dim < 1 || latent_dim > 10) {
    throw ConfigError("train: latent_dim must lie in [1, 10]");
  }
  if (log_interval < 1) throw ConfigError("train: log_interval must be >= 1");
}

int TrainConfig::effective_warmup() const {
  if (kl_warmup_iters >= 0) return kl_warmup_iters;
  return n_iters / 5;
}

const VariationalPosterior& TrainState::posterior_for(
    const std::string& seq_id) const {
  return posteriors[static_cast<std::size_t>(posterior_index(seq_id))];
}

int TrainState::posterior_index(const std::string& seq_id) const {
  for (std::size_t i = 0; i < seq_ids.size(); ++i) {
    if (seq_ids[i] == seq_id) return static_cast<int>(i);
  }
  throw DataError("train state: unknown seq_id " + seq_id);
}

ElboGradients elbo_estimate(const BaseModel& model, const ParamGenerator& gen,
                            const Vector& shared, const Vector& log_nu,
                            const VariationalPosterior& q,
                            const SequenceRecord& rec, double kl_weight,
                            int n_samples, Rng& rng) {
  if (n_samples < 1) throw DimensionError("elbo_estimate: n_samples >= 1");
  q.validate();
  const int k = q.dim();
  if (k != gen.latent_dim()) {
    throw DimensionError("elbo_estimate: posterior/generator dimension mismatch");
  }
  ElboGradients out;
  out.d_W = Matrix::Zero(gen.W.rows(), gen.W.cols());
  out.d_b = Vector::Zero(gen.b.size());
  out.d_shared = Vector::Zero(shared.size());
  out.d_log_nu = Vector::Zero(log_nu.size());
  out.d_mu = Vector::Zero(k);
  out.d_log_s = Vector::Zero(k);

  const Vector s = q.log_s.array().exp();
  for (int i = 0; i < n_samples; ++i) {
    const Vector eps = rng.normal_vector(k);
    const Vector z = q.mu + s.cwiseProduct(eps);
    const GradientBundle g =
        loglik_with_gradients(model, gen, z, shared, rec, log_nu);
    out.loglik_term += g.value;
    out.d_W += g.d_W;
    out.d_b += g.d_b;
    if (shared.size() > 0) out.d_shared += g.d_shared;
    out.d_log_nu += g.d_log_nu;
    out.d_mu += g.d_z;
    out.d_log_s += g.d_z.cwiseProduct(s.cwiseProduct(eps));
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  out.loglik_term *= inv;
  out.d_W *= inv;
  out.d_b *= inv;
  out.d_shared *= inv;
  out.d_log_nu *= inv;
  out.d_mu *= inv;
  out.d_log_s *= inv;

  out.kl = kl_to_standard_normal(q);
  out.value = out.loglik_term - kl_weight * out.kl;
  // d KL / d mu = mu, d KL / d log_s = s^2 - 1.
  out.d_mu -= kl_weight * q.mu;
  out.d_log_s -=
      kl_weight * (s.array().square() - 1.0).matrix();
  return out;
}

SequenceDataset segment_dataset(const SequenceDataset& data, int segment_len) {
  if (segment_len <= 0) return data;
  if (segment_len < 2) throw ConfigError("segment_len must be >= 2");
  SequenceDataset out;
  for (const auto& rec : data.sequences) {
    const int T = rec.length();
    for (int start = 0; start < T; start += segment_len) {
      const int len = std::min(segment_len, T - start);
      if (len < 2 && start > 0) {
        // Fold a short tail into the previous window instead.
        auto& prev = out.sequences.back();
        const int prev_start = start - segment_len;
        const int merged = T - prev_start;
        prev.U = rec.U.middleRows(prev_start, merged);
        prev.Y = rec.Y.middleRows(prev_start, merged);
        prev.mask = rec.mask.middleRows(prev_start, merged);
        break;
      }
      SequenceRecord seg;
      seg.seq_id = rec.seq_id + "#" + std::to_string(start);
      seg.U = rec.U.middleRows(start, len);
      seg.Y = rec.Y.middleRows(start, len);
      seg.mask = rec.mask.middleRows(start, len);
      out.sequences.push_back(std::move(seg));
    }
  }
  return out;
}

TrainState train(const BaseModel& model, const SequenceDataset& data,
                 const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() == 0) throw DataError("train: empty dataset");
  if (data.input_dim() != model.input_dim() ||
      data.output_dim() != model.output_dim()) {
    throw DimensionError("train: dataset channels do not match the model");
  }
  const SequenceDataset working = segment_dataset(data, config.segment_len);
  const int N = working.size();
  const int k = config.latent_dim;
  const int d = model.param_dim();

  Rng rng(config.seed);
  TrainState state;
  state.gen.constraints = model.constraints();
  state.gen.b = model.default_raw_offset(rng);
  state.gen.W = Matrix::Zero(d, k);
  if (!config.freeze_loading) {
    const double scale = 0.1 / std::sqrt(static_cast<double>(k));
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < k; ++c) state.gen.W(r, c) = scale * rng.normal();
    }
  }
  for (int row : config.freeze_rows) {
    if (row < 0 || row >= d) throw ConfigError("train: freeze row out of range");
    state.gen.W.row(row).setZero();
  }
  state.shared = model.default_shared(rng);
  state.log_nu = Vector::Zero(model.output_dim());
  state.seq_ids.reserve(static_cast<std::size_t>(N));
  state.posteriors.reserve(static_cast<std::size_t>(N));
  for (const auto& rec : working.sequences) {
    state.seq_ids.push_back(rec.seq_id);
    VariationalPosterior q;
    q.mu = Vector::Zero(k);
    q.log_s = Vector::Constant(k, std::log(0.5));
    state.posteriors.push_back(std::move(q));
  }
  state.opt_mu.resize(static_cast<std::size_t>(N));
  state.opt_log_s.resize(static_cast<std::size_t>(N));

  const int batch = std::min(config.batch_size, N);
  std::vector<int> order(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
  std::size_t cursor = order.size();  // forces a reshuffle on first use

  const auto start_time = std::chrono::steady_clock::now();
  for (long iter = 1; iter <= config.n_iters; ++iter) {
    const int warmup = config.effective_warmup();
    const double kl_weight =
        warmup == 0 ? 1.0
                    : std::min(1.0, static_cast<double>(iter) /
                                        static_cast<double>(warmup));

    std::vector<int> members(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        shuffle(order, rng);
        cursor = 0;
      }
      members[static_cast<std::size_t>(b)] = order[cursor++];
    }

    // All per-sample noise comes from the master stream before the parallel
    // section so results do not depend on the schedule.
    std::vector<Matrix> eps(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
      Matrix e(config.n_mc_samples, k);
      for (int s = 0; s < config.n_mc_samples; ++s) {
        for (int i = 0; i < k; ++i) e(s, i) = rng.normal();
      }
      eps[static_cast<std::size_t>(b)] = std::move(e);
    }

    std::vector<ElboGradients> grads(static_cast<std::size_t>(batch));
    std::vector<std::string> failures(static_cast<std::size_t>(batch));
    parallel_for(batch, [&](std::int64_t b) {
      const int idx = members[static_cast<std::size_t>(b)];
      const SequenceRecord& rec = working.sequences[static_cast<std::size_t>(idx)];
      const VariationalPosterior& q =
          state.posteriors[static_cast<std::size_t>(idx)];
      ElboGradients g;
      g.d_W = Matrix::Zero(d, k);
      g.d_b = Vector::Zero(d);
      g.d_shared = Vector::Zero(state.shared.size());
      g.d_log_nu = Vector::Zero(state.log_nu.size());
      g.d_mu = Vector::Zero(k);
      g.d_log_s = Vector::Zero(k);
      const Vector s = q.log_s.array().exp();
      for (int smp = 0; smp < config.n_mc_samples; ++smp) {
        const Vector e =
            eps[static_cast<std::size_t>(b)].row(smp).transpose();
        const Vector z = q.mu + s.cwiseProduct(e);
        const GradientBundle bundle = loglik_with_gradients(
            model, state.gen, z, state.shared, rec, state.log_nu);
        g.loglik_term += bundle.value;
        g.d_W += bundle.d_W;
        g.d_b += bundle.d_b;
        if (state.shared.size() > 0) g.d_shared += bundle.d_shared;
        g.d_log_nu += bundle.d_log_nu;
        g.d_mu += bundle.d_z;
        g.d_log_s += bundle.d_z.cwiseProduct(s.cwiseProduct(e));
      }
      const double inv = 1.0 / static_cast<double>(config.n_mc_samples);
      g.loglik_term *= inv;
      g.d_W *= inv;
      g.d_b *= inv;
      g.d_shared *= inv;
      g.d_log_nu *= inv;
      g.d_mu *= inv;
      g.d_log_s *= inv;
      g.kl = kl_to_standard_normal(q);
      g.value = g.loglik_term - kl_weight * g.kl;
      g.d_mu -= kl_weight * q.mu;
      g.d_log_s -= kl_weight * (s.array().square() - 1.0).matrix();
      if (!std::isfinite(g.value)) {
        failures[static_cast<std::size_t>(b)] = rec.seq_id;
      }
      grads[static_cast<std::size_t>(b)] = std::move(g);
    });
    for (const auto& failed : failures) {
      if (!failed.empty()) {
        throw NumericError("train: non-finite objective for sequence '" + failed +
                           "' at iteration " + std::to_string(iter));
      }
    }

    // Deterministic reduction in batch-slot order.
    Matrix d_W = Matrix::Zero(d, k);
    Vector d_b = Vector::Zero(d);
    Vector d_shared = Vector::Zero(state.shared.size());
    Vector d_log_nu = Vector::Zero(state.log_nu.size());
    double batch_elbo = 0.0;
    for (int b = 0; b < batch; ++b) {
      const auto& g = grads[static_cast<std::size_t>(b)];
      d_W += g.d_W;
      d_b += g.d_b;
      if (state.shared.size() > 0) d_shared += g.d_shared;
      d_log_nu += g.d_log_nu;
      batch_elbo += g.value;
    }
    const double inv_batch = 1.0 / static_cast<double>(batch);
    d_W *= inv_batch;
    d_b *= inv_batch;
    d_shared *= inv_batch;
    d_log_nu *= inv_batch;
    batch_elbo *= inv_batch;

    if (config.freeze_loading) {
      d_W.setZero();
    }
    for (int row : config.freeze_rows) d_W.row(row).setZero();

    Vector w_flat = Eigen::Map<const Vector>(state.gen.W.data(), d * k);
    const Vector g_flat = Eigen::Map<const Vector>(d_W.data(), d * k);
    adam_step(&w_flat, g_flat, &state.opt_w, config.lr_mt, config.l2_mt);
    state.gen.W = Eigen::Map<const Matrix>(w_flat.data(), d, k);
    if (config.freeze_loading) state.gen.W.setZero();
    for (int row : config.freeze_rows) state.gen.W.row(row).setZero();
    adam_step(&state.gen.b, d_b, &state.opt_b, config.lr_mt, config.l2_mt);
    if (state.shared.size() > 0) {
      // The weight penalty covers recurrent shared weights; for the two-layer
      // recurrent model the second-layer bias is excluded.
      if (const auto* rnn = dynamic_cast<const MtRnn*>(&model)) {
        adam_step(&state.shared, d_shared, &state.opt_shared, config.lr_main,
                  0.0);
        const int b2 = rnn->shared_b2_offset();
        for (int i = 0; i < b2; ++i) {
          state.shared[i] -= config.lr_main * config.l2_main * state.shared[i];
        }
      } else {
        adam_step(&state.shared, d_shared, &state.opt_shared, config.lr_main,
                  config.l2_main);
      }
    }
    adam_step(&state.log_nu, d_log_nu, &state.opt_log_nu, config.lr_main, 0.0);

    // Variational parameters follow their own Adam clocks, stepped only when
    // the sequence is in the batch.
    for (int b = 0; b < batch; ++b) {
      const int idx = members[static_cast<std::size_t>(b)];
      const auto& g = grads[static_cast<std::size_t>(b)];
      auto& q = state.posteriors[static_cast<std::size_t>(idx)];
      adam_step(&q.mu, g.d_mu, &state.opt_mu[static_cast<std::size_t>(idx)],
                config.lr_mt, 0.0);
      adam_step(&q.log_s, g.d_log_s,
                &state.opt_log_s[static_cast<std::size_t>(idx)], config.lr_mt,
                0.0);
    }

    state.iter = iter;
    if (iter == 1 || iter == config.n_iters || iter % config.log_interval == 0) {
      const auto now = std::chrono::steady_clock::now();
      TrainLogEntry entry;
      entry.iter = iter;
      entry.elbo = batch_elbo;
      entry.kl_weight = kl_weight;
      entry.wallclock_ms =
          std::chrono::duration<double, std::milli>(now - start_time).count();
      state.log.push_back(entry);

      LatentSpreadStat stat;
      stat.iter = iter;
      stat.mean_s2 = Vector::Zero(k);
      for (const auto& q : state.posteriors) {
        stat.mean_s2 += q.log_s.array().exp().square().matrix();
      }
      stat.mean_s2 /= static_cast<double>(N);
      state.spread.push_back(std::move(stat));
    }
  }

  if (!config.log_path.empty()) {
    write_training_log(config.log_path, state.log);
  }
  return state;
}

LogMarginalEstimate log_marginal_is_estimate(const BaseModel& model,
                                             const ParamGenerator& gen,
                                             const Vector& shared,
                                             const Vector& log_nu,
                                             const SequenceRecord& rec,
                                             int n_samples, Rng& rng) {
  if (n_samples < 2) {
    throw DimensionError("log_marginal_is_estimate: n_samples >= 2");
  }
  const int k = gen.latent_dim();
  const NoisePrecision nu = NoisePrecision::from_log(log_nu);
  Matrix zs(n_samples, k);
  for (int s = 0; s < n_samples; ++s) {
    zs.row(s) = rng.normal_vector(k).transpose();
  }
  Vector logp(n_samples);
  parallel_for(n_samples, [&](std::int64_t s) {
    const Vector theta = apply_param_generator(gen, zs.row(s).transpose());
    const Matrix yhat = model.simulate(theta, shared, rec.U);
    logp[s] = gaussian_loglik(yhat, rec.Y, rec.mask, nu);
  });
  const double shift = logp.maxCoeff();
  if (!std::isfinite(shift)) {
    throw NumericError("log_marginal_is_estimate: degenerate likelihoods");
  }
  const Vector w = (logp.array() - shift).exp();
  const double mean = w.mean();
  double var = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    var += (w[s] - mean) * (w[s] - mean);
  }
  var /= static_cast<double>(n_samples - 1);
  LogMarginalEstimate out;
  out.value = shift + std::log(mean);
  out.standard_error =
      std::sqrt(var) / (mean * std::sqrt(static_cast<double>(n_samples)));
  return out;
}

void write_training_log(const std::string& path,
                        const std::vector<TrainLogEntry>& log) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open training log for writing: " + path);
  f << "iter,elbo,kl_weight,wallclock_ms\n";
  char buf[160];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.3f\n", e.iter, e.elbo,
                  e.kl_weight, e.wallclock_ms);
    f << buf;
  }
}

}  // namespace mtdskit
