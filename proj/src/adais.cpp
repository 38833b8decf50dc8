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

#include "mtdskit/adais.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mtdskit/parallel.hpp"

namespace mtdskit {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Cached Cholesky factors of a mixture for repeated density evaluation.
class MixtureDensity {
 public:
  explicit MixtureDensity(const GaussianMixture& q) : q_(q) {
    const int J = q.components();
    const int k = q.dim();
    log_weights_.resize(J);
    lower_.reserve(static_cast<std::size_t>(J));
    log_norm_.resize(J);
    for (int j = 0; j < J; ++j) {
      log_weights_[j] = q.weights[j] > 0.0 ? std::log(q.weights[j]) : kNegInf;
      Eigen::LLT<Matrix> llt(q.covs[static_cast<std::size_t>(j)]);
      if (llt.info() != Eigen::Success) {
        throw NumericError("mixture component covariance not positive definite");
      }
      Matrix L = llt.matrixL();
      double logdet = 0.0;
      for (int i = 0; i < k; ++i) logdet += std::log(L(i, i));
      lower_.push_back(std::move(L));
      log_norm_[j] = -0.5 * k * kLogTwoPi - logdet;
    }
  }

  double logpdf(const Vector& z) const {
    const int J = q_.components();
    double best = kNegInf;
    std::vector<double> terms(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
      if (log_weights_[j] == kNegInf) {
        terms[static_cast<std::size_t>(j)] = kNegInf;
        continue;
      }
      const Vector diff = z - q_.means[static_cast<std::size_t>(j)];
      const Vector alpha =
          lower_[static_cast<std::size_t>(j)].triangularView<Eigen::Lower>().solve(
              diff);
      const double term =
          log_weights_[j] + log_norm_[j] - 0.5 * alpha.squaredNorm();
      terms[static_cast<std::size_t>(j)] = term;
      best = std::max(best, term);
    }
    if (best == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double t : terms) {
      if (t != kNegInf) acc += std::exp(t - best);
    }
    return best + std::log(acc);
  }

  const Matrix& lower(int j) const { return lower_[static_cast<std::size_t>(j)]; }

 private:
  const GaussianMixture& q_;
  std::vector<double> log_weights_;
  std::vector<Matrix> lower_;
  std::vector<double> log_norm_;
};

GaussianMixture inflate_covs(GaussianMixture q, double factor) {
  for (auto& cov : q.covs) cov *= factor;
  return q;
}

/// Eigenvalue clamp: smallest eigenvalues raised to `floor`. Returns true
/// when a clamp fired.
bool apply_cov_floor(Matrix* cov, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(*cov);
  if (eig.info() != Eigen::Success) {
    throw NumericError("covariance eigendecomposition failed");
  }
  Vector vals = eig.eigenvalues();
  bool fired = false;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < floor) {
      vals[i] = floor;
      fired = true;
    }
  }
  if (fired) {
    *cov = eig.eigenvectors() * vals.asDiagonal() *
           eig.eigenvectors().transpose();
    *cov = (0.5 * (*cov + cov->transpose())).eval();
  }
  return fired;
}

/// Splits the heaviest component of q along its principal axis until the
/// mixture has n_components entries.
GaussianMixture grow_to(const GaussianMixture& q_in, int n_components) {
  GaussianMixture q = q_in;
  while (q.components() < n_components) {
    int heaviest = 0;
    for (int j = 1; j < q.components(); ++j) {
      if (q.weights[j] > q.weights[heaviest]) heaviest = j;
    }
    const Matrix& cov = q.covs[static_cast<std::size_t>(heaviest)];
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const int top = static_cast<int>(eig.eigenvalues().size()) - 1;
    const Vector axis = eig.eigenvectors().col(top) *
                        (0.5 * std::sqrt(std::max(eig.eigenvalues()[top], 0.0)));
    const Vector mean = q.means[static_cast<std::size_t>(heaviest)];
    const double w = q.weights[heaviest] / 2.0;
    q.weights[heaviest] = w;
    q.means[static_cast<std::size_t>(heaviest)] = mean + axis;
    Vector w_new(q.components() + 1);
    w_new.head(q.components()) = q.weights;
    w_new[q.components()] = w;
    q.weights = w_new;
    q.means.push_back(mean - axis);
    q.covs.push_back(cov);
  }
  return q;
}

}  // namespace

GaussianMixture GaussianMixture::standard_normal(int dim) {
  GaussianMixture q;
  q.weights = Vector::Ones(1);
  q.means.push_back(Vector::Zero(dim));
  q.covs.push_back(Matrix::Identity(dim, dim));
  return q;
}

void GaussianMixture::validate() const {
  const int J = components();
  if (J == 0) throw DimensionError("mixture: no components");
  if (means.size() != static_cast<std::size_t>(J) ||
      covs.size() != static_cast<std::size_t>(J)) {
    throw DimensionError("mixture: component count mismatch");
  }
  const int k = dim();
  double total = 0.0;
  for (int j = 0; j < J; ++j) {
    if (weights[j] < 0.0) throw NumericError("mixture: negative weight");
    total += weights[j];
    if (means[static_cast<std::size_t>(j)].size() != k ||
        covs[static_cast<std::size_t>(j)].rows() != k ||
        covs[static_cast<std::size_t>(j)].cols() != k) {
      throw DimensionError("mixture: component shape mismatch");
    }
    const Matrix& cov = covs[static_cast<std::size_t>(j)];
    // LLT only reads the lower triangle; check symmetry explicitly so an
    // inconsistent upper triangle cannot slip through.
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw NumericError("mixture: component covariance not symmetric");
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw NumericError("mixture: component covariance not positive definite");
    }
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw NumericError("mixture: weights must sum to 1");
  }
}

double gmm_logpdf(const GaussianMixture& q, const Vector& z) {
  if (z.size() != q.dim()) throw DimensionError("gmm_logpdf: dimension mismatch");
  return MixtureDensity(q).logpdf(z);
}

Vector gmm_sample(const GaussianMixture& q, const Vector& uniforms) {
  const int k = q.dim();
  if (uniforms.size() != k + 1) {
    throw DimensionError("gmm_sample: need dim + 1 uniforms");
  }
  int comp = q.components() - 1;
  double acc = 0.0;
  for (int j = 0; j < q.components(); ++j) {
    acc += q.weights[j];
    if (uniforms[0] <= acc) {
      comp = j;
      break;
    }
  }
  Vector eps(k);
  for (int i = 0; i < k; ++i) eps[i] = normal_icdf(uniforms[1 + i]);
  Eigen::LLT<Matrix> llt(q.covs[static_cast<std::size_t>(comp)]);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gmm_sample: covariance not positive definite");
  }
  return q.means[static_cast<std::size_t>(comp)] + Matrix(llt.matrixL()) * eps;
}

Vector gmm_sample(const GaussianMixture& q, Rng& rng) {
  return gmm_sample(q, rng.uniform_vector(q.dim() + 1));
}

double effective_sample_size(const Vector& normalized_weights) {
  const double s2 = normalized_weights.squaredNorm();
  if (!(s2 > 0.0)) throw NumericError("effective_sample_size: zero weights");
  return 1.0 / s2;
}

Vector normalize_log_weights(const Vector& log_weights) {
  const double shift = log_weights.maxCoeff();
  if (shift == kNegInf) {
    throw NumericError("target has no support under the proposal");
  }
  if (std::isnan(shift)) {
    throw NumericError("normalize_log_weights: NaN weight");
  }
  Vector w = (log_weights.array() - shift).exp();
  const double total = w.sum();
  return w / total;
}

WeightedEmResult weighted_em(const Matrix& particles, const Vector& weights,
                             int n_components, const GaussianMixture& init,
                             int n_iters, double cov_floor) {
  const int M = static_cast<int>(particles.rows());
  const int k = static_cast<int>(particles.cols());
  if (weights.size() != M) throw DimensionError("weighted_em: weight count");
  if (M < n_components) {
    throw DimensionError("weighted_em: fewer particles than components");
  }
  if (init.dim() != k) throw DimensionError("weighted_em: init dimension");

  WeightedEmResult out;
  GaussianMixture q =
      init.components() < n_components ? grow_to(init, n_components) : init;
  const int J = q.components();
  for (auto& cov : q.covs) {
    out.floor_activated |= apply_cov_floor(&cov, cov_floor);
  }

  Matrix gamma(M, J);
  for (int iter = 0; iter < n_iters; ++iter) {
    // E step in log space, one row per particle.
    MixtureDensity density(q);
    std::vector<double> logw(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
      logw[static_cast<std::size_t>(j)] =
          q.weights[j] > 0.0 ? std::log(q.weights[j]) : kNegInf;
    }
    parallel_for(M, [&](std::int64_t m) {
      Vector terms(J);
      double best = kNegInf;
      for (int j = 0; j < J; ++j) {
        const Vector x = particles.row(m).transpose();
        const Vector mu = q.means[static_cast<std::size_t>(j)];
        double t;
        if (logw[static_cast<std::size_t>(j)] == kNegInf) {
          t = kNegInf;
        } else {
          const Vector alpha =
              density.lower(j).triangularView<Eigen::Lower>().solve(x - mu);
          double logdet = 0.0;
          for (int i = 0; i < k; ++i) logdet += std::log(density.lower(j)(i, i));
          t = logw[static_cast<std::size_t>(j)] - 0.5 * k * kLogTwoPi - logdet -
              0.5 * alpha.squaredNorm();
        }
        terms[j] = t;
        best = std::max(best, t);
      }
      if (best == kNegInf) {
        // Particle unsupported by every component: spread evenly.
        for (int j = 0; j < J; ++j) gamma(m, j) = weights[m] / J;
        return;
      }
      double norm = 0.0;
      for (int j = 0; j < J; ++j) {
        terms[j] = terms[j] == kNegInf ? 0.0 : std::exp(terms[j] - best);
        norm += terms[j];
      }
      for (int j = 0; j < J; ++j) gamma(m, j) = weights[m] * terms[j] / norm;
    });

    // M step.
    for (int j = 0; j < J; ++j) {
      const double wj = gamma.col(j).sum();
      if (wj < 1e-12) {
        // Reseed a dead component at the heaviest particle.
        int top = 0;
        for (int m = 1; m < M; ++m) {
          if (weights[m] > weights[top]) top = m;
        }
        q.weights[j] = 1.0 / M;
        q.means[static_cast<std::size_t>(j)] = particles.row(top).transpose();
        q.covs[static_cast<std::size_t>(j)] =
            Matrix::Identity(k, k) * std::max(cov_floor, 1e-2);
        out.collapsed = true;
        continue;
      }
      q.weights[j] = wj;
      Vector mu = Vector::Zero(k);
      for (int m = 0; m < M; ++m) {
        mu += gamma(m, j) * particles.row(m).transpose();
      }
      mu /= wj;
      Matrix cov = Matrix::Zero(k, k);
      for (int m = 0; m < M; ++m) {
        const Vector d = particles.row(m).transpose() - mu;
        cov += gamma(m, j) * (d * d.transpose());
      }
      cov /= wj;
      cov = (0.5 * (cov + cov.transpose())).eval();
      out.floor_activated |= apply_cov_floor(&cov, cov_floor);
      q.means[static_cast<std::size_t>(j)] = mu;
      q.covs[static_cast<std::size_t>(j)] = cov;
    }
    q.weights /= q.weights.sum();
  }
  out.mixture = std::move(q);
  return out;
}

void AdaIsConfig::validate() const {
  if (n_particles < 2) throw ConfigError("adais: n_particles must be >= 2");
  if (!(ess_threshold >= 1.0) || ess_threshold > n_particles) {
    throw ConfigError("adais: ess_threshold must lie in [1, n_particles]");
  }
  if (max_adaptations < 1) throw ConfigError("adais: max_adaptations >= 1");
  if (n_components < 1) throw ConfigError("adais: n_components >= 1");
  if (n_components > n_particles) {
    throw ConfigError("adais: more components than particles");
  }
  if (em_iters < 1) throw ConfigError("adais: em_iters >= 1");
  if (!(cov_floor > 0.0)) throw ConfigError("adais: cov_floor must be positive");
  if (thinning < 1) throw ConfigError("adais: thinning >= 1");
}

AdaIsResult adais_fit(const std::function<double(const Vector&)>& log_target,
                      const GaussianMixture& initial_proposal,
                      const AdaIsConfig& config, Rng& rng) {
  config.validate();
  initial_proposal.validate();
  const int k = initial_proposal.dim();
  const int M = config.n_particles;

  AdaIsResult out;
  GaussianMixture q = initial_proposal;
  std::unique_ptr<ScrambledSobol> sobol;
  if (config.quasi_random) {
    sobol = std::make_unique<ScrambledSobol>(k + 1, rng.next_u64());
  }

  for (int n = 0; n < config.max_adaptations; ++n) {
    MixtureDensity density(q);
    Matrix particles(M, k);
    // Sampling stays sequential so the draw order is schedule-independent.
    for (int m = 0; m < M; ++m) {
      const Vector z = config.quasi_random ? gmm_sample(q, sobol->next())
                                           : gmm_sample(q, rng);
      particles.row(m) = z.transpose();
    }
    Vector log_w(M);
    parallel_for(M, [&](std::int64_t m) {
      const Vector z = particles.row(m).transpose();
      const double lt = log_target(z);
      if (std::isnan(lt)) {
        throw NumericError("adais: target returned NaN");
      }
      log_w[m] = lt - density.logpdf(z);
    });
    const Vector w = normalize_log_weights(log_w);
    const double ess = effective_sample_size(w);

    AdaptationDiagnostics diag;
    diag.ess = ess;
    diag.reached_threshold = ess >= config.ess_threshold;
    out.adaptations.push_back(diag);
    out.final_ess = ess;

    if (ess < config.n_components) {
      // Too few effective particles to fit the mixture: widen and retry.
      q = inflate_covs(q, 4.0);
      out.rescued = true;
      continue;
    }
    const WeightedEmResult em = weighted_em(particles, w, config.n_components, q,
                                            config.em_iters, config.cov_floor);
    q = em.mixture;
    if (diag.reached_threshold) {
      out.reached_threshold = true;
      break;
    }
  }
  out.posterior = std::move(q);
  return out;
}

std::vector<FilterStep> sequential_filter(const BaseModel& model,
                                          const ParamGenerator& gen,
                                          const Vector& shared,
                                          const Vector& log_nu,
                                          const SequenceRecord& rec,
                                          const AdaIsConfig& config) {
  config.validate();
  gen.validate();
  rec.validate();
  if (gen.param_dim() != model.param_dim()) {
    throw DimensionError("sequential_filter: generator/model mismatch");
  }
  const int k = gen.latent_dim();
  const int T = rec.length();
  const NoisePrecision nu = NoisePrecision::from_log(log_nu);

  std::vector<int> steps;
  for (int t = config.thinning; t <= T; t += config.thinning) steps.push_back(t);
  if (steps.empty() || steps.back() != T) steps.push_back(T);

  Rng rng(config.seed);
  GaussianMixture q = GaussianMixture::standard_normal(k);
  std::vector<FilterStep> out;
  out.reserve(steps.size());
  for (int t : steps) {
    const SequenceRecord pre = rec.prefix(t);
    const auto target = [&](const Vector& z) {
      const Vector theta = apply_param_generator(gen, z);
      const Matrix yhat = model.simulate(theta, shared, pre.U);
      const double ll = gaussian_loglik(yhat, pre.Y, pre.mask, nu);
      return ll - 0.5 * (z.squaredNorm() + k * kLogTwoPi);
    };
    const AdaIsResult res = adais_fit(target, q, config, rng);
    q = res.posterior;
    FilterStep step;
    step.t = t;
    step.posterior = q;
    step.ess = res.final_ess;
    step.adaptations = static_cast<int>(res.adaptations.size());
    step.reached_threshold = res.reached_threshold;
    step.rescued = res.rescued;
    out.push_back(std::move(step));
  }
  return out;
}

ParticleCloud naive_smc_reweight(const ParticleCloud& cloud,
                                 const std::function<double(const Vector&)>&
                                     incremental_loglik) {
  const int M = static_cast<int>(cloud.particles.rows());
  if (cloud.log_weights.size() != M) {
    throw DimensionError("naive_smc_reweight: weight count mismatch");
  }
  ParticleCloud out;
  out.particles = cloud.particles;
  out.log_weights.resize(M);
  parallel_for(M, [&](std::int64_t m) {
    out.log_weights[m] =
        cloud.log_weights[m] + incremental_loglik(cloud.particles.row(m).transpose());
  });
  return out;
}

PredictiveSummary posterior_predictive(const BaseModel& model,
                                       const ParamGenerator& gen,
                                       const Vector& shared,
                                       const Vector& log_nu,
                                       const GaussianMixture& posterior,
                                       const Matrix& U_prefix,
                                       const Matrix& U_future, int n_samples,
                                       Rng& rng) {
  gen.validate();
  posterior.validate();
  if (n_samples < 1) throw DimensionError("posterior_predictive: n_samples >= 1");
  if (U_prefix.cols() != U_future.cols() && U_prefix.rows() > 0) {
    throw DimensionError("posterior_predictive: input channel mismatch");
  }
  const int H = static_cast<int>(U_future.rows());
  const int n_y = model.output_dim();
  const NoisePrecision nu = NoisePrecision::from_log(log_nu);
  Vector noise_sd(n_y);
  for (int j = 0; j < n_y; ++j) noise_sd[j] = 1.0 / std::sqrt(nu.nu[j]);

  Matrix U_all(U_prefix.rows() + H, U_future.cols());
  if (U_prefix.rows() > 0) U_all.topRows(U_prefix.rows()) = U_prefix;
  U_all.bottomRows(H) = U_future;

  // All randomness is drawn up front so the parallel section stays pure.
  Matrix zs(n_samples, posterior.dim());
  std::vector<Matrix> noise(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    zs.row(s) = gmm_sample(posterior, rng).transpose();
    Matrix e(H, n_y);
    for (int t = 0; t < H; ++t) {
      for (int j = 0; j < n_y; ++j) e(t, j) = rng.normal() * noise_sd[j];
    }
    noise[static_cast<std::size_t>(s)] = std::move(e);
  }

  PredictiveSummary out;
  out.sample_paths.assign(static_cast<std::size_t>(n_samples), Matrix());
  std::vector<Matrix> clean(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, [&](std::int64_t s) {
    const Vector theta = apply_param_generator(gen, zs.row(s).transpose());
    const Matrix sim = model.simulate(theta, shared, U_all).bottomRows(H);
    clean[static_cast<std::size_t>(s)] = sim;
    out.sample_paths[static_cast<std::size_t>(s)] =
        sim + noise[static_cast<std::size_t>(s)];
  });

  out.mean = Matrix::Zero(H, n_y);
  for (const auto& sim : clean) out.mean += sim;
  out.mean /= static_cast<double>(n_samples);

  out.q05 = Matrix::Zero(H, n_y);
  out.q95 = Matrix::Zero(H, n_y);
  std::vector<double> scratch(static_cast<std::size_t>(n_samples));
  const auto quantile = [&](double p) {
    // Linear interpolation between order statistics.
    const double pos = p * (n_samples - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, scratch.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return scratch[lo] * (1.0 - frac) + scratch[hi] * frac;
  };
  for (int t = 0; t < H; ++t) {
    for (int j = 0; j < n_y; ++j) {
      for (int s = 0; s < n_samples; ++s) {
        scratch[static_cast<std::size_t>(s)] =
            out.sample_paths[static_cast<std::size_t>(s)](t, j);
      }
      std::sort(scratch.begin(), scratch.end());
      out.q05(t, j) = quantile(0.05);
      out.q95(t, j) = quantile(0.95);
    }
  }
  return out;
}

}  // namespace mtdskit
