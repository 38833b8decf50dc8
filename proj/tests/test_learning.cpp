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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtdskit/learning.hpp"
#include "mtdskit/lds.hpp"
#include "mtdskit/pd.hpp"
#include "mtdskit/synthetic.hpp"
#include "oracles.hpp"

using namespace mtdskit;

namespace {

// Expected two Adam ascent steps on a scalar, spelled out in full.
double hand_adam(double p, double g1, double g2, double lr, double l2) {
  double m = 0.0, v = 0.0;
  for (int step = 1; step <= 2; ++step) {
    const double g = step == 1 ? g1 : g2;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, step));
    const double vhat = v / (1.0 - std::pow(0.999, step));
    p += lr * mhat / (std::sqrt(vhat) + 1e-8);
    p -= lr * l2 * p;
  }
  return p;
}

struct ElboSetup {
  DeterministicLds model{2, 1, 2};
  ParamGenerator gen;
  Vector shared;
  Vector log_nu;
  VariationalPosterior q;
  SequenceRecord rec;
};

ElboSetup make_elbo_setup() {
  ElboSetup s;
  Rng rng(42);
  const int d = s.model.param_dim();
  s.gen.constraints = s.model.constraints();
  s.gen.b = s.model.default_raw_offset(rng);
  s.gen.W = Matrix::Zero(d, 2);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < 2; ++c) s.gen.W(r, c) = 0.2 * rng.normal();
  }
  s.log_nu = Vector::Constant(2, std::log(4.0));
  s.q.mu = Vector(2);
  s.q.mu << 0.3, -0.4;
  s.q.log_s = Vector(2);
  s.q.log_s << -0.7, -1.1;

  const int T = 15;
  s.rec.seq_id = "elbo";
  s.rec.U = Matrix(T, 1);
  for (int t = 0; t < T; ++t) s.rec.U(t, 0) = std::sin(0.4 * t);
  const Vector theta = apply_param_generator(s.gen, Vector::Zero(2));
  s.rec.Y = s.model.simulate(theta, s.shared, s.rec.U);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < 2; ++j) s.rec.Y(t, j) += 0.3 * rng.normal();
  }
  s.rec.mask = MaskMatrix::Constant(T, 2, true);
  s.rec.mask(4, 1) = false;
  return s;
}

}  // namespace

TEST_CASE("adam steps match the hand recursion") {
  Vector p = Vector::Constant(1, 1.0);
  AdamState st;
  adam_step(&p, Vector::Constant(1, 2.0), &st, 0.1, 0.0);
  // First step: mhat = g, vhat = g^2, so the update is lr * sign-ish step.
  CHECK(p[0] == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-15));
  adam_step(&p, Vector::Constant(1, 1.0), &st, 0.1, 0.0);
  CHECK(p[0] == doctest::Approx(hand_adam(1.0, 2.0, 1.0, 0.1, 0.0)).epsilon(1e-15));
  CHECK(st.steps == 2);

  // Decay variant replays the same gradients.
  Vector pd = Vector::Constant(1, 1.0);
  AdamState st2;
  adam_step(&pd, Vector::Constant(1, 2.0), &st2, 0.1, 0.03);
  adam_step(&pd, Vector::Constant(1, 1.0), &st2, 0.1, 0.03);
  CHECK(pd[0] == doctest::Approx(hand_adam(1.0, 2.0, 1.0, 0.1, 0.03)).epsilon(1e-15));
}

TEST_CASE("weight decay is decoupled from the moment estimates") {
  // Zero gradient: the moments stay zero and only the decay acts.
  Vector p = Vector::Constant(1, 2.0);
  AdamState st;
  adam_step(&p, Vector::Zero(1), &st, 0.1, 0.5);
  CHECK(p[0] == doctest::Approx(2.0 * (1.0 - 0.05)).epsilon(1e-15));
  adam_step(&p, Vector::Zero(1), &st, 0.1, 0.5);
  CHECK(p[0] == doctest::Approx(2.0 * 0.95 * 0.95).epsilon(1e-15));

  Vector bad = Vector::Zero(2);
  CHECK_THROWS_AS(adam_step(&bad, Vector::Zero(3), &st, 0.1, 0.0),
                  DimensionError);
}

TEST_CASE("training configuration validation and warmup") {
  TrainConfig config;
  config.validate();
  CHECK(config.effective_warmup() == config.n_iters / 5);
  config.kl_warmup_iters = 7;
  CHECK(config.effective_warmup() == 7);
  config.kl_warmup_iters = 0;
  CHECK(config.effective_warmup() == 0);

  config = TrainConfig{};
  config.n_iters = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TrainConfig{};
  config.latent_dim = 11;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TrainConfig{};
  config.lr_mt = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("elbo assembles the likelihood and penalty terms") {
  const ElboSetup s = make_elbo_setup();
  Rng r1(5);
  const ElboGradients full = elbo_estimate(s.model, s.gen, s.shared, s.log_nu,
                                           s.q, s.rec, 0.3, 2, r1);
  CHECK(full.kl == doctest::Approx(kl_to_standard_normal(s.q)).epsilon(1e-14));
  CHECK(full.value ==
        doctest::Approx(full.loglik_term - 0.3 * full.kl).epsilon(1e-14));

  // Same draws with the penalty off: identical likelihood term.
  Rng r2(5);
  const ElboGradients free_fit = elbo_estimate(s.model, s.gen, s.shared,
                                               s.log_nu, s.q, s.rec, 0.0, 2, r2);
  CHECK(free_fit.value == doctest::Approx(free_fit.loglik_term).epsilon(1e-14));
  CHECK(free_fit.loglik_term == doctest::Approx(full.loglik_term).epsilon(1e-13));

  VariationalPosterior wrong;
  wrong.mu = Vector::Zero(3);
  wrong.log_s = Vector::Zero(3);
  Rng r3(5);
  CHECK_THROWS_AS(elbo_estimate(s.model, s.gen, s.shared, s.log_nu, wrong,
                                s.rec, 1.0, 1, r3),
                  DimensionError);
}

TEST_CASE("elbo gradients for every block agree with finite differences") {
  const ElboSetup s = make_elbo_setup();
  const double kl_weight = 0.7;
  const int n_mc = 3;

  // Freezing the seed makes the estimator a deterministic function of the
  // parameters, so central differences are exact modulo O(h^2).
  Rng grad_rng(17);
  const ElboGradients g = elbo_estimate(s.model, s.gen, s.shared, s.log_nu,
                                        s.q, s.rec, kl_weight, n_mc, grad_rng);

  const auto value_at = [&](const VariationalPosterior& q,
                            const ParamGenerator& gen, const Vector& log_nu) {
    Rng r(17);
    return elbo_estimate(s.model, gen, s.shared, log_nu, q, s.rec, kl_weight,
                         n_mc, r)
        .value;
  };

  const double err_mu = finite_diff_check(
      [&](const Vector& x) {
        VariationalPosterior q = s.q;
        q.mu = x;
        return value_at(q, s.gen, s.log_nu);
      },
      g.d_mu, s.q.mu);
  CHECK(err_mu < 1e-6);

  const double err_log_s = finite_diff_check(
      [&](const Vector& x) {
        VariationalPosterior q = s.q;
        q.log_s = x;
        return value_at(q, s.gen, s.log_nu);
      },
      g.d_log_s, s.q.log_s);
  CHECK(err_log_s < 1e-6);

  const int d = s.model.param_dim();
  const Vector w0 = Eigen::Map<const Vector>(s.gen.W.data(), d * 2);
  const Vector gw = Eigen::Map<const Vector>(g.d_W.data(), d * 2);
  const double err_w = finite_diff_check(
      [&](const Vector& x) {
        ParamGenerator gen = s.gen;
        gen.W = Eigen::Map<const Matrix>(x.data(), d, 2);
        return value_at(s.q, gen, s.log_nu);
      },
      gw, w0);
  CHECK(err_w < 1e-6);

  const double err_b = finite_diff_check(
      [&](const Vector& x) {
        ParamGenerator gen = s.gen;
        gen.b = x;
        return value_at(s.q, gen, s.log_nu);
      },
      g.d_b, s.gen.b);
  CHECK(err_b < 1e-6);

  const double err_nu = finite_diff_check(
      [&](const Vector& x) { return value_at(s.q, s.gen, x); }, g.d_log_nu,
      s.log_nu);
  CHECK(err_nu < 1e-6);
}

TEST_CASE("training improves the objective on a synthetic family") {
  PdModel model(2);
  SyntheticFamily family = default_pd_family(model, 1);
  family.n_sequences = 6;
  family.length = 40;
  auto [data, truth] = generate_synthetic(model, family, 13);

  TrainConfig config;
  config.n_iters = 150;
  config.batch_size = 6;
  config.latent_dim = 1;
  config.seed = 1;
  config.log_interval = 10;
  const TrainState state = train(model, data, config);

  REQUIRE(state.log.size() >= 3);
  CHECK(state.log.front().iter == 1);
  CHECK(state.log.back().iter == 150);
  // Full-batch updates: the tail of the trace must dominate the start.
  CHECK(state.log.back().elbo > state.log.front().elbo + 1.0);
  // kl_weight ramps over the first fifth of the run.
  CHECK(state.log.front().kl_weight < 1.0);
  CHECK(state.log.back().kl_weight == 1.0);
  // Per-sequence posteriors were adapted away from the prior.
  double moved = 0.0;
  for (const auto& q : state.posteriors) moved += q.mu.cwiseAbs().sum();
  CHECK(moved > 0.01);
  CHECK(state.posterior_for(data.sequences[2].seq_id).mu.size() == 1);
  CHECK_THROWS_AS(state.posterior_index("nope"), DataError);
}

TEST_CASE("pooled training keeps the loading at exactly zero") {
  PdModel model(2);
  SyntheticFamily family = default_pd_family(model, 1);
  family.n_sequences = 4;
  family.length = 25;
  auto [data, truth] = generate_synthetic(model, family, 3);

  TrainConfig config;
  config.n_iters = 25;
  config.batch_size = 4;
  config.latent_dim = 1;
  config.freeze_loading = true;
  const TrainState state = train(model, data, config);
  CHECK(state.gen.W.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frozen generator rows never move while the rest learn") {
  PdModel model(2);
  SyntheticFamily family = default_pd_family(model, 1);
  family.n_sequences = 4;
  family.length = 25;
  auto [data, truth] = generate_synthetic(model, family, 3);

  TrainConfig config;
  config.n_iters = 30;
  config.batch_size = 4;
  config.latent_dim = 1;
  config.freeze_rows = {0, 3};
  const TrainState state = train(model, data, config);
  CHECK(state.gen.W.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.gen.W.row(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.gen.W.cwiseAbs().maxCoeff() > 0.0);

  config.freeze_rows = {model.param_dim()};
  CHECK_THROWS_AS(train(model, data, config), ConfigError);
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
  PdModel model(2);
  SyntheticFamily family = default_pd_family(model, 1);
  family.n_sequences = 5;
  family.length = 20;
  auto [data, truth] = generate_synthetic(model, family, 8);

  TrainConfig config;
  config.n_iters = 40;
  config.batch_size = 3;  // exercises the shuffled batching path
  config.latent_dim = 2;
  config.seed = 77;
  const TrainState a = train(model, data, config);
  const TrainState b = train(model, data, config);

  CHECK((a.gen.W - b.gen.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.gen.b - b.gen.b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.log_nu - b.log_nu).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < a.posteriors.size(); ++i) {
    CHECK((a.posteriors[i].mu - b.posteriors[i].mu).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((a.posteriors[i].log_s - b.posteriors[i].log_s)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].elbo == b.log[i].elbo);  // wallclock may differ
  }
}

TEST_CASE("segmentation windows a long sequence and folds short tails") {
  SequenceDataset data;
  SequenceRecord rec;
  rec.seq_id = "s";
  rec.U = Matrix(10, 1);
  rec.Y = Matrix(10, 1);
  for (int t = 0; t < 10; ++t) {
    rec.U(t, 0) = t;
    rec.Y(t, 0) = 10.0 + t;
  }
  rec.mask = MaskMatrix::Constant(10, 1, true);
  rec.mask(9, 0) = false;
  data.sequences.push_back(rec);

  const SequenceDataset seg = segment_dataset(data, 4);
  REQUIRE(seg.size() == 3);
  CHECK(seg.sequences[0].seq_id == "s#0");
  CHECK(seg.sequences[1].seq_id == "s#4");
  CHECK(seg.sequences[2].seq_id == "s#8");
  CHECK(seg.sequences[2].length() == 2);
  CHECK(seg.sequences[1].U(0, 0) == 4.0);
  CHECK(seg.sequences[2].Y(1, 0) == 19.0);
  CHECK_FALSE(seg.sequences[2].mask(1, 0));

  // Length 9: the final single step is too short to stand alone and joins
  // the previous window.
  SequenceDataset data9;
  SequenceRecord r9 = rec;
  r9.U = rec.U.topRows(9);
  r9.Y = rec.Y.topRows(9);
  r9.mask = rec.mask.topRows(9);
  data9.sequences.push_back(r9);
  const SequenceDataset seg9 = segment_dataset(data9, 4);
  REQUIRE(seg9.size() == 2);
  CHECK(seg9.sequences[1].length() == 5);
  CHECK(seg9.sequences[1].U(4, 0) == 8.0);

  const SequenceDataset same = segment_dataset(data, 0);
  CHECK(same.size() == 1);
  CHECK(same.sequences[0].seq_id == "s");
  CHECK_THROWS_AS(segment_dataset(data, 1), ConfigError);
}

TEST_CASE("importance-sampled log marginal matches 1-D quadrature") {
  PdModel model(1);
  SyntheticFamily family = default_pd_family(model, 1);
  family.length = 20;
  family.n_sequences = 1;
  auto [data, truth] = generate_synthetic(model, family, 21);
  const SequenceRecord& rec = data.sequences[0];
  const Vector log_nu = family.nu.array().log();

  const auto log_f_for = [&](const SequenceRecord& r) {
    return [&model, &family, &log_nu, &r](double z) {
      const Vector theta =
          apply_param_generator(family.generator, Vector::Constant(1, z));
      const Matrix yhat = model.simulate(theta, family.shared, r.U);
      return gaussian_loglik(yhat, r.Y, r.mask,
                             NoisePrecision::from_log(log_nu));
    };
  };

  // The T=20 likelihood is too peaked for Hermite quadrature, so the oracle
  // here is a dense trapezoid integral of N(z) f(z) over [-8, 8].
  const auto log_f = log_f_for(rec);
  const int n = 16001;
  const double lo = -8.0, hi = 8.0, h = (hi - lo) / (n - 1);
  Vector lg(n);
  for (int i = 0; i < n; ++i) {
    const double z = lo + i * h;
    lg[i] = -0.5 * z * z - 0.91893853320467274 + log_f(z);
  }
  const double shift = lg.maxCoeff();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * std::exp(lg[i] - shift);
  }
  const double quad = shift + std::log(acc * h);

  Rng rng(5);
  const LogMarginalEstimate est = log_marginal_is_estimate(
      model, family.generator, family.shared, log_nu, rec, 20000, rng);
  CHECK(est.standard_error > 0.0);
  CHECK(est.standard_error < 0.1);
  CHECK(std::abs(est.value - quad) < 4.0 * est.standard_error);

  // A two-step prefix keeps the integrand broad enough for Hermite
  // quadrature to converge, giving an oracle on an independent code path.
  const SequenceRecord head = rec.prefix(2);
  const double gh = oracles::gh_log_expectation_normal(log_f_for(head), 160);
  const double gh_fine = oracles::gh_log_expectation_normal(log_f_for(head), 320);
  REQUIRE(std::abs(gh - gh_fine) < 1e-6);  // quadrature has converged
  Rng rng_head(9);
  const LogMarginalEstimate est_head = log_marginal_is_estimate(
      model, family.generator, family.shared, log_nu, head, 20000, rng_head);
  CHECK(std::abs(est_head.value - gh) < 4.0 * est_head.standard_error + 1e-3);

  Rng rng2(5);
  CHECK_THROWS_AS(log_marginal_is_estimate(model, family.generator,
                                           family.shared, log_nu, rec, 1, rng2),
                  DimensionError);
}

TEST_CASE("training log file round trip") {
  const auto path =
      std::filesystem::temp_directory_path() / "mtdskit_train_log_test.csv";
  std::vector<TrainLogEntry> log(2);
  log[0] = {1, -12.5, 0.25, 3.125};
  log[1] = {2, -11.0, 0.5, 6.25};
  write_training_log(path.string(), log);

  std::ifstream f(path);
  REQUIRE(f.good());
  std::string line;
  std::getline(f, line);
  CHECK(line == "iter,elbo,kl_weight,wallclock_ms");
  std::getline(f, line);
  CHECK(line == "1,-12.5,0.25,3.125");
  std::getline(f, line);
  CHECK(line == "2,-11,0.5,6.250");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(write_training_log("/nonexistent_dir_zz/x.csv", log),
                  DataError);
}
