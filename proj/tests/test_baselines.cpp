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

#include "mtdskit/baselines.hpp"
#include "mtdskit/synthetic.hpp"

using namespace mtdskit;

namespace {

struct PdFixture {
  PdModel model{2};
  Vector theta0;
  Matrix U;

  PdFixture() {
    Rng rng(31);
    ParamGenerator gen;
    gen.constraints = model.constraints();
    gen.b = model.default_raw_offset(rng);
    gen.W = Matrix::Zero(model.param_dim(), 1);
    theta0 = default_params(gen);
    U = Matrix(8, 1);
    for (int t = 0; t < 8; ++t) U(t, 0) = t < 4 ? 1.0 : 0.25;
  }

  /// Record whose residuals against the zero-offset response are exactly
  /// `shift` on every channel.
  SequenceRecord shifted_record(const std::string& id, const Vector& shift) const {
    SequenceRecord rec;
    rec.seq_id = id;
    rec.U = U;
    rec.Y = model.simulate_with_alpha(theta0, Vector::Zero(2), U);
    rec.Y.rowwise() += shift.transpose();
    rec.mask = MaskMatrix::Constant(8, 2, true);
    return rec;
  }
};

}  // namespace

TEST_CASE("offset prior matches the moments of known per-sequence shifts") {
  const PdFixture fix;
  SequenceDataset data;
  Vector c0(2), c1(2), c2(2);
  c0 << 1.0, -1.0;
  c1 << 2.0, 0.0;
  c2 << 3.0, 1.0;
  data.sequences.push_back(fix.shifted_record("a", c0));
  data.sequences.push_back(fix.shifted_record("b", c1));
  data.sequences.push_back(fix.shifted_record("c", c2));

  // A masked-out corrupted cell must not influence the estimate.
  data.sequences[0].Y(3, 0) = 1e6;
  data.sequences[0].mask(3, 0) = false;

  const OffsetPrior prior = fit_offset_prior(fix.model, fix.theta0, data);
  CHECK(prior.mean[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(prior.mean[1] == doctest::Approx(0.0).epsilon(1e-10));
  // Unbiased variance of {1,2,3} and {-1,0,1} is 1.
  CHECK(prior.var[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(prior.var[1] == doctest::Approx(1.0).epsilon(1e-10));

  // Identical sequences: zero spread hits the variance floor.
  SequenceDataset twin;
  twin.sequences.push_back(fix.shifted_record("a", c0));
  twin.sequences.push_back(fix.shifted_record("b", c0));
  const OffsetPrior degenerate = fit_offset_prior(fix.model, fix.theta0, twin);
  CHECK(degenerate.var[0] == 1e-8);

  SequenceDataset single;
  single.sequences.push_back(fix.shifted_record("a", c0));
  CHECK_THROWS_AS(fit_offset_prior(fix.model, fix.theta0, single), DataError);

  SequenceDataset blind = twin;
  for (int t = 0; t < 8; ++t) blind.sequences[0].mask(t, 1) = false;
  CHECK_THROWS_AS(fit_offset_prior(fix.model, fix.theta0, blind), DataError);
}

TEST_CASE("conjugate offset update reproduces the closed form") {
  const PdFixture fix;
  Vector shift(2);
  shift << 1.0, 0.0;
  SequenceRecord rec = fix.shifted_record("s", shift);
  // Rows past t_obs are garbage on purpose: they must not be read.
  rec.Y.bottomRows(3).setConstant(999.0);

  OffsetPrior prior;
  prior.mean = Vector::Zero(2);
  prior.var = Vector::Constant(2, 1.0);
  const NoisePrecision nu{Vector::Constant(2, 1.0)};

  // Two unit-residual observations on channel 0: precision 1 + 2, posterior
  // mean 2/3; channel 1 has zero residuals so only the variance tightens.
  const AlphaPosterior post =
      pooled_alpha_filter(fix.model, fix.theta0, prior, nu, rec, 2);
  CHECK(post.mean[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(post.var[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(post.mean[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(post.var[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Masking one of the two rows halves the evidence.
  SequenceRecord gappy = rec;
  gappy.mask(1, 0) = false;
  const AlphaPosterior lighter =
      pooled_alpha_filter(fix.model, fix.theta0, prior, nu, gappy, 2);
  CHECK(lighter.mean[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lighter.var[0] == doctest::Approx(0.5).epsilon(1e-12));

  // No data: the posterior is the prior.
  const AlphaPosterior empty =
      pooled_alpha_filter(fix.model, fix.theta0, prior, nu, rec, 0);
  CHECK(empty.mean[0] == 0.0);
  CHECK(empty.var[0] == 1.0);

  CHECK_THROWS_AS(
      pooled_alpha_filter(fix.model, fix.theta0, prior, nu, rec, 9),
      DimensionError);
}

TEST_CASE("windowed forecast scoring computes masked per-channel errors") {
  SequenceRecord rec;
  rec.seq_id = "w";
  rec.U = Matrix::Zero(10, 1);
  rec.Y = Matrix(10, 2);
  for (int t = 0; t < 10; ++t) {
    rec.Y(t, 0) = t;
    rec.Y(t, 1) = t + 1.0;
  }
  rec.mask = MaskMatrix::Constant(10, 2, true);
  rec.mask(5, 0) = false;           // drops one row from channel 0
  for (int h = 0; h < 2; ++h) rec.mask(h, 1) = false;  // blinds an early window

  int calls = 0;
  const ForecastFn zero_forecast = [&](const SequenceRecord& r, int anchor,
                                       int horizon) {
    ++calls;
    CHECK(r.seq_id == "w");
    return Matrix::Zero(horizon, r.output_dim());
  };

  Vector scale(2);
  scale << 2.0, 4.0;
  const EvalReport report = windowed_rmse(zero_forecast, rec, {0, 4, 8}, {2, 3},
                                          7, &scale);

  // Window (0, 2] has no channel-1 observations; anchor 8 with horizon 3
  // over-runs T = 10. Skips appear in window-iteration order.
  REQUIRE(report.skipped.size() == 2);
  CHECK(report.skipped[0].find("channel=1") != std::string::npos);
  CHECK(report.skipped[1].find("anchor=8 horizon=3") != std::string::npos);
  CHECK(calls == 5);

  // Window starting at anchor 4, horizon 3 covers rows 4..6.
  double rmse40 = -1.0, rmse41 = -1.0;
  for (const auto& row : report.rows) {
    CHECK(row.fold == 7);
    if (row.anchor == 4 && row.horizon == 3 && row.channel == 0) rmse40 = row.rmse;
    if (row.anchor == 4 && row.horizon == 3 && row.channel == 1) rmse41 = row.rmse;
  }
  // Channel 0 sees rows {4, 6} (row 5 masked), channel 1 rows {5, 6, 7}.
  CHECK(rmse40 == doctest::Approx(std::sqrt((16.0 + 36.0) / 2.0)).epsilon(1e-12));
  CHECK(rmse41 ==
        doctest::Approx(std::sqrt((25.0 + 36.0 + 49.0) / 3.0)).epsilon(1e-12));
  for (const auto& row : report.rows) {
    REQUIRE(row.srmse.has_value());
    CHECK(*row.srmse ==
          doctest::Approx(row.rmse / scale[row.channel]).epsilon(1e-12));
  }

  const ForecastFn bad_shape = [](const SequenceRecord& r, int, int) {
    return Matrix::Zero(1, r.output_dim());
  };
  CHECK_THROWS_AS(windowed_rmse(bad_shape, rec, {0}, {3}, 0, nullptr),
                  DimensionError);
}

TEST_CASE("report aggregation averages cells with equal sequence weight") {
  EvalReport report;
  EvalRow r1{0, "a", 4, 2, 0, 1.0, 0.5};
  EvalRow r2{1, "b", 4, 2, 0, 3.0, 1.5};
  EvalRow r3{0, "a", 4, 2, 1, 5.0, std::nullopt};
  report.rows = {r1, r2, r3};

  const auto agg = aggregate_report(report);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].seq_id == "ALL");
  CHECK(agg[0].fold == -1);
  CHECK(agg[0].anchor == 4);
  CHECK(agg[0].channel == 0);
  CHECK(agg[0].rmse == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(agg[0].srmse.has_value());
  CHECK(*agg[0].srmse == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(agg[1].channel == 1);
  CHECK_FALSE(agg[1].srmse.has_value());  // not every row carried one

  EvalReport other;
  other.rows = {r3};
  other.skipped = {"note"};
  merge_reports(&report, other);
  CHECK(report.rows.size() == 4);
  CHECK(report.skipped.size() == 1);
}

TEST_CASE("single-task fit explores the raw parameter space directly") {
  PdModel model(1);
  SyntheticFamily family = default_pd_family(model, 1);
  family.length = 24;
  family.n_sequences = 1;
  auto [data, truth] = generate_synthetic(model, family, 2);
  const Vector log_nu = family.nu.array().log();

  AdaIsConfig config;
  config.n_particles = 600;
  config.ess_threshold = 120.0;
  config.n_components = 2;
  config.max_adaptations = 3;
  config.seed = 4;

  const SingleTaskResult fit = single_task_fit(model, Vector(0), log_nu,
                                               data.sequences[0], 5.0, config);
  const int d = model.param_dim();
  CHECK(fit.posterior.dim() == d);
  CHECK(fit.generator.W.isApprox(Matrix::Identity(d, d) * 5.0));
  CHECK(fit.generator.b.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fit.final_ess > 0.0);
  fit.posterior.validate();

  const Vector rmse = single_task_insample_rmse(model, Vector(0), log_nu,
                                                data.sequences[0], 5.0, config);
  REQUIRE(rmse.size() == 1);
  CHECK(std::isfinite(rmse[0]));
  CHECK(rmse[0] >= 0.0);

  CHECK_THROWS_AS(single_task_fit(model, Vector(0), log_nu, data.sequences[0],
                                  0.0, config),
                  ConfigError);
}

TEST_CASE("leave-one-out driver scores all folds with all three predictors") {
  PdModel model(1);
  SyntheticFamily family = default_pd_family(model, 1);
  family.n_sequences = 3;
  family.length = 24;
  auto [data, truth] = generate_synthetic(model, family, 17);

  LooConfig config;
  config.train.n_iters = 25;
  config.train.batch_size = 2;
  config.train.latent_dim = 1;
  config.filter.n_particles = 300;
  config.filter.ess_threshold = 75.0;
  config.filter.n_components = 2;
  config.filter.max_adaptations = 3;
  config.anchors = {8};
  config.horizons = {6};
  config.forecast_samples = 60;
  config.seed = 5;

  const LooResult result = loo_driver(model, data, config);
  for (const EvalReport* report :
       {&result.mtds, &result.pooled, &result.pooled_alpha}) {
    REQUIRE(report->rows.size() == 3);  // one row per fold
    CHECK(report->skipped.empty());
    for (const auto& row : report->rows) {
      CHECK(row.anchor == 8);
      CHECK(row.horizon == 6);
      CHECK(std::isfinite(row.rmse));
      CHECK(row.rmse >= 0.0);
      CHECK_FALSE(row.srmse.has_value());
    }
  }
  // Each fold held out a different sequence.
  CHECK(result.mtds.rows[0].seq_id != result.mtds.rows[1].seq_id);

  SequenceDataset tiny;
  tiny.sequences = {data.sequences[0], data.sequences[1]};
  CHECK_THROWS_AS(loo_driver(model, tiny, config), DataError);
}
