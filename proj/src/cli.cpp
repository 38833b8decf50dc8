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

#include "mtdskit/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "mtdskit/io.hpp"
#include "mtdskit/kalman.hpp"

namespace mtdskit {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "configuration file");
  sub->add_option("--set", args->overrides, "override: key=value (repeatable)");
  sub->add_option("--out", args->out_dir, "output directory");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = RunConfig::parse_file(args.config_path);
  }
  for (const auto& assignment : args.overrides) {
    cfg.set_override(assignment);
  }
  return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  fs::create_directories(args.out_dir);
  return (fs::path(args.out_dir) / name).string();
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& key) {
  std::vector<int> out;
  std::string cur;
  const auto flush = [&] {
    if (cur.empty()) {
      throw ConfigError("config key '" + key + "': empty list entry");
    }
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(cur, &pos));
      if (pos != cur.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad integer '" + cur + "'");
    }
    cur.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

AdaIsConfig adais_from_config(const RunConfig& cfg, std::uint64_t seed) {
  AdaIsConfig out;
  out.n_particles = cfg.get_int("adais.particles", out.n_particles);
  out.ess_threshold = cfg.get_double("adais.ess_threshold", out.ess_threshold);
  out.max_adaptations = cfg.get_int("adais.max_adaptations", out.max_adaptations);
  out.n_components = cfg.get_int("adais.components", out.n_components);
  out.em_iters = cfg.get_int("adais.em_iters", out.em_iters);
  out.cov_floor = cfg.get_double("adais.cov_floor", out.cov_floor);
  out.thinning = cfg.get_int("adais.thinning", out.thinning);
  out.quasi_random = cfg.get_bool("adais.quasi_random", out.quasi_random);
  out.seed = cfg.get_u64("adais.seed", seed);
  return out;
}

TrainConfig train_from_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig out;
  out.n_iters = cfg.get_int("train.n_iters", out.n_iters);
  out.batch_size = cfg.get_int("train.batch_size", out.batch_size);
  out.lr_main = cfg.get_double("train.lr_main", out.lr_main);
  out.lr_mt = cfg.get_double("train.lr_mt", out.lr_mt);
  out.l2_main = cfg.get_double("train.l2_main", out.l2_main);
  out.l2_mt = cfg.get_double("train.l2_mt", out.l2_mt);
  out.kl_warmup_iters = cfg.get_int("train.kl_warmup_iters", out.kl_warmup_iters);
  out.n_mc_samples = cfg.get_int("train.n_mc_samples", out.n_mc_samples);
  out.latent_dim = cfg.get_int("train.latent_dim", out.latent_dim);
  out.segment_len = cfg.get_int("train.segment_len", out.segment_len);
  out.freeze_loading = cfg.get_bool("train.freeze_loading", out.freeze_loading);
  out.log_path = cfg.get_string("train.log_path", out.log_path);
  out.log_interval = cfg.get_int("train.log_interval", out.log_interval);
  out.seed = cfg.get_u64("train.seed", seed);
  if (cfg.has("train.freeze_rows")) {
    out.freeze_rows =
        parse_int_list(cfg.get_string("train.freeze_rows", ""), "train.freeze_rows");
  }
  return out;
}

const std::vector<std::string> kModelKeys = {
    "model.kind", "model.state_dim", "model.first_layer_dim",
    "model.bottleneck_dim", "model.second_layer_dim"};
const std::vector<std::string> kAdaisKeys = {
    "adais.particles", "adais.ess_threshold", "adais.max_adaptations",
    "adais.components", "adais.em_iters", "adais.cov_floor",
    "adais.thinning", "adais.quasi_random", "adais.seed"};
const std::vector<std::string> kTrainKeys = {
    "train.n_iters",     "train.batch_size",      "train.lr_main",
    "train.lr_mt",       "train.l2_main",         "train.l2_mt",
    "train.kl_warmup_iters", "train.n_mc_samples", "train.latent_dim",
    "train.segment_len", "train.freeze_loading",  "train.freeze_rows",
    "train.log_path",    "train.log_interval",    "train.seed"};

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> lists) {
  std::vector<std::string> out;
  for (const auto& list : lists) {
    out.insert(out.end(), list.begin(), list.end());
  }
  return out;
}

std::unique_ptr<BaseModel> model_from_config(const RunConfig& cfg, int n_u,
                                             int n_y) {
  const std::string kind = cfg.get_string("model.kind", "pd");
  return make_model(kind, default_dims(kind, cfg, n_u, n_y));
}

int cmd_synth(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kModelKeys,
                            {"seed", "synth.n_sequences", "synth.length",
                             "synth.latent_dim", "synth.noise_precision",
                             "synth.missing_rate", "synth.input_low",
                             "synth.input_high", "synth.input_segments",
                             "synth.input_jitter", "model.input_dim",
                             "model.output_dim"}}));
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const std::string kind = cfg.get_string("model.kind", "pd");
  const int n_u = cfg.get_int("model.input_dim", 1);
  const int n_y = cfg.get_int("model.output_dim", 3);
  const int k = cfg.get_int("synth.latent_dim", 2);
  const auto model = make_model(kind, default_dims(kind, cfg, n_u, n_y));

  SyntheticFamily fam;
  if (kind == "pd") {
    fam = default_pd_family(dynamic_cast<const PdModel&>(*model), k);
  } else if (kind == "lds") {
    fam = default_lds_family(dynamic_cast<const DeterministicLds&>(*model), k);
  } else {
    fam = default_mtrnn_family(dynamic_cast<const MtRnn&>(*model), k, seed + 1);
  }
  fam.n_sequences = cfg.get_int("synth.n_sequences", fam.n_sequences);
  fam.length = cfg.get_int("synth.length", fam.length);
  fam.missing_rate = cfg.get_double("synth.missing_rate", fam.missing_rate);
  if (cfg.has("synth.noise_precision")) {
    fam.nu = Vector::Constant(model->output_dim(),
                              cfg.get_double("synth.noise_precision", 4.0));
  }
  fam.inputs.low = cfg.get_double("synth.input_low", fam.inputs.low);
  fam.inputs.high = cfg.get_double("synth.input_high", fam.inputs.high);
  fam.inputs.n_segments = cfg.get_int("synth.input_segments", fam.inputs.n_segments);
  fam.inputs.jitter_sd = cfg.get_double("synth.input_jitter", fam.inputs.jitter_sd);

  const auto [data, truth] = generate_synthetic(*model, fam, seed);
  write_sequences_csv(out_path(args, "sequences.csv"), data);
  std::vector<std::string> ids;
  for (const auto& rec : data.sequences) ids.push_back(rec.seq_id);
  write_truth_csv(out_path(args, "truth.csv"), ids, truth);
  std::cout << "wrote " << data.size() << " sequences of length " << fam.length
            << " to " << args.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kModelKeys, kTrainKeys, {"seed", "data.path"}}));
  const std::string data_path = cfg.get_string("data.path", "");
  if (data_path.empty()) throw ConfigError("train: data.path is required");
  const SequenceDataset data = load_sequences_csv(data_path);
  const auto model = model_from_config(cfg, data.input_dim(), data.output_dim());
  const TrainConfig tc = train_from_config(cfg, cfg.get_u64("seed", 0));
  const TrainState state = train(*model, data, tc);

  ModelArtifact art;
  art.kind = model->kind();
  art.dims = default_dims(art.kind, cfg, data.input_dim(), data.output_dim());
  art.gen = state.gen;
  art.shared = state.shared;
  art.log_nu = state.log_nu;
  save_artifact(out_path(args, "model.mtds"), art);
  if (!state.log.empty()) {
    std::cout << "final elbo " << state.log.back().elbo << " after "
              << state.iter << " iterations\n";
  }
  return 0;
}

int cmd_filter(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kAdaisKeys,
                            {"seed", "data.path", "model.path", "filter.seq_id"}}));
  const std::string data_path = cfg.get_string("data.path", "");
  const std::string model_path = cfg.get_string("model.path", "");
  if (data_path.empty() || model_path.empty()) {
    throw ConfigError("filter: data.path and model.path are required");
  }
  const SequenceDataset data = load_sequences_csv(data_path);
  const ModelArtifact art = load_artifact(model_path);
  const auto model = make_model(art.kind, art.dims);
  const std::string seq_id =
      cfg.get_string("filter.seq_id", data.sequences.front().seq_id);
  const SequenceRecord& rec = data.by_id(seq_id);
  const AdaIsConfig ac = adais_from_config(cfg, cfg.get_u64("seed", 0));
  const auto steps =
      sequential_filter(*model, art.gen, art.shared, art.log_nu, rec, ac);
  write_posteriors_csv(out_path(args, "posteriors.csv"), steps);
  const auto& last = steps.back();
  std::cout << "filtered '" << seq_id << "' through t=" << last.t
            << " ess=" << last.ess << " adaptations=" << last.adaptations
            << (last.rescued ? " (rescued)" : "") << "\n";
  return 0;
}

int cmd_forecast(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kAdaisKeys,
                            {"seed", "data.path", "model.path",
                             "forecast.anchor", "forecast.horizon",
                             "forecast.samples"}}));
  const std::string data_path = cfg.get_string("data.path", "");
  const std::string model_path = cfg.get_string("model.path", "");
  if (data_path.empty() || model_path.empty()) {
    throw ConfigError("forecast: data.path and model.path are required");
  }
  const SequenceDataset data = load_sequences_csv(data_path);
  const ModelArtifact art = load_artifact(model_path);
  const auto model = make_model(art.kind, art.dims);
  const int horizon = cfg.get_int("forecast.horizon", 20);
  const int samples = cfg.get_int("forecast.samples", 400);
  if (horizon < 1) throw ConfigError("forecast.horizon must be >= 1");
  const std::uint64_t seed = cfg.get_u64("seed", 0);

  std::vector<ForecastBlock> blocks;
  for (const auto& rec : data.sequences) {
    int anchor = cfg.get_int("forecast.anchor", rec.length() - horizon);
    if (anchor < 0 || anchor + horizon > rec.length()) {
      throw ConfigError("forecast: anchor+horizon must fit sequence '" +
                        rec.seq_id + "'");
    }
    AdaIsConfig ac = adais_from_config(cfg, seed);
    ac.thinning = std::max(anchor, 1);
    GaussianMixture posterior = GaussianMixture::standard_normal(art.gen.latent_dim());
    if (anchor > 0) {
      const auto steps = sequential_filter(*model, art.gen, art.shared,
                                           art.log_nu, rec.prefix(anchor), ac);
      posterior = steps.back().posterior;
    }
    Rng rng(seed + 1);
    ForecastBlock block;
    block.seq_id = rec.seq_id;
    block.anchor = anchor;
    block.summary = posterior_predictive(
        *model, art.gen, art.shared, art.log_nu, posterior,
        rec.U.topRows(anchor), rec.U.middleRows(anchor, horizon), samples, rng);
    blocks.push_back(std::move(block));
  }
  write_forecast_csv(out_path(args, "forecast.csv"), blocks);
  std::cout << "forecast " << blocks.size() << " sequences, horizon " << horizon
            << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kAdaisKeys,
                            {"seed", "data.path", "model.path", "eval.anchors",
                             "eval.horizons", "eval.samples",
                             "eval.with_srmse", "eval.prior_sd"}}));
  const std::string data_path = cfg.get_string("data.path", "");
  const std::string model_path = cfg.get_string("model.path", "");
  if (data_path.empty() || model_path.empty()) {
    throw ConfigError("eval: data.path and model.path are required");
  }
  const SequenceDataset data = load_sequences_csv(data_path);
  const ModelArtifact art = load_artifact(model_path);
  const auto model = make_model(art.kind, art.dims);
  const std::vector<int> anchors =
      parse_int_list(cfg.get_string("eval.anchors", "12,24"), "eval.anchors");
  const std::vector<int> horizons =
      parse_int_list(cfg.get_string("eval.horizons", "20,40"), "eval.horizons");
  const int samples = cfg.get_int("eval.samples", 400);
  const bool with_srmse = cfg.get_bool("eval.with_srmse", false);
  const double prior_sd = cfg.get_double("eval.prior_sd", 100.0);
  const std::uint64_t seed = cfg.get_u64("seed", 0);

  EvalReport report;
  for (const auto& rec : data.sequences) {
    Vector scale;
    if (with_srmse) {
      AdaIsConfig st = adais_from_config(cfg, seed + 7);
      scale = single_task_insample_rmse(*model, art.shared, art.log_nu, rec,
                                        prior_sd, st);
    }
    Rng rng(seed + 3);
    const ForecastFn fn = [&](const SequenceRecord& r, int anchor, int horizon) {
      AdaIsConfig ac = adais_from_config(cfg, seed);
      ac.thinning = std::max(anchor, 1);
      GaussianMixture posterior =
          GaussianMixture::standard_normal(art.gen.latent_dim());
      if (anchor > 0) {
        const auto steps = sequential_filter(*model, art.gen, art.shared,
                                             art.log_nu, r.prefix(anchor), ac);
        posterior = steps.back().posterior;
      }
      return posterior_predictive(*model, art.gen, art.shared, art.log_nu,
                                  posterior, r.U.topRows(anchor),
                                  r.U.middleRows(anchor, horizon), samples, rng)
          .mean;
    };
    merge_reports(&report, windowed_rmse(fn, rec, anchors, horizons, 0,
                                         with_srmse ? &scale : nullptr));
  }
  write_eval_csv(out_path(args, "eval.csv"), report, with_srmse, true);
  for (const auto& note : report.skipped) {
    std::cerr << "skipped: " << note << "\n";
  }
  std::cout << "evaluated " << report.rows.size() << " windows\n";
  return 0;
}

int cmd_loo(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kModelKeys, kTrainKeys, kAdaisKeys,
                            {"seed", "data.path", "loo.anchors", "loo.horizons",
                             "loo.samples", "loo.with_srmse", "loo.prior_sd"}}));
  const std::string data_path = cfg.get_string("data.path", "");
  if (data_path.empty()) throw ConfigError("loo: data.path is required");
  if (cfg.get_string("model.kind", "pd") != "pd") {
    throw ConfigError("loo: only the pd model is supported");
  }
  const SequenceDataset data = load_sequences_csv(data_path);
  const PdModel model(data.output_dim());
  LooConfig lc;
  lc.seed = cfg.get_u64("seed", 0);
  lc.train = train_from_config(cfg, lc.seed);
  lc.filter = adais_from_config(cfg, lc.seed);
  lc.anchors = parse_int_list(cfg.get_string("loo.anchors", "12,24"), "loo.anchors");
  lc.horizons =
      parse_int_list(cfg.get_string("loo.horizons", "20,40"), "loo.horizons");
  lc.forecast_samples = cfg.get_int("loo.samples", lc.forecast_samples);
  lc.with_srmse = cfg.get_bool("loo.with_srmse", false);
  lc.single_task_prior_sd = cfg.get_double("loo.prior_sd", lc.single_task_prior_sd);

  const LooResult result = loo_driver(model, data, lc);
  write_eval_csv(out_path(args, "loo_mtds.csv"), result.mtds, lc.with_srmse, true);
  write_eval_csv(out_path(args, "loo_pooled.csv"), result.pooled, lc.with_srmse,
                 true);
  write_eval_csv(out_path(args, "loo_pooled_alpha.csv"), result.pooled_alpha,
                 lc.with_srmse, true);
  const auto mean_rmse = [](const EvalReport& r) {
    double acc = 0.0;
    for (const auto& row : r.rows) acc += row.rmse;
    return r.rows.empty() ? 0.0 : acc / static_cast<double>(r.rows.size());
  };
  std::cout << "loo mean rmse: mtds " << mean_rmse(result.mtds) << ", pooled "
            << mean_rmse(result.pooled) << ", pooled+offsets "
            << mean_rmse(result.pooled_alpha) << "\n";
  return 0;
}

int cmd_kalman_check(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known({"seed", "kalman.state_dim", "kalman.obs_dim", "kalman.length"});
  const int n = cfg.get_int("kalman.state_dim", 3);
  const int m = cfg.get_int("kalman.obs_dim", 2);
  const int T = cfg.get_int("kalman.length", 200);
  Rng rng(cfg.get_u64("seed", 0));

  // Random stable system: scaled random A, diagonally dominant noise.
  StochasticLds sys;
  sys.A = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sys.A(i, j) = 0.5 * rng.normal() / std::sqrt(n);
  }
  sys.A *= 0.9 / std::max(0.9, sys.A.cwiseAbs().rowwise().sum().maxCoeff());
  sys.C = Matrix(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) sys.C(i, j) = rng.normal();
  }
  Matrix root(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) root(i, j) = 0.3 * rng.normal();
  }
  sys.R = root * root.transpose() + 0.1 * Matrix::Identity(n, n);
  sys.S = 0.2 * Matrix::Identity(m, m);

  Matrix Y(T, m);
  Vector x = Vector::Zero(n);
  Eigen::LLT<Matrix> lltR(sys.R);
  for (int t = 0; t < T; ++t) {
    x = sys.A * x + Matrix(lltR.matrixL()) * rng.normal_vector(n);
    for (int j = 0; j < m; ++j) {
      Y(t, j) = (sys.C.row(j) * x)(0) + std::sqrt(0.2) * rng.normal();
    }
  }

  const SteadyState steady = kalman_steady_state(sys);
  const SteadyStatePredictor pred = to_deterministic_predictor(sys, steady);
  const KalmanResult kf =
      kalman_filter(sys, Y, Vector::Zero(n), steady.P_filt);
  const Vector det_ll = steady_predictor_loglik(sys, pred, Y, Vector::Zero(n));
  const double gap = (kf.step_loglik - det_ll).cwiseAbs().maxCoeff();

  std::ofstream f(out_path(args, "kalman_check.csv"));
  f << "t,kalman_loglik,steady_loglik\n";
  for (int t = 0; t < T; ++t) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", t, kf.step_loglik[t],
                  det_ll[t]);
    f << buf;
  }
  std::cout << "riccati iterations " << steady.iterations
            << ", max per-step loglik gap " << gap << "\n";
  if (!(gap < 1e-8)) {
    throw NumericError("kalman-check: steady-state equivalence failed");
  }
  return 0;
}

int cmd_grad_check(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  cfg.require_known(concat({kModelKeys,
                            {"seed", "grad.length", "grad.latent_dim",
                             "model.input_dim", "model.output_dim"}}));
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const int T = cfg.get_int("grad.length", 12);
  const int k = cfg.get_int("grad.latent_dim", 2);
  const int n_u = cfg.get_int("model.input_dim", 1);
  const int n_y = cfg.get_int("model.output_dim", 2);
  const std::string kind = cfg.get_string("model.kind", "pd");
  std::vector<int> dims = default_dims(kind, cfg, n_u, n_y);
  if (kind == "mtrnn") {
    dims = {cfg.get_int("model.first_layer_dim", 6),
            cfg.get_int("model.bottleneck_dim", 3),
            cfg.get_int("model.second_layer_dim", 4), n_u, n_y};
  }
  const auto model = make_model(kind, dims);
  Rng rng(seed);

  ParamGenerator gen;
  gen.constraints = model->constraints();
  gen.b = model->default_raw_offset(rng);
  gen.W = Matrix(model->param_dim(), k);
  for (int r = 0; r < model->param_dim(); ++r) {
    for (int c = 0; c < k; ++c) gen.W(r, c) = 0.2 * rng.normal();
  }
  const Vector shared = model->default_shared(rng);
  const Vector z = rng.normal_vector(k);
  const Vector log_nu = Vector::Constant(model->output_dim(), 0.3);

  SequenceRecord rec;
  rec.seq_id = "probe";
  rec.U = Matrix(T, model->input_dim());
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < model->input_dim(); ++c) rec.U(t, c) = rng.normal();
  }
  const Vector theta = apply_param_generator(gen, z);
  rec.Y = model->simulate(theta, shared, rec.U);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < model->output_dim(); ++j) rec.Y(t, j) += 0.3 * rng.normal();
  }
  rec.mask = MaskMatrix::Constant(T, model->output_dim(), true);
  rec.mask(T / 2, 0) = false;  // exercise the missing-data path

  const GradientBundle g =
      loglik_with_gradients(*model, gen, z, shared, rec, log_nu);
  double worst = 0.0;
  const auto report = [&](const std::string& name, double err) {
    std::cout << "d/d" << name << " max rel err " << err << "\n";
    worst = std::max(worst, err);
  };
  report("z", finite_diff_check(
                  [&](const Vector& v) {
                    return loglik_with_gradients(*model, gen, v, shared, rec,
                                                 log_nu)
                        .value;
                  },
                  g.d_z, z));
  {
    const Vector b0 = gen.b;
    ParamGenerator tmp = gen;
    report("b", finite_diff_check(
                    [&](const Vector& v) {
                      tmp.b = v;
                      return loglik_with_gradients(*model, tmp, z, shared, rec,
                                                   log_nu)
                          .value;
                    },
                    g.d_b, b0));
  }
  if (model->shared_dim() > 0) {
    report("shared", finite_diff_check(
                         [&](const Vector& v) {
                           return loglik_with_gradients(*model, gen, z, v, rec,
                                                        log_nu)
                               .value;
                         },
                         g.d_shared, shared));
  }
  report("log_nu", finite_diff_check(
                       [&](const Vector& v) {
                         return loglik_with_gradients(*model, gen, z, shared,
                                                      rec, v)
                             .value;
                       },
                       g.d_log_nu, log_nu));
  if (!(worst < 1e-4)) {
    throw NumericError("grad-check: finite differences disagree");
  }
  std::cout << "gradient check passed (worst " << worst << ")\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  static const char* kName = "mtds";
  argv.push_back(kName);
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"multi-task dynamical system toolkit"};
  app.require_subcommand(1);

  CommonArgs synth_args, train_args, filter_args, forecast_args, eval_args,
      loo_args, kalman_args, grad_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, &synth_args);
  auto* train = app.add_subcommand("train", "variational training");
  add_common(train, &train_args);
  auto* filter = app.add_subcommand("filter", "sequential latent inference");
  add_common(filter, &filter_args);
  auto* forecast = app.add_subcommand("forecast", "posterior predictive forecasts");
  add_common(forecast, &forecast_args);
  auto* eval = app.add_subcommand("eval", "windowed forecast evaluation");
  add_common(eval, &eval_args);
  auto* loo = app.add_subcommand("loo", "leave-one-sequence-out comparison");
  add_common(loo, &loo_args);
  auto* kalman = app.add_subcommand("kalman-check",
                                    "steady-state filter equivalence demo");
  add_common(kalman, &kalman_args);
  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient check");
  add_common(grad, &grad_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train->parsed()) return cmd_train(train_args);
    if (filter->parsed()) return cmd_filter(filter_args);
    if (forecast->parsed()) return cmd_forecast(forecast_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (loo->parsed()) return cmd_loo(loo_args);
    if (kalman->parsed()) return cmd_kalman_check(kalman_args);
    if (grad->parsed()) return cmd_grad_check(grad_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mtdskit
