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

#include "mtdskit/io.hpp"

using namespace mtdskit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "mtdskit_io_test") {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("config parsing: comments, dotted keys, and typed access") {
  const RunConfig cfg = RunConfig::parse_string(
      "# heading comment\n"
      "\n"
      "train.iters = 500   # trailing comment\n"
      "  adais.particles=4000\n"
      "model.kind = pd\n"
      "forecast.quantiles = 0.05\n"
      "seed = 18446744073709551615\n"
      "verbose = Yes\n");
  CHECK(cfg.has("train.iters"));
  CHECK_FALSE(cfg.has("missing"));
  CHECK(cfg.get_int("train.iters", -1) == 500);
  CHECK(cfg.get_int("adais.particles", -1) == 4000);
  CHECK(cfg.get_string("model.kind", "?") == "pd");
  CHECK(cfg.get_double("forecast.quantiles", 0.0) == 0.05);
  CHECK(cfg.get_u64("seed", 0) == 18446744073709551615ull);
  CHECK(cfg.get_bool("verbose", false));
  // Fallbacks only apply to absent keys.
  CHECK(cfg.get_int("absent", 7) == 7);
  CHECK(cfg.get_bool("absent", true));
  CHECK(cfg.keys().size() == 6);
}

TEST_CASE("config parsing is total: malformed input raises, never crashes") {
  CHECK_THROWS_AS(RunConfig::parse_string("just words\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_string("key =\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_string("= value\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_string("bad key! = 1\n"), ConfigError);

  const RunConfig cfg = RunConfig::parse_string("n = 12x\nf = 1.5\nb = maybe\n");
  CHECK_THROWS_AS(cfg.get_int("n", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("f", 0), ConfigError);  // no silent truncation
  CHECK_THROWS_AS(cfg.get_bool("b", false), ConfigError);
  CHECK_THROWS_AS(cfg.get_u64("f", 0), ConfigError);

  CHECK_THROWS_AS(RunConfig::parse_file("/no/such/config.cfg"), ConfigError);
}

TEST_CASE("config overrides and key whitelisting") {
  RunConfig cfg = RunConfig::parse_string("a.x = 1\na.y = 2\n");
  cfg.set_override("a.x=10");
  CHECK(cfg.get_int("a.x", -1) == 10);
  cfg.set_override("a.z = 3");
  CHECK(cfg.get_int("a.z", -1) == 3);
  CHECK_THROWS_AS(cfg.set_override("novalue"), ConfigError);
  CHECK_THROWS_AS(cfg.set_override("key="), ConfigError);

  cfg.require_known({"a.x", "a.y", "a.z"});
  CHECK_THROWS_AS(cfg.require_known({"a.x", "a.y"}), ConfigError);
}

TEST_CASE("sequence CSV round trip is bit exact including missing cells") {
  TempDir tmp;
  SequenceDataset data;
  SequenceRecord r1;
  r1.seq_id = "alpha";
  r1.U = Matrix(3, 2);
  r1.U << 0.1, -1.0 / 3.0, 2.5e-8, 1e300, M_PI, 0.0;
  r1.Y = Matrix(3, 2);
  r1.Y << 0.1 + 0.2, -0.0, 1.0, 2.0, 3.0, 4.0;
  r1.mask = MaskMatrix::Constant(3, 2, true);
  r1.mask(1, 0) = false;  // this Y cell must round trip as missing
  SequenceRecord r2;
  r2.seq_id = "beta";
  r2.U = Matrix::Constant(4, 2, 0.25);
  r2.Y = Matrix::Constant(4, 2, -7.125);
  r2.mask = MaskMatrix::Constant(4, 2, true);
  data.sequences = {r1, r2};

  const std::string path = tmp.file("seq.csv");
  write_sequences_csv(path, data);
  const SequenceDataset back = load_sequences_csv(path);

  REQUIRE(back.size() == 2);
  CHECK(back.sequences[0].seq_id == "alpha");
  CHECK(back.sequences[1].length() == 4);
  for (int s = 0; s < 2; ++s) {
    const auto& a = data.sequences[static_cast<std::size_t>(s)];
    const auto& b = back.sequences[static_cast<std::size_t>(s)];
    REQUIRE(b.U.rows() == a.U.rows());
    for (int t = 0; t < a.length(); ++t) {
      for (int c = 0; c < 2; ++c) {
        CHECK(b.U(t, c) == a.U(t, c));  // bitwise
        CHECK(b.mask(t, c) == a.mask(t, c));
        if (a.mask(t, c)) CHECK(b.Y(t, c) == a.Y(t, c));
      }
    }
  }
  // The negative-zero sign survives the text round trip.
  CHECK(std::signbit(back.sequences[0].Y(0, 1)));

  // Writing again from the loaded copy reproduces the file byte for byte.
  const std::string path2 = tmp.file("seq2.csv");
  write_sequences_csv(path2, back);
  CHECK(slurp(path) == slurp(path2));

  SequenceDataset bad = data;
  bad.sequences[0].seq_id = "a,b";
  CHECK_THROWS_AS(write_sequences_csv(tmp.file("x.csv"), bad), DataError);
}

TEST_CASE("sequence CSV rejects structural damage with clear errors") {
  TempDir tmp;
  const std::string p = tmp.file("bad.csv");

  spit(p, "");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);

  spit(p, "seq,t,u0,y0\na,0,1,2\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // header must say seq_id

  spit(p, "seq_id,t,y0\na,0,2\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // inputs are mandatory

  spit(p, "seq_id,t,u0,y0\na,1,1,2\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // t must start at 0

  spit(p, "seq_id,t,u0,y0\na,0,1,2\na,2,1,2\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // t must be contiguous

  spit(p, "seq_id,t,u0,y0\na,0,1\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // cell count

  spit(p, "seq_id,t,u0,y0\na,0,,2\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // empty input cell

  spit(p, "seq_id,t,u0,y0\na,0,oops,2\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // non-numeric

  spit(p, "seq_id,t,u0,y0\n");
  CHECK_THROWS_AS(load_sequences_csv(p), DataError);  // no rows

  CHECK_THROWS_AS(load_sequences_csv(tmp.file("absent.csv")), DataError);

  // Missing outputs are fine: an empty y cell means unobserved.
  spit(p, "seq_id,t,u0,y0\na,0,1,\na,1,1,2\n");
  const SequenceDataset ok = load_sequences_csv(p);
  CHECK_FALSE(ok.sequences[0].mask(0, 0));
  CHECK(ok.sequences[0].mask(1, 0));
}

TEST_CASE("ground-truth table layout") {
  TempDir tmp;
  SyntheticTruth truth;
  truth.z = {Vector::Constant(1, 0.5), Vector::Constant(1, -1.5)};
  truth.theta = {Vector::Constant(2, 2.0), Vector::Constant(2, 3.0)};
  const std::string p = tmp.file("truth.csv");
  write_truth_csv(p, {"a", "b"}, truth);
  CHECK(slurp(p) ==
        "seq_id,z_0,theta_0,theta_1\n"
        "a,0.5,2,2\n"
        "b,-1.5,3,3\n");
  CHECK_THROWS_AS(write_truth_csv(p, {"a"}, truth), DimensionError);
}

TEST_CASE("posterior table stores the lower Cholesky factor") {
  TempDir tmp;
  FilterStep step;
  step.t = 5;
  step.posterior.weights = Vector::Constant(1, 1.0);
  step.posterior.means = {Vector(2)};
  step.posterior.means[0] << 0.5, -1.5;
  Matrix cov(2, 2);
  cov << 4.0, 2.0, 2.0, 3.0;  // L = [[2, 0], [1, sqrt(2)]]
  step.posterior.covs = {cov};
  const std::string p = tmp.file("post.csv");
  write_posteriors_csv(p, {step});
  CHECK(slurp(p) ==
        "t,component,weight,mu_0,mu_1,chol_0_0,chol_0_1,chol_1_0,chol_1_1\n"
        "5,0,1,0.5,-1.5,2,0,1,1.4142135623730951\n");

  step.posterior.covs[0](0, 0) = -1.0;
  step.posterior.covs[0](1, 1) = -1.0;
  CHECK_THROWS_AS(write_posteriors_csv(p, {step}), NumericError);
}

TEST_CASE("forecast table uses absolute time indices") {
  TempDir tmp;
  ForecastBlock block;
  block.seq_id = "s";
  block.anchor = 3;
  block.summary.mean = Matrix(2, 1);
  block.summary.mean << 1.5, 2.5;
  block.summary.q05 = Matrix(2, 1);
  block.summary.q05 << 1.0, 2.0;
  block.summary.q95 = Matrix(2, 1);
  block.summary.q95 << 2.0, 3.0;
  const std::string p = tmp.file("fc.csv");
  write_forecast_csv(p, {block});
  CHECK(slurp(p) ==
        "seq_id,t,channel,mean,q05,q95\n"
        "s,3,0,1.5,1,2\n"
        "s,4,0,2.5,2,3\n");
}

TEST_CASE("evaluation table with optional standardized column and aggregates") {
  TempDir tmp;
  EvalReport report;
  report.rows = {EvalRow{0, "a", 4, 2, 0, 1.5, 0.75},
                 EvalRow{1, "b", 4, 2, 0, 2.5, 1.25}};
  const std::string p = tmp.file("eval.csv");

  write_eval_csv(p, report, false, false);
  CHECK(slurp(p) ==
        "fold,seq_id,anchor,horizon,channel,rmse\n"
        "0,a,4,2,0,1.5\n"
        "1,b,4,2,0,2.5\n");

  write_eval_csv(p, report, true, true);
  CHECK(slurp(p) ==
        "fold,seq_id,anchor,horizon,channel,rmse,srmse\n"
        "0,a,4,2,0,1.5,0.75\n"
        "1,b,4,2,0,2.5,1.25\n"
        "-1,ALL,4,2,0,2,1\n");
}

TEST_CASE("model construction from kind strings") {
  const auto lds = make_model("lds", {2, 1, 2});
  CHECK(lds->param_dim() == 2 + 2 * 1 + 2 * 2 + 2);
  const auto pd = make_model("pd", {3});
  CHECK(pd->output_dim() == 3);
  const auto rnn = make_model("mtrnn", {6, 3, 4, 2, 2});
  CHECK(rnn->shared_dim() > 0);
  CHECK_THROWS_AS(make_model("lds", {2}), DataError);
  CHECK_THROWS_AS(make_model("vae", {1}), DataError);

  const RunConfig cfg = RunConfig::parse_string("model.state_dim = 6\n");
  CHECK(default_dims("lds", cfg, 3, 2) == std::vector<int>{6, 3, 2});
  CHECK(default_dims("pd", cfg, 1, 4) == std::vector<int>{4});
  const auto rnn_dims = default_dims("mtrnn", RunConfig::parse_string(""), 2, 3);
  CHECK(rnn_dims == std::vector<int>{32, 8, 16, 2, 3});
  CHECK_THROWS_AS(default_dims("vae", cfg, 1, 1), ConfigError);
}

TEST_CASE("artifact round trip reproduces every double bit for bit") {
  TempDir tmp;
  Rng rng(12);
  ModelArtifact art;
  art.kind = "lds";
  art.dims = {2, 1, 2};
  const auto model = make_model(art.kind, art.dims);
  const int d = model->param_dim();
  art.gen.constraints = model->constraints();
  art.gen.b = Vector(d);
  for (int i = 0; i < d; ++i) art.gen.b[i] = rng.normal();
  art.gen.b[0] = 0.1 + 0.2;   // classic non-representable decimal
  art.gen.b[1] = -0.0;        // sign must survive
  art.gen.b[2] = 1e-300;
  art.gen.W = Matrix(d, 2);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < 2; ++c) art.gen.W(r, c) = rng.normal() * 1e-3;
  }
  art.shared = Vector(0);
  art.log_nu = Vector(2);
  art.log_nu << std::log(7.3), -0.25;

  const std::string p = tmp.file("model.mtds");
  save_artifact(p, art);
  const ModelArtifact back = load_artifact(p);

  CHECK(back.kind == art.kind);
  CHECK(back.dims == art.dims);
  REQUIRE(back.gen.constraints.size() == art.gen.constraints.size());
  for (std::size_t i = 0; i < art.gen.constraints.size(); ++i) {
    CHECK(back.gen.constraints[i] == art.gen.constraints[i]);
  }
  CHECK((back.gen.W - art.gen.W).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < d; ++i) CHECK(back.gen.b[i] == art.gen.b[i]);
  CHECK(std::signbit(back.gen.b[1]));
  CHECK(back.shared.size() == 0);
  CHECK(back.log_nu[0] == art.log_nu[0]);

  // Saving the loaded artifact reproduces the file exactly.
  const std::string p2 = tmp.file("model2.mtds");
  save_artifact(p2, back);
  CHECK(slurp(p) == slurp(p2));
}

TEST_CASE("artifact loading rejects corruption") {
  TempDir tmp;
  ModelArtifact art;
  art.kind = "pd";
  art.dims = {1};
  const auto model = make_model(art.kind, art.dims);
  Rng rng(3);
  art.gen.constraints = model->constraints();
  art.gen.b = model->default_raw_offset(rng);
  art.gen.W = Matrix::Zero(model->param_dim(), 1);
  art.shared = Vector(0);
  art.log_nu = Vector::Zero(1);
  const std::string p = tmp.file("ok.mtds");
  save_artifact(p, art);
  load_artifact(p);  // sanity: the pristine file loads

  const std::string text = slurp(p);

  const std::string bad_magic = tmp.file("magic.mtds");
  spit(bad_magic, "other-v9" + text.substr(text.find(' ')));
  CHECK_THROWS_AS(load_artifact(bad_magic), DataError);

  const std::string truncated = tmp.file("trunc.mtds");
  spit(truncated, text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_artifact(truncated), DataError);

  // Channel count disagreeing with the model dims.
  const std::string mangled = tmp.file("mangled.mtds");
  std::string t2 = text;
  t2.replace(t2.find("log_nu 1"), 8, "log_nu 0");
  // Drop the trailing value so the block stays well formed.
  t2 = t2.substr(0, t2.rfind('\n', t2.size() - 2) + 1);
  spit(mangled, t2);
  CHECK_THROWS_AS(load_artifact(mangled), DataError);

  CHECK_THROWS_AS(load_artifact(tmp.file("missing.mtds")), DataError);
}
