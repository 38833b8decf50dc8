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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <utility>

#include "mtdskit/adais.hpp"
#include "mtdskit/io.hpp"
#include "mtdskit/learning.hpp"
#include "mtdskit/lds.hpp"
#include "mtdskit/mtrnn.hpp"
#include "mtdskit/pd.hpp"
#include "mtdskit/synthetic.hpp"

namespace py = pybind11;
using namespace mtdskit;

namespace {

// Family synthesis for python callers: model construction, ground-truth
// family selection and simulation behind one call.
std::tuple<SequenceDataset, std::vector<Vector>, std::vector<Vector>>
synthesize(const std::string& kind, const std::vector<int>& dims,
           int latent_dim, int n_sequences, int length, double missing_rate,
           std::uint64_t seed) {
  auto model = make_model(kind, dims);
  SyntheticFamily family;
  if (const auto* pd = dynamic_cast<const PdModel*>(model.get())) {
    family = default_pd_family(*pd, latent_dim);
  } else if (const auto* lds = dynamic_cast<const DeterministicLds*>(model.get())) {
    family = default_lds_family(*lds, latent_dim);
  } else if (const auto* rnn = dynamic_cast<const MtRnn*>(model.get())) {
    family = default_mtrnn_family(*rnn, latent_dim, seed);
  } else {
    throw ConfigError("no synthetic family for kind '" + kind + "'");
  }
  family.n_sequences = n_sequences;
  family.length = length;
  family.missing_rate = missing_rate;
  auto [data, truth] = generate_synthetic(*model, family, seed);
  return {std::move(data), std::move(truth.z), std::move(truth.theta)};
}

}  // namespace

PYBIND11_MODULE(_mtdskit, m) {
  m.doc() = "Multi-task dynamical systems: shared-manifold models, "
            "variational training and sequential importance-sampling "
            "posterior inference.";

  py::enum_<Constraint>(m, "Constraint")
      .value("identity", Constraint::kIdentity)
      .value("logistic", Constraint::kLogistic)
      .value("softplus", Constraint::kSoftplus);

  py::class_<SequenceRecord>(m, "SequenceRecord")
      .def(py::init<>())
      .def_readwrite("seq_id", &SequenceRecord::seq_id)
      .def_readwrite("U", &SequenceRecord::U)
      .def_readwrite("Y", &SequenceRecord::Y)
      .def_readwrite("mask", &SequenceRecord::mask)
      .def("length", &SequenceRecord::length)
      .def("prefix", &SequenceRecord::prefix)
      .def("validate", &SequenceRecord::validate);

  py::class_<SequenceDataset>(m, "SequenceDataset")
      .def(py::init<>())
      .def_readwrite("sequences", &SequenceDataset::sequences)
      .def("size", &SequenceDataset::size)
      .def("by_id", &SequenceDataset::by_id,
           py::return_value_policy::reference_internal)
      .def("validate", &SequenceDataset::validate);

  py::class_<ParamGenerator>(m, "ParamGenerator")
      .def(py::init<>())
      .def_readwrite("W", &ParamGenerator::W)
      .def_readwrite("b", &ParamGenerator::b)
      .def_readwrite("constraints", &ParamGenerator::constraints)
      .def("latent_dim", &ParamGenerator::latent_dim)
      .def("param_dim", &ParamGenerator::param_dim);

  m.def("apply_param_generator", &apply_param_generator,
        "theta = f(W z + b) with the generator's elementwise links.");
  m.def("default_params", &default_params, "theta at z = 0.");

  py::class_<VariationalPosterior>(m, "VariationalPosterior")
      .def(py::init<>())
      .def_readwrite("mu", &VariationalPosterior::mu)
      .def_readwrite("log_s", &VariationalPosterior::log_s);

  py::class_<BaseModel>(m, "BaseModel")
      .def("kind", &BaseModel::kind)
      .def("param_dim", &BaseModel::param_dim)
      .def("shared_dim", &BaseModel::shared_dim)
      .def("input_dim", &BaseModel::input_dim)
      .def("output_dim", &BaseModel::output_dim)
      .def("constraints", &BaseModel::constraints)
      .def("simulate", &BaseModel::simulate, py::arg("theta"),
           py::arg("shared"), py::arg("U"))
      .def("default_raw_offset",
           [](const BaseModel& model, std::uint64_t seed) {
             Rng rng(seed);
             return model.default_raw_offset(rng);
           },
           py::arg("seed") = 0)
      .def("default_shared",
           [](const BaseModel& model, std::uint64_t seed) {
             Rng rng(seed);
             return model.default_shared(rng);
           },
           py::arg("seed") = 0);

  m.def("make_model", &make_model, py::arg("kind"), py::arg("dims"),
        "Construct a base model: lds {n_x, n_u, n_y}, pd {n_y}, "
        "mtrnn {n1, bottleneck, n2, n_u, n_y}.");

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("n_iters", &TrainConfig::n_iters)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr_main", &TrainConfig::lr_main)
      .def_readwrite("lr_mt", &TrainConfig::lr_mt)
      .def_readwrite("l2_main", &TrainConfig::l2_main)
      .def_readwrite("l2_mt", &TrainConfig::l2_mt)
      .def_readwrite("kl_warmup_iters", &TrainConfig::kl_warmup_iters)
      .def_readwrite("n_mc_samples", &TrainConfig::n_mc_samples)
      .def_readwrite("latent_dim", &TrainConfig::latent_dim)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("segment_len", &TrainConfig::segment_len)
      .def_readwrite("freeze_loading", &TrainConfig::freeze_loading)
      .def_readwrite("freeze_rows", &TrainConfig::freeze_rows)
      .def_readwrite("log_path", &TrainConfig::log_path)
      .def_readwrite("log_interval", &TrainConfig::log_interval);

  py::class_<TrainLogEntry>(m, "TrainLogEntry")
      .def_readonly("iter", &TrainLogEntry::iter)
      .def_readonly("elbo", &TrainLogEntry::elbo)
      .def_readonly("kl_weight", &TrainLogEntry::kl_weight)
      .def_readonly("wallclock_ms", &TrainLogEntry::wallclock_ms);

  py::class_<TrainState>(m, "TrainState")
      .def_readonly("gen", &TrainState::gen)
      .def_readonly("shared", &TrainState::shared)
      .def_readonly("log_nu", &TrainState::log_nu)
      .def_readonly("seq_ids", &TrainState::seq_ids)
      .def_readonly("posteriors", &TrainState::posteriors)
      .def_readonly("log", &TrainState::log)
      .def("posterior_for", &TrainState::posterior_for,
           py::return_value_policy::reference_internal);

  m.def("train", &train, py::arg("model"), py::arg("data"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Variational training of the generator, shared parameters and noise.");

  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init<>())
      .def_static("standard_normal", &GaussianMixture::standard_normal)
      .def_readwrite("weights", &GaussianMixture::weights)
      .def_readwrite("means", &GaussianMixture::means)
      .def_readwrite("covs", &GaussianMixture::covs)
      .def("components", &GaussianMixture::components)
      .def("dim", &GaussianMixture::dim)
      .def("logpdf",
           [](const GaussianMixture& q, const Vector& z) {
             return gmm_logpdf(q, z);
           });

  py::class_<AdaIsConfig>(m, "AdaIsConfig")
      .def(py::init<>())
      .def_readwrite("n_particles", &AdaIsConfig::n_particles)
      .def_readwrite("ess_threshold", &AdaIsConfig::ess_threshold)
      .def_readwrite("max_adaptations", &AdaIsConfig::max_adaptations)
      .def_readwrite("n_components", &AdaIsConfig::n_components)
      .def_readwrite("em_iters", &AdaIsConfig::em_iters)
      .def_readwrite("cov_floor", &AdaIsConfig::cov_floor)
      .def_readwrite("thinning", &AdaIsConfig::thinning)
      .def_readwrite("quasi_random", &AdaIsConfig::quasi_random)
      .def_readwrite("seed", &AdaIsConfig::seed);

  py::class_<FilterStep>(m, "FilterStep")
      .def_readonly("t", &FilterStep::t)
      .def_readonly("posterior", &FilterStep::posterior)
      .def_readonly("ess", &FilterStep::ess)
      .def_readonly("adaptations", &FilterStep::adaptations)
      .def_readonly("reached_threshold", &FilterStep::reached_threshold)
      .def_readonly("rescued", &FilterStep::rescued);

  m.def("sequential_filter", &sequential_filter, py::arg("model"),
        py::arg("gen"), py::arg("shared"), py::arg("log_nu"), py::arg("record"),
        py::arg("config"), py::call_guard<py::gil_scoped_release>(),
        "Sequential latent posterior inference over a sequence.");

  py::class_<PredictiveSummary>(m, "PredictiveSummary")
      .def_readonly("mean", &PredictiveSummary::mean)
      .def_readonly("q05", &PredictiveSummary::q05)
      .def_readonly("q95", &PredictiveSummary::q95)
      .def_readonly("sample_paths", &PredictiveSummary::sample_paths);

  m.def("posterior_predictive",
        [](const BaseModel& model, const ParamGenerator& gen,
           const Vector& shared, const Vector& log_nu,
           const GaussianMixture& posterior, const Matrix& U_prefix,
           const Matrix& U_future, int n_samples, std::uint64_t seed) {
          Rng rng(seed);
          py::gil_scoped_release release;
          return posterior_predictive(model, gen, shared, log_nu, posterior,
                                      U_prefix, U_future, n_samples, rng);
        },
        py::arg("model"), py::arg("gen"), py::arg("shared"), py::arg("log_nu"),
        py::arg("posterior"), py::arg("U_prefix"), py::arg("U_future"),
        py::arg("n_samples") = 400, py::arg("seed") = 0,
        "Forecast summary (mean, 5%/95% bands, sample paths) over a future "
        "input window.");

  py::class_<ModelArtifact>(m, "ModelArtifact")
      .def(py::init<>())
      .def_readwrite("kind", &ModelArtifact::kind)
      .def_readwrite("dims", &ModelArtifact::dims)
      .def_readwrite("gen", &ModelArtifact::gen)
      .def_readwrite("shared", &ModelArtifact::shared)
      .def_readwrite("log_nu", &ModelArtifact::log_nu);

  m.def("save_artifact", &save_artifact, py::arg("path"), py::arg("artifact"));
  m.def("load_artifact", &load_artifact, py::arg("path"));

  m.def("load_sequences_csv", &load_sequences_csv, py::arg("path"));
  m.def("write_sequences_csv", &write_sequences_csv, py::arg("path"),
        py::arg("data"));

  m.def("synthesize", &synthesize, py::arg("kind"), py::arg("dims"),
        py::arg("latent_dim") = 2, py::arg("n_sequences") = 8,
        py::arg("length") = 60, py::arg("missing_rate") = 0.0,
        py::arg("seed") = 0,
        "Generate a synthetic dataset from the built-in ground-truth family "
        "for a model kind; returns (dataset, z_list, theta_list).");
}
