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

#include "mtdskit/synthetic.hpp"

#include <cmath>

namespace mtdskit {

Matrix InputSchedule::generate(int length, int n_u, bool start_high,
                               Rng& rng) const {
  if (n_segments < 1) throw ConfigError("input schedule: n_segments >= 1");
  if (length < 1) throw ConfigError("input schedule: length >= 1");
  Matrix U(length, n_u);
  for (int c = 0; c < n_u; ++c) {
    for (int s = 0; s < n_segments; ++s) {
      const bool is_high = ((s % 2 == 0) == start_high);
      double level = is_high ? high : low;
      if (jitter_sd > 0.0) level += jitter_sd * rng.normal();
      const int begin = s * length / n_segments;
      const int end = (s + 1) * length / n_segments;
      for (int t = begin; t < end; ++t) U(t, c) = level;
    }
  }
  return U;
}

std::pair<SequenceDataset, SyntheticTruth> generate_synthetic(
    const BaseModel& model, const SyntheticFamily& family, std::uint64_t seed) {
  family.generator.validate();
  if (family.generator.param_dim() != model.param_dim()) {
    throw DimensionError("synthetic family: generator rows != model params");
  }
  if (family.nu.size() != model.output_dim()) {
    throw DimensionError("synthetic family: nu length != output channels");
  }
  if (family.shared.size() != model.shared_dim()) {
    throw DimensionError("synthetic family: shared length mismatch");
  }
  const int k = family.generator.latent_dim();
  const int n_y = model.output_dim();
  Rng rng(seed);
  SequenceDataset data;
  SyntheticTruth truth;
  for (int i = 0; i < family.n_sequences; ++i) {
    SequenceRecord rec;
    rec.seq_id = "seq" + std::to_string(i);
    rec.U = family.inputs.generate(family.length, model.input_dim(),
                                   /*start_high=*/i % 2 == 0, rng);
    const Vector z = rng.normal_vector(k);
    const Vector theta = apply_param_generator(family.generator, z);
    const Matrix clean = model.simulate(theta, family.shared, rec.U);
    rec.Y.resize(family.length, n_y);
    rec.mask.resize(family.length, n_y);
    for (int t = 0; t < family.length; ++t) {
      for (int j = 0; j < n_y; ++j) {
        const double noise = rng.normal() / std::sqrt(family.nu[j]);
        const bool drop =
            family.missing_rate > 0.0 && rng.uniform() < family.missing_rate;
        rec.mask(t, j) = !drop;
        rec.Y(t, j) = drop ? 0.0 : clean(t, j) + noise;
      }
    }
    truth.z.push_back(z);
    truth.theta.push_back(theta);
    data.sequences.push_back(std::move(rec));
  }
  data.validate();
  return {std::move(data), std::move(truth)};
}

SyntheticFamily default_pd_family(const PdModel& model, int latent_dim) {
  if (latent_dim < 1) throw ConfigError("pd family: latent_dim >= 1");
  const int n_y = model.output_dim();
  SyntheticFamily fam;
  fam.generator.constraints = model.constraints();
  Rng tie_break(0);
  fam.generator.b = model.default_raw_offset(tie_break);
  for (int j = 0; j < n_y; ++j) {
    // Distinct channel baselines and response shapes.
    fam.generator.b[model.alpha_index(j)] = 10.0 + 4.0 * j;
    fam.generator.b[model.beta1_index(j)] = 1.0 + 0.3 * j;
    fam.generator.b[model.beta3_index(j)] = 1.5;
    for (int r = 0; r < PdModel::kBasisSize; ++r) {
      fam.generator.b[model.eta_index(j, r)] = (r % 3 == j % 3) ? 1.2 : -0.5;
    }
  }
  fam.generator.W = Matrix::Zero(model.param_dim(), latent_dim);
  // Dimension 0 shifts every channel offset together.
  for (int j = 0; j < n_y; ++j) fam.generator.W(model.alpha_index(j), 0) = 1.5;
  if (latent_dim >= 2) {
    // Dimension 1 moves elimination rates and curve heights jointly.
    for (int j = 0; j < n_y; ++j) {
      fam.generator.W(model.beta1_index(j), 1) = 0.8;
      for (int r = 0; r < PdModel::kBasisSize; ++r) {
        fam.generator.W(model.eta_index(j, r), 1) = 0.4;
      }
    }
  }
  for (int c = 2; c < latent_dim; ++c) {
    for (int j = 0; j < n_y; ++j) {
      fam.generator.W(model.beta2_index(j), c) = 0.3;
      fam.generator.W(model.beta3_index(j), c) = 0.2;
    }
  }
  fam.shared = Vector(0);
  fam.nu = Vector::Constant(n_y, 4.0);  // noise sd 0.5
  fam.inputs.n_segments = 3;
  fam.inputs.low = 0.2;
  fam.inputs.high = 3.0;
  fam.inputs.jitter_sd = 0.1;
  return fam;
}

SyntheticFamily default_lds_family(const DeterministicLds& model,
                                   int latent_dim) {
  if (latent_dim < 1) throw ConfigError("lds family: latent_dim >= 1");
  const int n_x = model.state_dim();
  const int n_u = model.input_dim();
  const int n_y = model.output_dim();
  SyntheticFamily fam;
  fam.generator.constraints = model.constraints();
  Rng tie_break(0);
  fam.generator.b = model.default_raw_offset(tie_break);
  fam.generator.W = Matrix::Zero(model.param_dim(), latent_dim);
  const int c_off = n_x + n_x * n_u;
  for (int i = 0; i < n_y * n_x; ++i) {
    fam.generator.W(c_off + i, 0) = 0.25;  // emission scale
  }
  if (latent_dim >= 2 && n_x >= 2) {
    fam.generator.W(1, 1) = 0.3;  // rotation speed of the first block
  }
  for (int c = 2; c < latent_dim; ++c) {
    for (int i = 0; i < n_x * n_u; ++i) {
      fam.generator.W(n_x + i, c) = 0.15;
    }
  }
  fam.shared = Vector(0);
  fam.nu = Vector::Constant(n_y, 16.0);  // noise sd 0.25
  fam.inputs.n_segments = 4;
  fam.inputs.low = -1.0;
  fam.inputs.high = 1.0;
  fam.inputs.jitter_sd = 0.2;
  return fam;
}

SyntheticFamily default_mtrnn_family(const MtRnn& model, int latent_dim,
                                     std::uint64_t seed) {
  if (latent_dim < 1) throw ConfigError("mtrnn family: latent_dim >= 1");
  Rng rng(seed);
  SyntheticFamily fam;
  fam.generator.constraints = model.constraints();
  fam.generator.b = model.default_raw_offset(rng);
  fam.generator.W = Matrix::Zero(model.param_dim(), latent_dim);
  const int n2 = model.second_layer_dim();
  const int l = model.bottleneck_dim();
  const int n_y = model.output_dim();
  const int c_off = n2 * n2 + n2 * l;
  for (int c = 0; c < latent_dim; ++c) {
    for (int i = 0; i < n_y * n2; ++i) {
      if (i % latent_dim == c) fam.generator.W(c_off + i, c) = 0.4;
    }
    fam.generator.W(c_off + n_y * n2 + c % n_y, c) += 0.6;  // output offsets
  }
  fam.shared = model.default_shared(rng);
  fam.nu = Vector::Constant(n_y, 16.0);
  fam.inputs.n_segments = 4;
  fam.inputs.low = -1.0;
  fam.inputs.high = 1.0;
  fam.inputs.jitter_sd = 0.2;
  return fam;
}

}  // namespace mtdskit
