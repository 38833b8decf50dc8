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

#ifndef MTDSKIT_SYNTHETIC_HPP
#define MTDSKIT_SYNTHETIC_HPP

#include <memory>
#include <utility>

#include "mtdskit/lds.hpp"
#include "mtdskit/model.hpp"
#include "mtdskit/mtrnn.hpp"
#include "mtdskit/pd.hpp"

namespace mtdskit {

/// Piecewise-constant input schedules. Sequences alternate between a
/// high-low-high and a low-high-low segment pattern, with per-sequence level
/// jitter, so different inputs excite different parts of the response.
struct InputSchedule {
  int n_segments = 3;
  double low = 0.0;
  double high = 1.0;
  double jitter_sd = 0.0;

  Matrix generate(int length, int n_u, bool start_high, Rng& rng) const;
};

/// Ground-truth family used to synthesize a dataset: a generator around a
/// base model plus noise levels and the input schedule.
struct SyntheticFamily {
  ParamGenerator generator;
  Vector shared;      // empty unless the model has shared parameters
  Vector nu;          // per-channel noise precision
  InputSchedule inputs;
  int n_sequences = 8;
  int length = 60;
  double missing_rate = 0.0;  // per-entry probability of dropping y
};

struct SyntheticTruth {
  std::vector<Vector> z;      // latent code per sequence
  std::vector<Vector> theta;  // realized parameters per sequence
};

/// Draws z ~ N(0, I) per sequence, realizes theta through the generator,
/// simulates the model and adds N(0, 1/nu) observation noise.
std::pair<SequenceDataset, SyntheticTruth> generate_synthetic(
    const BaseModel& model, const SyntheticFamily& family, std::uint64_t seed);

/// Canonical toy family around the pharmacodynamic model: the requested
/// number of latent dimensions modulate, in order, the channel offsets, the
/// elimination rates and the response-curve heights. Extra dimensions get
/// small mixed loadings.
SyntheticFamily default_pd_family(const PdModel& model, int latent_dim);

/// Toy family around the linear model: dimension 0 scales the emission map,
/// dimension 1 shifts the rotation speed of the first block, further
/// dimensions perturb the input map.
SyntheticFamily default_lds_family(const DeterministicLds& model,
                                   int latent_dim);

/// Toy family around the two-layer recurrent model: random second-layer
/// offsets with latent loadings on the read-out rows.
SyntheticFamily default_mtrnn_family(const MtRnn& model, int latent_dim,
                                     std::uint64_t seed);

}  // namespace mtdskit

#endif  // MTDSKIT_SYNTHETIC_HPP
