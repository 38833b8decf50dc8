# Copyright 2026 The mtdskit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Multi-task dynamical systems toolkit.

A thin wrapper over the C++ core: shared-manifold sequence models,
variational training, sequential importance-sampling posterior inference
and posterior-predictive forecasting.
"""

from ._mtdskit import (
    AdaIsConfig,
    BaseModel,
    Constraint,
    FilterStep,
    GaussianMixture,
    ModelArtifact,
    ParamGenerator,
    PredictiveSummary,
    SequenceDataset,
    SequenceRecord,
    TrainConfig,
    TrainLogEntry,
    TrainState,
    VariationalPosterior,
    apply_param_generator,
    default_params,
    load_artifact,
    load_sequences_csv,
    make_model,
    posterior_predictive,
    save_artifact,
    sequential_filter,
    synthesize,
    train,
    write_sequences_csv,
)

__all__ = [
    "AdaIsConfig",
    "BaseModel",
    "Constraint",
    "FilterStep",
    "GaussianMixture",
    "ModelArtifact",
    "ParamGenerator",
    "PredictiveSummary",
    "SequenceDataset",
    "SequenceRecord",
    "TrainConfig",
    "TrainLogEntry",
    "TrainState",
    "VariationalPosterior",
    "apply_param_generator",
    "default_params",
    "load_artifact",
    "load_sequences_csv",
    "make_model",
    "posterior_predictive",
    "save_artifact",
    "sequential_filter",
    "synthesize",
    "train",
    "write_sequences_csv",
]

__version__ = "0.1.0"
