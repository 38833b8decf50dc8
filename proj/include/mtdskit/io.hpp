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

#ifndef MTDSKIT_IO_HPP
#define MTDSKIT_IO_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mtdskit/adais.hpp"
#include "mtdskit/baselines.hpp"
#include "mtdskit/model.hpp"
#include "mtdskit/synthetic.hpp"

namespace mtdskit {

/// Flat "key = value" configuration with '#' comments and dotted keys.
/// Parsing is total: any malformed input raises ConfigError, never crashes.
class RunConfig {
 public:
  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_string(const std::string& text);

  /// Applies a single "key=value" override (the --set form).
  void set_override(const std::string& assignment);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::vector<std::string> keys() const;

  /// Throws ConfigError when a key outside `known` is present.
  void require_known(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Sequence CSV: header "seq_id,t,u0..,y0..", one row per time step, t
/// contiguous from 0 within each sequence. Empty y cells mark missing
/// observations. Floats are written as %.17g so round trips are bit exact.
SequenceDataset load_sequences_csv(const std::string& path);
void write_sequences_csv(const std::string& path, const SequenceDataset& data);

/// Ground-truth CSV for synthetic data: "seq_id,z_0..,theta_0..".
void write_truth_csv(const std::string& path,
                     const std::vector<std::string>& seq_ids,
                     const SyntheticTruth& truth);

/// Filtered posterior dump: one row per (step, component) with the posterior
/// mean and the row-major lower Cholesky factor of the component covariance.
/// Header: "t,component,weight,mu_0..,chol_0_0..chol_{k-1}_{k-1}".
void write_posteriors_csv(const std::string& path,
                          const std::vector<FilterStep>& steps);

struct ForecastBlock {
  std::string seq_id;
  int anchor = 0;
  PredictiveSummary summary;
};

/// Forecast CSV: "seq_id,t,channel,mean,q05,q95" with t the absolute row
/// index within the sequence.
void write_forecast_csv(const std::string& path,
                        const std::vector<ForecastBlock>& blocks);

/// Evaluation CSV: "fold,seq_id,anchor,horizon,channel,rmse[,srmse]".
/// Aggregate rows (seq_id "ALL", fold -1) follow the per-sequence rows when
/// requested.
void write_eval_csv(const std::string& path, const EvalReport& report,
                    bool with_srmse, bool with_aggregates);

/// Serialized model: text header "mtdskit-v1 <kind> k=<k> d=<d>" followed by
/// labelled %.17g blocks (dims, constraints, W, b, shared, log_nu). Loading
/// a saved artifact reproduces every double bit for bit.
struct ModelArtifact {
  std::string kind;
  std::vector<int> dims;  // constructor arguments for the base model
  ParamGenerator gen;
  Vector shared;
  Vector log_nu;
};

/// dims conventions: lds {n_x, n_u, n_y}, pd {n_y},
/// mtrnn {n1, bottleneck, n2, n_u, n_y}.
std::unique_ptr<BaseModel> make_model(const std::string& kind,
                                      const std::vector<int>& dims);

/// Default dims for a kind given the dataset channel counts.
std::vector<int> default_dims(const std::string& kind, const RunConfig& config,
                              int n_u, int n_y);

void save_artifact(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::string& path);

}  // namespace mtdskit

#endif  // MTDSKIT_IO_HPP
