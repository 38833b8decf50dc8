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

#include "mtdskit/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mtdskit/lds.hpp"
#include "mtdskit/mtrnn.hpp"
#include "mtdskit/pd.hpp"

namespace mtdskit {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError("cannot parse number '" + s + "' in " + what);
  }
}

long parse_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError("cannot parse integer '" + s + "' in " + what);
  }
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') {
      return false;
    }
  }
  return true;
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << f.rdbuf();
  return parse_string(buffer.str());
}

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": bad key '" + key + "'");
    }
    if (value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": missing value for '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

void RunConfig::set_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (!valid_key(key) || value.empty()) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      it->second + "'");
  }
}

int RunConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      it->second + "'");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key +
                      "': expected a non-negative integer, got '" + it->second +
                      "'");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" +
                    it->second + "'");
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

void RunConfig::require_known(const std::vector<std::string>& known) const {
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
}

SequenceDataset load_sequences_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open sequence file: " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split(trim(line), ',');
  if (header.size() < 3 || header[0] != "seq_id" || header[1] != "t") {
    throw DataError(path + ": header must start with seq_id,t");
  }
  int n_u = 0;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "u" + std::to_string(n_u)) {
    ++n_u;
    ++col;
  }
  int n_y = 0;
  while (col < header.size() && header[col] == "y" + std::to_string(n_y)) {
    ++n_y;
    ++col;
  }
  if (col != header.size() || n_u == 0 || n_y == 0) {
    throw DataError(path + ": header must be seq_id,t,u0..,y0..");
  }

  SequenceDataset data;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<Vector>> u_rows;
  std::vector<std::vector<Vector>> y_rows;
  std::vector<std::vector<std::vector<bool>>> m_rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw DataError(path + " line " + std::to_string(lineno) +
                      ": wrong cell count");
    }
    const std::string where = path + " line " + std::to_string(lineno);
    const std::string seq_id = cells[0];
    if (seq_id.empty()) throw DataError(where + ": empty seq_id");
    auto [it, inserted] = index.try_emplace(seq_id, u_rows.size());
    if (inserted) {
      u_rows.emplace_back();
      y_rows.emplace_back();
      m_rows.emplace_back();
      data.sequences.emplace_back();
      data.sequences.back().seq_id = seq_id;
    }
    const std::size_t si = it->second;
    const long t = parse_long(cells[1], where);
    if (t != static_cast<long>(u_rows[si].size())) {
      throw DataError(where + ": time steps for '" + seq_id +
                      "' must be contiguous from 0");
    }
    Vector u(n_u);
    for (int c = 0; c < n_u; ++c) {
      const std::string cell = trim(cells[static_cast<std::size_t>(2 + c)]);
      if (cell.empty()) throw DataError(where + ": inputs cannot be empty");
      u[c] = parse_double(cell, where);
    }
    Vector y(n_y);
    std::vector<bool> m(static_cast<std::size_t>(n_y));
    for (int c = 0; c < n_y; ++c) {
      const std::string cell =
          trim(cells[static_cast<std::size_t>(2 + n_u + c)]);
      if (cell.empty()) {
        y[c] = 0.0;
        m[static_cast<std::size_t>(c)] = false;
      } else {
        y[c] = parse_double(cell, where);
        m[static_cast<std::size_t>(c)] = true;
      }
    }
    u_rows[si].push_back(std::move(u));
    y_rows[si].push_back(std::move(y));
    m_rows[si].push_back(std::move(m));
  }
  if (data.sequences.empty()) throw DataError(path + ": no data rows");
  for (std::size_t si = 0; si < data.sequences.size(); ++si) {
    const int T = static_cast<int>(u_rows[si].size());
    auto& rec = data.sequences[si];
    rec.U.resize(T, n_u);
    rec.Y.resize(T, n_y);
    rec.mask.resize(T, n_y);
    for (int t = 0; t < T; ++t) {
      rec.U.row(t) = u_rows[si][static_cast<std::size_t>(t)].transpose();
      rec.Y.row(t) = y_rows[si][static_cast<std::size_t>(t)].transpose();
      for (int j = 0; j < n_y; ++j) {
        rec.mask(t, j) = m_rows[si][static_cast<std::size_t>(t)]
                               [static_cast<std::size_t>(j)];
      }
    }
  }
  data.validate();
  return data;
}

void write_sequences_csv(const std::string& path, const SequenceDataset& data) {
  data.validate();
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  const int n_u = data.input_dim();
  const int n_y = data.output_dim();
  f << "seq_id,t";
  for (int c = 0; c < n_u; ++c) f << ",u" << c;
  for (int c = 0; c < n_y; ++c) f << ",y" << c;
  f << "\n";
  for (const auto& rec : data.sequences) {
    if (rec.seq_id.find(',') != std::string::npos) {
      throw DataError("seq_id may not contain commas: " + rec.seq_id);
    }
    for (int t = 0; t < rec.length(); ++t) {
      f << rec.seq_id << ',' << t;
      for (int c = 0; c < n_u; ++c) f << ',' << fmt(rec.U(t, c));
      for (int c = 0; c < n_y; ++c) {
        f << ',';
        if (rec.mask(t, c)) f << fmt(rec.Y(t, c));
      }
      f << "\n";
    }
  }
}

void write_truth_csv(const std::string& path,
                     const std::vector<std::string>& seq_ids,
                     const SyntheticTruth& truth) {
  if (seq_ids.size() != truth.z.size() || seq_ids.size() != truth.theta.size()) {
    throw DimensionError("truth csv: length mismatch");
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  const int k = truth.z.empty() ? 0 : static_cast<int>(truth.z[0].size());
  const int d = truth.theta.empty() ? 0 : static_cast<int>(truth.theta[0].size());
  f << "seq_id";
  for (int i = 0; i < k; ++i) f << ",z_" << i;
  for (int i = 0; i < d; ++i) f << ",theta_" << i;
  f << "\n";
  for (std::size_t s = 0; s < seq_ids.size(); ++s) {
    f << seq_ids[s];
    for (int i = 0; i < k; ++i) f << ',' << fmt(truth.z[s][i]);
    for (int i = 0; i < d; ++i) f << ',' << fmt(truth.theta[s][i]);
    f << "\n";
  }
}

void write_posteriors_csv(const std::string& path,
                          const std::vector<FilterStep>& steps) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  const int k = steps.empty() ? 0 : steps.front().posterior.dim();
  f << "t,component,weight";
  for (int i = 0; i < k; ++i) f << ",mu_" << i;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) f << ",chol_" << i << "_" << j;
  }
  f << "\n";
  for (const auto& step : steps) {
    for (int c = 0; c < step.posterior.components(); ++c) {
      f << step.t << ',' << c << ','
        << fmt(step.posterior.weights[c]);
      const Vector& mu = step.posterior.means[static_cast<std::size_t>(c)];
      for (int i = 0; i < k; ++i) f << ',' << fmt(mu[i]);
      Eigen::LLT<Matrix> llt(step.posterior.covs[static_cast<std::size_t>(c)]);
      if (llt.info() != Eigen::Success) {
        throw NumericError("posterior covariance not positive definite");
      }
      const Matrix L = llt.matrixL();
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) f << ',' << fmt(j <= i ? L(i, j) : 0.0);
      }
      f << "\n";
    }
  }
}

void write_forecast_csv(const std::string& path,
                        const std::vector<ForecastBlock>& blocks) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << "seq_id,t,channel,mean,q05,q95\n";
  for (const auto& block : blocks) {
    const Matrix& mean = block.summary.mean;
    for (int h = 0; h < mean.rows(); ++h) {
      for (int j = 0; j < mean.cols(); ++j) {
        f << block.seq_id << ',' << block.anchor + h << ',' << j << ','
          << fmt(mean(h, j)) << ',' << fmt(block.summary.q05(h, j)) << ','
          << fmt(block.summary.q95(h, j)) << "\n";
      }
    }
  }
}

void write_eval_csv(const std::string& path, const EvalReport& report,
                    bool with_srmse, bool with_aggregates) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << "fold,seq_id,anchor,horizon,channel,rmse";
  if (with_srmse) f << ",srmse";
  f << "\n";
  const auto emit = [&](const EvalRow& row) {
    f << row.fold << ',' << row.seq_id << ',' << row.anchor << ','
      << row.horizon << ',' << row.channel << ',' << fmt(row.rmse);
    if (with_srmse) {
      f << ',';
      if (row.srmse) f << fmt(*row.srmse);
    }
    f << "\n";
  };
  for (const auto& row : report.rows) emit(row);
  if (with_aggregates) {
    for (const auto& row : aggregate_report(report)) emit(row);
  }
}

std::unique_ptr<BaseModel> make_model(const std::string& kind,
                                      const std::vector<int>& dims) {
  if (kind == "lds") {
    if (dims.size() != 3) throw DataError("lds expects dims {n_x, n_u, n_y}");
    return std::make_unique<DeterministicLds>(dims[0], dims[1], dims[2]);
  }
  if (kind == "pd") {
    if (dims.size() != 1) throw DataError("pd expects dims {n_y}");
    return std::make_unique<PdModel>(dims[0]);
  }
  if (kind == "mtrnn") {
    if (dims.size() != 5) {
      throw DataError("mtrnn expects dims {n1, bottleneck, n2, n_u, n_y}");
    }
    return std::make_unique<MtRnn>(dims[0], dims[1], dims[2], dims[3], dims[4]);
  }
  throw DataError("unknown model kind '" + kind + "'");
}

std::vector<int> default_dims(const std::string& kind, const RunConfig& config,
                              int n_u, int n_y) {
  if (kind == "lds") {
    return {config.get_int("model.state_dim", 4), n_u, n_y};
  }
  if (kind == "pd") {
    return {n_y};
  }
  if (kind == "mtrnn") {
    return {config.get_int("model.first_layer_dim", 32),
            config.get_int("model.bottleneck_dim", 8),
            config.get_int("model.second_layer_dim", 16), n_u, n_y};
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

namespace {

void write_matrix(std::ofstream& f, const std::string& label, const Matrix& m) {
  f << label << ' ' << m.rows() << ' ' << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) f << ' ';
      f << fmt(m(r, c));
    }
    f << "\n";
  }
}

void write_vector(std::ofstream& f, const std::string& label, const Vector& v) {
  f << label << ' ' << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) f << ' ';
    f << fmt(v[i]);
  }
  if (v.size() > 0) f << "\n";
}

Matrix read_matrix(std::istream& f, const std::string& label,
                   const std::string& path) {
  std::string got;
  long rows = 0;
  long cols = 0;
  if (!(f >> got >> rows >> cols) || got != label || rows < 0 || cols < 0) {
    throw DataError(path + ": expected block '" + label + "'");
  }
  Matrix m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!(f >> m(r, c))) {
        throw DataError(path + ": truncated block '" + label + "'");
      }
    }
  }
  return m;
}

Vector read_vector(std::istream& f, const std::string& label,
                   const std::string& path) {
  std::string got;
  long n = 0;
  if (!(f >> got >> n) || got != label || n < 0) {
    throw DataError(path + ": expected block '" + label + "'");
  }
  Vector v(n);
  for (long i = 0; i < n; ++i) {
    if (!(f >> v[i])) {
      throw DataError(path + ": truncated block '" + label + "'");
    }
  }
  return v;
}

}  // namespace

void save_artifact(const std::string& path, const ModelArtifact& artifact) {
  artifact.gen.validate();
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << "mtdskit-v1 " << artifact.kind << " k=" << artifact.gen.latent_dim()
    << " d=" << artifact.gen.param_dim() << "\n";
  f << "dims " << artifact.dims.size();
  for (int d : artifact.dims) f << ' ' << d;
  f << "\n";
  f << "constraints " << artifact.gen.constraints.size();
  for (const Constraint c : artifact.gen.constraints) {
    f << ' ' << to_string(c);
  }
  f << "\n";
  write_matrix(f, "W", artifact.gen.W);
  write_vector(f, "b", artifact.gen.b);
  write_vector(f, "shared", artifact.shared);
  write_vector(f, "log_nu", artifact.log_nu);
}

ModelArtifact load_artifact(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open artifact: " + path);
  std::string magic;
  std::string kind;
  std::string kfield;
  std::string dfield;
  if (!(f >> magic >> kind >> kfield >> dfield) || magic != "mtdskit-v1" ||
      kfield.rfind("k=", 0) != 0 || dfield.rfind("d=", 0) != 0) {
    throw DataError(path + ": not a mtdskit-v1 artifact");
  }
  const long k = parse_long(kfield.substr(2), path);
  const long d = parse_long(dfield.substr(2), path);

  ModelArtifact art;
  art.kind = kind;
  std::string label;
  long n = 0;
  if (!(f >> label >> n) || label != "dims" || n < 0) {
    throw DataError(path + ": expected block 'dims'");
  }
  for (long i = 0; i < n; ++i) {
    long v = 0;
    if (!(f >> v)) throw DataError(path + ": truncated block 'dims'");
    art.dims.push_back(static_cast<int>(v));
  }
  if (!(f >> label >> n) || label != "constraints" || n != d) {
    throw DataError(path + ": expected block 'constraints' with d entries");
  }
  for (long i = 0; i < n; ++i) {
    std::string name;
    if (!(f >> name)) throw DataError(path + ": truncated constraints");
    art.gen.constraints.push_back(constraint_from_string(name));
  }
  art.gen.W = read_matrix(f, "W", path);
  art.gen.b = read_vector(f, "b", path);
  art.shared = read_vector(f, "shared", path);
  art.log_nu = read_vector(f, "log_nu", path);
  if (art.gen.W.rows() != d || art.gen.W.cols() != k) {
    throw DataError(path + ": W shape disagrees with the header");
  }
  art.gen.validate();
  const auto model = make_model(art.kind, art.dims);
  if (model->param_dim() != d || model->shared_dim() != art.shared.size() ||
      model->output_dim() != art.log_nu.size()) {
    throw DataError(path + ": blocks disagree with the model dims");
  }
  return art;
}

}  // namespace mtdskit
