// Copyright 2026 The gpadapter authors
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

#include "gpa/dataset.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace gpa {

using nlohmann::json;

void Dataset::validate() const {
  require(t_max > 0.0 && std::isfinite(t_max), "Dataset: bad time horizon");
  for (const TimeSeries& s : series) {
    s.validate();
    require(s.times[0] >= 0.0 && s.times[s.size() - 1] <= t_max,
            "Dataset: series times outside [0, T]");
    if (s.label >= 0)
      require(s.label < num_classes, "Dataset: label outside declared class range");
  }
}

Dataset read_jsonl(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "read_jsonl: missing header line");
  json header = json::parse(line);
  Dataset data;
  data.t_max = header.at("T").get<double>();
  data.num_classes = header.at("classes").get<int>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    TimeSeries s;
    const auto& times = rec.at("times");
    const auto& values = rec.at("values");
    require(times.size() == values.size(), "read_jsonl: times/values length mismatch");
    s.times.resize(static_cast<Index>(times.size()));
    s.values.resize(static_cast<Index>(values.size()));
    for (Index i = 0; i < s.times.size(); ++i) {
      s.times[i] = times[static_cast<size_t>(i)].get<double>();
      s.values[i] = values[static_cast<size_t>(i)].get<double>();
    }
    s.label = rec.value("label", -1);
    data.series.push_back(std::move(s));
  }
  data.validate();
  return data;
}

void write_jsonl(const Dataset& data, std::ostream& out) {
  json header;
  header["T"] = data.t_max;
  header["classes"] = data.num_classes;
  out << header.dump() << "\n";
  for (const TimeSeries& s : data.series) {
    json rec;
    rec["times"] = std::vector<double>(s.times.data(), s.times.data() + s.times.size());
    rec["values"] = std::vector<double>(s.values.data(), s.values.data() + s.values.size());
    if (s.label >= 0) rec["label"] = s.label;
    out << rec.dump() << "\n";
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("load_dataset: cannot open " + path);
  return read_jsonl(in);
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("save_dataset: cannot open " + path);
  write_jsonl(data, out);
}

void SynthConfig::validate() const {
  require(num_series >= 0, "SynthConfig: num_series must be >= 0");
  require(classes >= 1, "SynthConfig: classes must be >= 1");
  require(n_min >= 1 && n_max >= n_min, "SynthConfig: bad n range");
  require(t_max > 0.0, "SynthConfig: t_max must be positive");
  require(class_structure == "none" || class_structure == "mean" ||
              class_structure == "kernel",
          "SynthConfig: class_structure must be none|mean|kernel");
}

namespace {

Vec sorted_uniform_times(Index n, double t_max, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, t_max);
  Vec t(n);
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (Index i = 0; i < n; ++i) t[i] = uniform(rng);
    std::sort(t.data(), t.data() + n);
    bool strict = true;
    for (Index i = 1; i < n; ++i)
      if (!(t[i] > t[i - 1])) strict = false;
    if (strict) return t;
  }
  throw NumericBreakdown("sorted_uniform_times: could not draw strictly increasing times");
}

// Smooth class template: frequency and phase vary with the class id.
double class_template(int label, double t, double t_max, double amplitude) {
  const double x = t / t_max;
  const double freq = 1.5 + 0.75 * static_cast<double>(label);
  const double phase = 0.9 * static_cast<double>(label);
  return amplitude * std::sin(2.0 * M_PI * freq * x + phase);
}

}  // namespace

Dataset synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Dataset data;
  data.t_max = cfg.t_max;
  data.num_classes = cfg.classes;
  data.series.reserve(static_cast<size_t>(cfg.num_series));

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < cfg.num_series; ++i) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xda7a5e7));
    const int label = i % cfg.classes;
    std::uniform_int_distribution<Index> n_dist(cfg.n_min, cfg.n_max);
    const Index n = n_dist(rng);

    GpParams params = cfg.params;
    if (cfg.class_structure == "kernel")
      params.beta += cfg.kernel_beta_step * static_cast<double>(label);

    TimeSeries s;
    s.label = label;
    s.times = sorted_uniform_times(n, cfg.t_max, rng);

    // v ~ N(template, K + sigma^2 I)
    Mat k = build_kernel_matrix(s.times, s.times, params);
    k.diagonal().array() += params.noise_var() + 1e-12;
    Eigen::LLT<Mat> llt(k);
    if (llt.info() != Eigen::Success)
      throw NumericBreakdown("synth_dataset: prior covariance factorization failed");
    Vec white(n);
    for (Index j = 0; j < n; ++j) white[j] = normal(rng);
    s.values = llt.matrixL() * white;
    if (cfg.class_structure == "mean")
      for (Index j = 0; j < n; ++j)
        s.values[j] += class_template(label, s.times[j], cfg.t_max, cfg.template_amplitude);
    data.series.push_back(std::move(s));
  }
  return data;
}

Dataset subsample_dataset(const Dataset& data, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "subsample_dataset: fraction must be in (0, 1]");
  Dataset out;
  out.t_max = data.t_max;
  out.num_classes = data.num_classes;
  out.series.reserve(data.series.size());

  for (size_t si = 0; si < data.series.size(); ++si) {
    const TimeSeries& s = data.series[si];
    const Index keep = static_cast<Index>(std::floor(fraction * static_cast<double>(s.size())));
    if (keep < 1)
      throw InvalidArgument("subsample_dataset: fraction leaves zero points in a series");
    if (keep == s.size()) {
      out.series.push_back(s);
      continue;
    }
    std::vector<Index> idx(static_cast<size_t>(s.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(si), 0x5b5a3b1e));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<size_t>(keep));
    std::sort(idx.begin(), idx.end());

    TimeSeries sub;
    sub.label = s.label;
    sub.times.resize(keep);
    sub.values.resize(keep);
    for (Index j = 0; j < keep; ++j) {
      sub.times[j] = s.times[idx[static_cast<size_t>(j)]];
      sub.values[j] = s.values[idx[static_cast<size_t>(j)]];
    }
    out.series.push_back(std::move(sub));
  }
  return out;
}

}  // namespace gpa
