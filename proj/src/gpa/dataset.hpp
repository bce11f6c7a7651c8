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

#ifndef GPA_DATASET_HPP
#define GPA_DATASET_HPP

#include "gpa/exact_gp.hpp"
#include "gpa/kernel.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpa {

// A labeled collection of irregular series over the common interval [0, T].
struct Dataset {
  double t_max = 1.0;
  int num_classes = 0;
  std::vector<TimeSeries> series;

  std::size_t size() const { return series.size(); }
  void validate() const;
};

// JSON-lines container: a header {"T":..,"classes":..} then one record
// {"times":[..],"values":[..],"label":..} per series.
Dataset read_jsonl(std::istream& in);
void write_jsonl(const Dataset& data, std::ostream& out);
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& data, const std::string& path);

// Synthetic generation by sampling a zero-mean GP prior at random time
// points, with optional class structure.
struct SynthConfig {
  int num_series = 100;
  int classes = 1;
  Index n_min = 20;
  Index n_max = 50;
  double t_max = 1.0;
  GpParams params;          // prior kernel + observation noise (gamma)
  std::uint64_t seed = 0;
  // Class structure: "none" draws plain prior samples; "mean" adds a
  // class-specific smooth template; "kernel" varies beta per class.
  std::string class_structure = "none";
  double template_amplitude = 2.0;
  double kernel_beta_step = 1.0;  // per-class beta offset ("kernel" mode)

  void validate() const;
};
Dataset synth_dataset(const SynthConfig& cfg);

// Per-series uniform subsampling without replacement; keep count is
// floor(fraction * n), times stay sorted.
Dataset subsample_dataset(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace gpa

#endif  // GPA_DATASET_HPP
