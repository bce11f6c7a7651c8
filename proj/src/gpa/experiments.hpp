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

#ifndef GPA_EXPERIMENTS_HPP
#define GPA_EXPERIMENTS_HPP

#include "gpa/adapter.hpp"
#include "gpa/dataset.hpp"

#include <iosfwd>
#include <vector>

namespace gpa {

// Sample-approximation error ||z_tilde - z|| against the exact draw, with a
// fixed noise vector per series length, swept over inducing-point counts at
// fixed k and over Lanczos iterations at fixed m. Reference times are d = n
// evenly spaced points.
struct ApproxErrorConfig {
  std::vector<Index> lengths{1000, 2000, 3000};
  std::vector<Index> m_sweep{64, 128, 256, 512, 1024};
  int k_fixed = 10;
  std::vector<int> k_sweep{1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                           11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  Index m_fixed = 256;
  double t_max = 1.0;
  GpParams params{0.0, std::log(100.0), std::log(1e-2)};
  std::uint64_t seed = 7;
  CgOptions cg;
};

struct ApproxErrorRow {
  std::string sweep;  // "m" or "k"
  Index n = 0;
  Index m = 0;
  int k = 0;
  double error = 0.0;
};
std::vector<ApproxErrorRow> run_approx_error(const ApproxErrorConfig& cfg);
void write_approx_error_csv(const std::vector<ApproxErrorRow>& rows, std::ostream& out);

// Wall-clock medians for exact vs Lanczos sampling and their gradients.
struct TimingConfig {
  std::vector<Index> lengths{1000, 2000, 3000};
  Index m = 256;
  int k = 10;
  int reps = 3;
  int exact_reps = 1;  // the exact path is the expensive one
  double t_max = 1.0;
  GpParams params{0.0, std::log(100.0), std::log(1e-2)};
  std::uint64_t seed = 7;
  CgOptions cg;
};

struct TimingRow {
  std::string method;  // exact | lanczos | exact-bp | lanczos-bp
  Index n = 0;
  double seconds = 0.0;
};
std::vector<TimingRow> run_timing(const TimingConfig& cfg);
void write_timing_csv(const std::vector<TimingRow>& rows, std::ostream& out);

}  // namespace gpa

#endif  // GPA_EXPERIMENTS_HPP
