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

#ifndef GPA_ADAPTER_HPP
#define GPA_ADAPTER_HPP

#include "gpa/exact_gp.hpp"
#include "gpa/kernel.hpp"
#include "gpa/krylov.hpp"
#include "gpa/ski.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace gpa {

enum class AdapterMode { kExact, kSki };
enum class Framework { kUac, kImp };

struct AdapterConfig {
  Vec ref_times;  // the d reference points shared across a data set
  Index m = 256;  // inducing points (SKI mode)
  int lanczos_k = 5;
  int num_samples = 10;
  AdapterMode mode = AdapterMode::kSki;
  Framework framework = Framework::kUac;
  std::uint64_t seed = 0;
  CgOptions cg;

  Index d() const { return ref_times.size(); }
  void validate() const;

  static Vec even_ref_times(Index d, double t_max);
};

// Forward output plus the retained intermediates adapt_backward needs.
struct AdapterOutput {
  Mat samples;  // d x S (UAC) or d x 1 = posterior mean (IMP)
  Vec mean;

  struct Tape {
    TimeSeries series;
    GpParams params;
    AdapterConfig cfg;
    Mat xi;  // noise actually used (d x S), empty for IMP
    std::shared_ptr<const SkiOperator> op;  // SKI mode
    std::vector<LanczosRecord> lanczos;     // per sample
    std::vector<std::vector<SkiOperator::CovRecord>> cov_records;  // per sample, per matvec
  };
  std::shared_ptr<Tape> tape;
};

// Deterministic standard-normal block for the reparameterization noise.
Mat standard_normal(Index rows, Index cols, std::uint64_t seed);

// Maps a series to its uniform Gaussian representation and produces
// UAC samples (mu + Sigma^{1/2} Xi) or the IMP mean.
//
// UAC noise comes from `noise` when supplied (reproducibility/tests) or is
// drawn from cfg.seed. With keep_tape the SKI sample path runs one Lanczos
// recursion per sample so the backward sweep differentiates exactly what
// was computed; without a tape multiple samples share one block Lanczos run.
AdapterOutput adapt_forward(const TimeSeries& series, const GpParams& params,
                            const AdapterConfig& cfg, const Mat* noise = nullptr,
                            bool keep_tape = true);

// Sums per-sample pullbacks of upstream (d x S, the loss gradients w.r.t.
// the samples) into GP-parameter space. Any 1/S loss factor is the
// caller's responsibility (loss_and_grads already includes it).
ParamGrad adapt_backward(const AdapterOutput& output, const Mat& upstream);

}  // namespace gpa

#endif  // GPA_ADAPTER_HPP
