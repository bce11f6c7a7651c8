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

#ifndef GPA_MODELS_HPP
#define GPA_MODELS_HPP

#include "gpa/adapter.hpp"
#include "gpa/common.hpp"
#include "gpa/ski.hpp"

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

namespace gpa {

// Activations flow as (channels x length); dense layers flatten column-major.
struct DenseLayer {
  Mat w;  // out x in
  Vec b;
};
struct ReluLayer {};
struct Conv1dLayer {
  std::vector<Mat> w;  // per output channel: in_ch x width
  Vec b;               // per output channel
  Index width() const { return w.empty() ? 0 : w[0].cols(); }
  Index in_channels() const { return w.empty() ? 0 : w[0].rows(); }
  Index out_channels() const { return static_cast<Index>(w.size()); }
};
struct MaxPool1dLayer {
  Index size = 2;
};

using Layer = std::variant<DenseLayer, ReluLayer, Conv1dLayer, MaxPool1dLayer>;

struct ClassifierParams {
  std::vector<Layer> layers;
  Index input_dim = 0;
  Index num_classes = 0;
};

// Standard architectures. Weights ~ N(0, 2/fan_in), biases zero.
ClassifierParams make_logreg(Index input_dim, Index num_classes, std::uint64_t seed);
ClassifierParams make_mlp(Index input_dim, Index num_classes, std::uint64_t seed,
                          Index hidden = 256);
ClassifierParams make_convnet(Index input_dim, Index num_classes, std::uint64_t seed);

// Output lengths of every layer for a given input length (shape audit).
std::vector<Index> layer_output_sizes(const ClassifierParams& clf);

// Logits for one input vector; softmax lives in the loss.
Vec forward(const ClassifierParams& clf, const Vec& z);

// Softmax cross-entropy over S samples (columns of z_samples), averaged
// with the 1/S factor. Returns the loss, parameter gradients (same shape
// as the classifier), and per-sample input gradients.
struct LossResult {
  double loss = 0.0;
  ClassifierParams grads;
  Mat dz;  // d x S
};
LossResult loss_and_grads(const ClassifierParams& clf, const Mat& z_samples, int label);

// In-place traversal of every weight/bias array (SGD plumbing).
void visit_params(ClassifierParams& clf, const std::function<void(Mat&)>& fm,
                  const std::function<void(Vec&)>& fv);
ClassifierParams zeros_like(const ClassifierParams& clf);
double squared_param_norm(ClassifierParams& grads);

// Fixed random-feature bank of the mixture-of-expected-Gaussian-kernels
// layer: phi_i = sqrt(2/M) exp(-w_i' Sigma w_i / 2) cos(w_i' mu + b_i).
// Directions and phases are drawn once and never trained.
struct MegFeatureBank {
  Mat directions;  // d x M
  Vec phases;      // M

  Index features() const { return phases.size(); }
  static MegFeatureBank init(Index d, Index num_features, std::uint64_t seed);
};

// Forward tape for the SKI-mode feature gradients.
struct MegTape {
  Vec cos_arg;   // w_i' mu + b_i
  Vec quad;      // w_i' Sigma w_i
  std::vector<SkiOperator::CovRecord> records;  // per feature (SKI mode)
};

// Expected random features, computed analytically (never sampled).
Vec meg_features(const MegFeatureBank& bank, const GaussianRepr& repr, MegTape* tape = nullptr);
Vec meg_features(const MegFeatureBank& bank, const SkiOperator& op, MegTape* tape = nullptr);

// upstream' (d phi / d theta) through the closed form, SKI mode.
ParamGrad meg_features_grad(const MegFeatureBank& bank, const SkiOperator& op,
                            const MegTape& tape, const Vec& upstream);

}  // namespace gpa

#endif  // GPA_MODELS_HPP
