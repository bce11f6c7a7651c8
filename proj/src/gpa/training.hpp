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

#ifndef GPA_TRAINING_HPP
#define GPA_TRAINING_HPP

#include "gpa/adapter.hpp"
#include "gpa/dataset.hpp"
#include "gpa/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gpa {

enum class ClassifierKind { kLogReg, kMlp, kConvNet, kMeg };
enum class Regime { kEndToEnd, kTwoStage };

struct TrainConfig {
  double learning_rate = 1e-2;
  double momentum = 0.9;
  int epochs = 50;
  int early_stop_patience = 10;
  double train_fraction = 0.7;  // remainder is validation
  Regime regime = Regime::kEndToEnd;
  std::uint64_t seed = 0;
  double grad_clip = 10.0;   // global norm
  double lr_decay = 0.5;     // applied on validation plateau
  int plateau_epochs = 3;    // epochs without improvement before a decay
  int ml_epochs = 10;        // two-stage phase one (marginal likelihood)
  double ml_learning_rate = 1e-2;
  Index meg_features = 256;
  GpParams init_params;

  void validate() const;
};

struct TrainedModel {
  GpParams gp;
  ClassifierKind kind = ClassifierKind::kLogReg;
  ClassifierParams clf;
  std::optional<MegFeatureBank> meg;
  AdapterConfig adapter;
  int num_classes = 0;
};

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  GpParams params;
};

struct Metrics {
  double accuracy = 0.0;
  Vec per_class_accuracy;
  double mean_loss = 0.0;
};

TrainedModel train(const Dataset& data, const AdapterConfig& adapter_cfg, ClassifierKind kind,
                   const TrainConfig& train_cfg, std::vector<HistoryRow>* history = nullptr);

// Deterministic IMP prediction: argmax logit at the posterior mean,
// lowest class index winning ties.
int predict(const TimeSeries& series, const TrainedModel& model);

Metrics evaluate(const Dataset& data, const TrainedModel& model);

std::string history_to_csv(const std::vector<HistoryRow>& history);

const char* classifier_kind_name(ClassifierKind kind);

// One Nesterov-momentum SGD update (momentum 0 reduces to plain SGD).
void nesterov_step(Mat& param, Mat& velocity, const Mat& grad, double lr, double momentum);

}  // namespace gpa

#endif  // GPA_TRAINING_HPP
