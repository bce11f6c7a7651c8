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

#include "gpadapter.h"

#include "gpa/adapter.hpp"
#include "gpa/dataset.hpp"
#include "gpa/experiments.hpp"
#include "gpa/model_io.hpp"
#include "gpa/training.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <string>

using nlohmann::json;

struct gpa_dataset {
  gpa::Dataset data;
};

struct gpa_model {
  gpa::TrainedModel model;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
gpa_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GPA_OK;
  } catch (const gpa::InvalidArgument& e) {
    g_last_error = e.what();
    return GPA_ERROR_INVALID_ARGUMENT;
  } catch (const json::exception& e) {
    g_last_error = std::string("config: ") + e.what();
    return GPA_ERROR_INVALID_ARGUMENT;
  } catch (const gpa::NumericBreakdown& e) {
    g_last_error = e.what();
    return GPA_ERROR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GPA_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GPA_ERROR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gpa::GpParams params_from_json(const json& j, const char* prefix = "") {
  gpa::GpParams p;
  const std::string pre(prefix);
  p.alpha = j.value(pre + "alpha", 0.0);
  p.beta = j.value(pre + "beta", std::log(100.0));
  p.gamma = j.value(pre + "gamma", std::log(1e-2));
  return p;
}

gpa::SynthConfig synth_config_from_json(const json& j) {
  gpa::SynthConfig cfg;
  cfg.num_series = j.value("num_series", 100);
  cfg.classes = j.value("classes", 1);
  cfg.n_min = j.value("n_min", gpa::Index{20});
  cfg.n_max = j.value("n_max", gpa::Index{50});
  cfg.t_max = j.value("t_max", 1.0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.params = params_from_json(j);
  cfg.class_structure = j.value("class_structure", std::string("none"));
  cfg.template_amplitude = j.value("template_amplitude", 2.0);
  cfg.kernel_beta_step = j.value("kernel_beta_step", 1.0);
  return cfg;
}

struct TrainSpec {
  gpa::AdapterConfig adapter;
  gpa::ClassifierKind kind = gpa::ClassifierKind::kLogReg;
  gpa::TrainConfig train;
};

TrainSpec train_spec_from_json(const json& j, const gpa::Dataset& data) {
  TrainSpec spec;
  const gpa::Index d = j.value("d", gpa::Index{254});
  spec.adapter.ref_times = gpa::AdapterConfig::even_ref_times(d, data.t_max);
  spec.adapter.m = j.value("m", gpa::Index{256});
  spec.adapter.lanczos_k = j.value("k", 5);
  spec.adapter.num_samples = j.value("samples", 10);
  spec.adapter.seed = j.value("seed", std::uint64_t{0});
  spec.adapter.cg.tol = j.value("cg_tol", 1e-10);
  spec.adapter.cg.max_iter = j.value("cg_max_iter", 1000);

  const std::string mode = j.value("mode", std::string("ski"));
  gpa::require(mode == "ski" || mode == "exact", "config: mode must be ski|exact");
  spec.adapter.mode = mode == "exact" ? gpa::AdapterMode::kExact : gpa::AdapterMode::kSki;

  const std::string framework = j.value("framework", std::string("uac"));
  gpa::require(framework == "uac" || framework == "imp", "config: framework must be uac|imp");
  spec.adapter.framework =
      framework == "imp" ? gpa::Framework::kImp : gpa::Framework::kUac;

  const std::string classifier = j.value("classifier", std::string("logreg"));
  if (classifier == "logreg")
    spec.kind = gpa::ClassifierKind::kLogReg;
  else if (classifier == "mlp")
    spec.kind = gpa::ClassifierKind::kMlp;
  else if (classifier == "convnet")
    spec.kind = gpa::ClassifierKind::kConvNet;
  else if (classifier == "meg")
    spec.kind = gpa::ClassifierKind::kMeg;
  else
    throw gpa::InvalidArgument("config: classifier must be logreg|mlp|convnet|meg");

  const std::string regime = j.value("regime", std::string("end_to_end"));
  gpa::require(regime == "end_to_end" || regime == "two_stage",
               "config: regime must be end_to_end|two_stage");
  spec.train.regime =
      regime == "two_stage" ? gpa::Regime::kTwoStage : gpa::Regime::kEndToEnd;

  spec.train.learning_rate = j.value("lr", 1e-2);
  spec.train.momentum = j.value("momentum", 0.9);
  spec.train.epochs = j.value("epochs", 50);
  spec.train.early_stop_patience = j.value("patience", 10);
  spec.train.train_fraction = j.value("train_fraction", 0.7);
  spec.train.seed = j.value("seed", std::uint64_t{0});
  spec.train.grad_clip = j.value("grad_clip", 10.0);
  spec.train.lr_decay = j.value("lr_decay", 0.5);
  spec.train.plateau_epochs = j.value("plateau_epochs", 3);
  spec.train.ml_epochs = j.value("ml_epochs", 10);
  spec.train.ml_learning_rate = j.value("ml_lr", 1e-2);
  spec.train.meg_features = j.value("meg_features", gpa::Index{1000});
  spec.train.init_params = params_from_json(j, "init_");
  return spec;
}

template <typename T>
std::vector<T> index_list(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  std::vector<T> out;
  for (const json& v : j.at(key)) out.push_back(v.get<T>());
  return out;
}

}  // namespace

extern "C" {

const char* gpa_version(void) { return "1.0.0"; }

const char* gpa_last_error(void) { return g_last_error.c_str(); }

void gpa_dataset_free(gpa_dataset* dataset) { delete dataset; }
void gpa_model_free(gpa_model* model) { delete model; }
void gpa_string_free(char* str) { delete[] str; }

gpa_status gpa_dataset_load(const char* path, gpa_dataset** out) {
  return guarded([&] {
    gpa::require(path && out, "gpa_dataset_load: null argument");
    *out = new gpa_dataset{gpa::load_dataset(path)};
  });
}

gpa_status gpa_dataset_save(const gpa_dataset* dataset, const char* path) {
  return guarded([&] {
    gpa::require(dataset && path, "gpa_dataset_save: null argument");
    gpa::save_dataset(dataset->data, path);
  });
}

gpa_status gpa_dataset_synth(const char* config_json, gpa_dataset** out) {
  return guarded([&] {
    gpa::require(config_json && out, "gpa_dataset_synth: null argument");
    *out = new gpa_dataset{gpa::synth_dataset(synth_config_from_json(json::parse(config_json)))};
  });
}

gpa_status gpa_dataset_subsample(const gpa_dataset* dataset, double fraction, uint64_t seed,
                                 gpa_dataset** out) {
  return guarded([&] {
    gpa::require(dataset && out, "gpa_dataset_subsample: null argument");
    *out = new gpa_dataset{gpa::subsample_dataset(dataset->data, fraction, seed)};
  });
}

gpa_status gpa_dataset_create(const double* const* times, const double* const* values,
                              const size_t* lengths, const int* labels, size_t num_series,
                              double t_max, int num_classes, gpa_dataset** out) {
  return guarded([&] {
    gpa::require(times && values && lengths && out, "gpa_dataset_create: null argument");
    gpa::Dataset data;
    data.t_max = t_max;
    data.num_classes = num_classes;
    data.series.reserve(num_series);
    for (size_t i = 0; i < num_series; ++i) {
      gpa::TimeSeries s;
      const gpa::Index n = static_cast<gpa::Index>(lengths[i]);
      s.times = Eigen::Map<const gpa::Vec>(times[i], n);
      s.values = Eigen::Map<const gpa::Vec>(values[i], n);
      s.label = labels ? labels[i] : -1;
      data.series.push_back(std::move(s));
    }
    data.validate();
    *out = new gpa_dataset{std::move(data)};
  });
}

gpa_status gpa_dataset_info(const gpa_dataset* dataset, char** json_out) {
  return guarded([&] {
    gpa::require(dataset && json_out, "gpa_dataset_info: null argument");
    json j;
    j["size"] = dataset->data.size();
    j["classes"] = dataset->data.num_classes;
    j["T"] = dataset->data.t_max;
    *json_out = dup_string(j.dump());
  });
}

gpa_status gpa_train(const gpa_dataset* dataset, const char* config_json, gpa_model** out,
                     const char* history_csv_path) {
  return guarded([&] {
    gpa::require(dataset && config_json && out, "gpa_train: null argument");
    const TrainSpec spec = train_spec_from_json(json::parse(config_json), dataset->data);
    std::vector<gpa::HistoryRow> history;
    gpa::TrainedModel model =
        gpa::train(dataset->data, spec.adapter, spec.kind, spec.train, &history);
    if (history_csv_path) {
      std::ofstream csv(history_csv_path);
      gpa::require(static_cast<bool>(csv), "gpa_train: cannot open history path");
      csv << gpa::history_to_csv(history);
    }
    *out = new gpa_model{std::move(model)};
  });
}

gpa_status gpa_model_save(const gpa_model* model, const char* path) {
  return guarded([&] {
    gpa::require(model && path, "gpa_model_save: null argument");
    gpa::save_model(model->model, path);
  });
}

gpa_status gpa_model_load(const char* path, gpa_model** out) {
  return guarded([&] {
    gpa::require(path && out, "gpa_model_load: null argument");
    *out = new gpa_model{gpa::load_model(path)};
  });
}

gpa_status gpa_predict(const gpa_model* model, const double* times, const double* values,
                       size_t length, int* label_out) {
  return guarded([&] {
    gpa::require(model && times && values && label_out, "gpa_predict: null argument");
    gpa::TimeSeries s;
    s.times = Eigen::Map<const gpa::Vec>(times, static_cast<gpa::Index>(length));
    s.values = Eigen::Map<const gpa::Vec>(values, static_cast<gpa::Index>(length));
    *label_out = gpa::predict(s, model->model);
  });
}

gpa_status gpa_evaluate(const gpa_model* model, const gpa_dataset* dataset,
                        char** metrics_json) {
  return guarded([&] {
    gpa::require(model && dataset && metrics_json, "gpa_evaluate: null argument");
    const gpa::Metrics m = gpa::evaluate(dataset->data, model->model);
    json j;
    j["accuracy"] = m.accuracy;
    j["mean_loss"] = m.mean_loss;
    j["per_class_accuracy"] = std::vector<double>(
        m.per_class_accuracy.data(), m.per_class_accuracy.data() + m.per_class_accuracy.size());
    *metrics_json = dup_string(j.dump());
  });
}

gpa_status gpa_experiment_approx_error(const char* config_json, const char* out_csv_path) {
  return guarded([&] {
    gpa::require(config_json && out_csv_path, "gpa_experiment_approx_error: null argument");
    const json j = json::parse(config_json);
    gpa::ApproxErrorConfig cfg;
    cfg.lengths = index_list<gpa::Index>(j, "lengths", cfg.lengths);
    cfg.m_sweep = index_list<gpa::Index>(j, "m_sweep", cfg.m_sweep);
    cfg.k_sweep = index_list<int>(j, "k_sweep", cfg.k_sweep);
    cfg.k_fixed = j.value("k_fixed", cfg.k_fixed);
    cfg.m_fixed = j.value("m_fixed", cfg.m_fixed);
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.params = params_from_json(j);
    std::ofstream csv(out_csv_path);
    gpa::require(static_cast<bool>(csv), "gpa_experiment_approx_error: cannot open output");
    gpa::write_approx_error_csv(gpa::run_approx_error(cfg), csv);
  });
}

gpa_status gpa_experiment_timing(const char* config_json, const char* out_csv_path) {
  return guarded([&] {
    gpa::require(config_json && out_csv_path, "gpa_experiment_timing: null argument");
    const json j = json::parse(config_json);
    gpa::TimingConfig cfg;
    cfg.lengths = index_list<gpa::Index>(j, "lengths", cfg.lengths);
    cfg.m = j.value("m", cfg.m);
    cfg.k = j.value("k", cfg.k);
    cfg.reps = j.value("reps", cfg.reps);
    cfg.exact_reps = j.value("exact_reps", cfg.exact_reps);
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.params = params_from_json(j);
    std::ofstream csv(out_csv_path);
    gpa::require(static_cast<bool>(csv), "gpa_experiment_timing: cannot open output");
    gpa::write_timing_csv(gpa::run_timing(cfg), csv);
  });
}

}  // extern "C"
