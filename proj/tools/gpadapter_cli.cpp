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

// Command-line harness for the gpadapter shared library. All numerical work
// happens behind the C API in gpadapter.h; this file only parses flags,
// assembles JSON configs and moves files around.

#include <gpadapter.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

int fail(gpa_status status) {
  std::cerr << "error: " << gpa_last_error() << "\n";
  return static_cast<int>(status);
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config file " << path << "\n";
    std::exit(2);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    std::cerr << "error: bad config file " << path << ": " << e.what() << "\n";
    std::exit(2);
  }
}

struct DatasetHandle {
  gpa_dataset* ptr = nullptr;
  ~DatasetHandle() { gpa_dataset_free(ptr); }
};

struct ModelHandle {
  gpa_model* ptr = nullptr;
  ~ModelHandle() { gpa_model_free(ptr); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(2);
  }
  out << text;
}

// Flag helper: only overrides the config-file value when the flag was given.
template <typename T>
void overlay(json& cfg, const CLI::App& app, const std::string& flag, const char* key,
             const T& value) {
  if (app.count(flag) > 0) cfg[key] = value;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
      if (!tok.empty()) out.push_back(tok);
      tok.clear();
    } else {
      tok.push_back(c);
    }
  }
  if (!tok.empty()) out.push_back(tok);
  return out;
}

struct RawSeries {
  std::vector<double> times;
  std::vector<double> values;
  int label = -1;
};

int save_raw_series(const std::vector<RawSeries>& all, double t_max, int classes,
                    const std::string& out_path) {
  std::vector<const double*> times, values;
  std::vector<size_t> lengths;
  std::vector<int> labels;
  for (const RawSeries& s : all) {
    times.push_back(s.times.data());
    values.push_back(s.values.data());
    lengths.push_back(s.times.size());
    labels.push_back(s.label);
  }
  DatasetHandle data;
  gpa_status status =
      gpa_dataset_create(times.data(), values.data(), lengths.data(), labels.data(),
                         all.size(), t_max, classes, &data.ptr);
  if (status != GPA_OK) return fail(status);
  status = gpa_dataset_save(data.ptr, out_path.c_str());
  if (status != GPA_OK) return fail(status);
  std::cout << "wrote " << all.size() << " series to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process adapter for irregularly sampled time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gpa_version()));

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its keys")
      ->expected(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic GP dataset");
  std::string synth_out;
  int synth_n = 100, synth_classes = 1;
  long long synth_nmin = 20, synth_nmax = 50;
  double synth_tmax = 1.0, synth_alpha = 0.0, synth_beta = std::log(100.0),
         synth_gamma = std::log(1e-2), synth_amp = 2.0;
  std::uint64_t synth_seed = 0;
  std::string synth_structure = "none";
  synth->add_option("--out", synth_out, "output JSONL path")->required();
  synth->add_option("--num-series", synth_n);
  synth->add_option("--classes", synth_classes);
  synth->add_option("--n-min", synth_nmin);
  synth->add_option("--n-max", synth_nmax);
  synth->add_option("--t-max", synth_tmax);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--alpha", synth_alpha, "log amplitude");
  synth->add_option("--beta", synth_beta, "log inverse squared length scale");
  synth->add_option("--gamma", synth_gamma, "log noise variance");
  synth->add_option("--class-structure", synth_structure, "none|mean|kernel");
  synth->add_option("--template-amplitude", synth_amp);

  // ---- subsample ----
  auto* subsample = app.add_subcommand("subsample", "randomly keep a fraction of each series");
  std::string sub_in, sub_out;
  double sub_fraction = 0.1;
  std::uint64_t sub_seed = 0;
  subsample->add_option("--input", sub_in)->required();
  subsample->add_option("--out", sub_out)->required();
  subsample->add_option("--fraction", sub_fraction)->required();
  subsample->add_option("--seed", sub_seed);

  // ---- approx-error ----
  auto* approx = app.add_subcommand("approx-error", "sample approximation error sweeps");
  std::string approx_out;
  std::uint64_t approx_seed = 7;
  approx->add_option("--out", approx_out)->required();
  approx->add_option("--seed", approx_seed);

  // ---- timing ----
  auto* timing = app.add_subcommand("timing", "exact vs Lanczos wall-clock comparison");
  std::string timing_out;
  long long timing_m = 256;
  int timing_k = 10, timing_reps = 3, timing_exact_reps = 1;
  timing->add_option("--out", timing_out)->required();
  timing->add_option("--m", timing_m);
  timing->add_option("--k", timing_k);
  timing->add_option("--reps", timing_reps);
  timing->add_option("--exact-reps", timing_exact_reps);

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a classifier through the GP adapter");
  std::string train_data, train_out, train_classifier = "logreg", train_framework = "uac",
              train_regime = "end_to_end", train_mode = "ski", train_history;
  long long train_d = 254, train_m = 256, train_samples = 10, train_k = 5;
  double train_lr = 1e-2;
  int train_epochs = 50;
  std::uint64_t train_seed = 0;
  train->add_option("--data", train_data, "training JSONL")->required();
  train->add_option("--out", train_out, "model output path")->required();
  train->add_option("--classifier", train_classifier, "logreg|mlp|convnet|meg");
  train->add_option("--framework", train_framework, "uac|imp");
  train->add_option("--regime", train_regime, "end_to_end|two_stage");
  train->add_option("--mode", train_mode, "ski|exact");
  train->add_option("--d", train_d, "adapter output features");
  train->add_option("--m", train_m, "inducing points");
  train->add_option("--k", train_k, "Lanczos iterations");
  train->add_option("--samples", train_samples, "Monte Carlo samples");
  train->add_option("--seed", train_seed);
  train->add_option("--lr", train_lr);
  train->add_option("--epochs", train_epochs);
  train->add_option("--history", train_history, "history CSV path (default <out>.history.csv)");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a trained model on a dataset");
  std::string eval_data, eval_model, eval_out;
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--out", eval_out, "metrics CSV path")->required();

  // ---- grid ----
  auto* grid = app.add_subcommand(
      "grid", "train/eval the full classifier x regime x framework table");
  std::string grid_train, grid_test, grid_out;
  std::uint64_t grid_seed = 0;
  grid->add_option("--train-data", grid_train)->required();
  grid->add_option("--test-data", grid_test)->required();
  grid->add_option("--out", grid_out, "grid CSV path")->required();
  grid->add_option("--seed", grid_seed);

  // ---- importers ----
  auto* uwave = app.add_subcommand("import-uwave", "convert a UCR-format text file to JSONL");
  std::string uwave_in, uwave_out;
  double uwave_tmax = 1.0;
  uwave->add_option("--input", uwave_in)->required();
  uwave->add_option("--out", uwave_out)->required();
  uwave->add_option("--t-max", uwave_tmax);

  auto* csvimp = app.add_subcommand("import-csv", "convert two-column CSV series to JSONL");
  std::vector<std::string> csv_inputs;
  std::string csv_out;
  int csv_label = -1, csv_classes = 0;
  double csv_tmax = 0.0;
  csvimp->add_option("--input", csv_inputs, "one file per series")->required();
  csvimp->add_option("--out", csv_out)->required();
  csvimp->add_option("--label", csv_label, "label applied to all inputs (-1 = unlabeled)");
  csvimp->add_option("--classes", csv_classes);
  csvimp->add_option("--t-max", csv_tmax, "default: max time seen");

  CLI11_PARSE(app, argc, argv);
  json cfg = load_config_file(config_path);

  if (synth->parsed()) {
    overlay(cfg, *synth, "--num-series", "num_series", synth_n);
    overlay(cfg, *synth, "--classes", "classes", synth_classes);
    overlay(cfg, *synth, "--n-min", "n_min", synth_nmin);
    overlay(cfg, *synth, "--n-max", "n_max", synth_nmax);
    overlay(cfg, *synth, "--t-max", "t_max", synth_tmax);
    overlay(cfg, *synth, "--seed", "seed", synth_seed);
    overlay(cfg, *synth, "--alpha", "alpha", synth_alpha);
    overlay(cfg, *synth, "--beta", "beta", synth_beta);
    overlay(cfg, *synth, "--gamma", "gamma", synth_gamma);
    overlay(cfg, *synth, "--class-structure", "class_structure", synth_structure);
    overlay(cfg, *synth, "--template-amplitude", "template_amplitude", synth_amp);
    if (!cfg.contains("num_series")) cfg["num_series"] = synth_n;
    if (!cfg.contains("classes")) cfg["classes"] = synth_classes;

    DatasetHandle data;
    gpa_status status = gpa_dataset_synth(cfg.dump().c_str(), &data.ptr);
    if (status != GPA_OK) return fail(status);
    status = gpa_dataset_save(data.ptr, synth_out.c_str());
    if (status != GPA_OK) return fail(status);
    std::cout << "wrote " << synth_out << "\n";
    return 0;
  }

  if (subsample->parsed()) {
    DatasetHandle in, out;
    gpa_status status = gpa_dataset_load(sub_in.c_str(), &in.ptr);
    if (status != GPA_OK) return fail(status);
    status = gpa_dataset_subsample(in.ptr, sub_fraction, sub_seed, &out.ptr);
    if (status != GPA_OK) return fail(status);
    status = gpa_dataset_save(out.ptr, sub_out.c_str());
    if (status != GPA_OK) return fail(status);
    std::cout << "wrote " << sub_out << "\n";
    return 0;
  }

  if (approx->parsed()) {
    overlay(cfg, *approx, "--seed", "seed", approx_seed);
    const gpa_status status =
        gpa_experiment_approx_error(cfg.dump().c_str(), approx_out.c_str());
    if (status != GPA_OK) return fail(status);
    std::cout << "wrote " << approx_out << "\n";
    return 0;
  }

  if (timing->parsed()) {
    overlay(cfg, *timing, "--m", "m", timing_m);
    overlay(cfg, *timing, "--k", "k", timing_k);
    overlay(cfg, *timing, "--reps", "reps", timing_reps);
    overlay(cfg, *timing, "--exact-reps", "exact_reps", timing_exact_reps);
    const gpa_status status = gpa_experiment_timing(cfg.dump().c_str(), timing_out.c_str());
    if (status != GPA_OK) return fail(status);
    std::cout << "wrote " << timing_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    overlay(cfg, *train, "--classifier", "classifier", train_classifier);
    overlay(cfg, *train, "--framework", "framework", train_framework);
    overlay(cfg, *train, "--regime", "regime", train_regime);
    overlay(cfg, *train, "--mode", "mode", train_mode);
    overlay(cfg, *train, "--d", "d", train_d);
    overlay(cfg, *train, "--m", "m", train_m);
    overlay(cfg, *train, "--k", "k", train_k);
    overlay(cfg, *train, "--samples", "samples", train_samples);
    overlay(cfg, *train, "--seed", "seed", train_seed);
    overlay(cfg, *train, "--lr", "lr", train_lr);
    overlay(cfg, *train, "--epochs", "epochs", train_epochs);

    DatasetHandle data;
    gpa_status status = gpa_dataset_load(train_data.c_str(), &data.ptr);
    if (status != GPA_OK) return fail(status);

    const std::string history_path =
        train_history.empty() ? train_out + ".history.csv" : train_history;
    ModelHandle model;
    status = gpa_train(data.ptr, cfg.dump().c_str(), &model.ptr, history_path.c_str());
    if (status != GPA_OK) return fail(status);
    status = gpa_model_save(model.ptr, train_out.c_str());
    if (status != GPA_OK) return fail(status);
    write_text(train_out + ".config.json", cfg.dump(2) + "\n");  // resolved-config echo
    std::cout << "wrote " << train_out << " (+history, +config echo)\n";
    return 0;
  }

  if (eval->parsed()) {
    DatasetHandle data;
    gpa_status status = gpa_dataset_load(eval_data.c_str(), &data.ptr);
    if (status != GPA_OK) return fail(status);
    ModelHandle model;
    status = gpa_model_load(eval_model.c_str(), &model.ptr);
    if (status != GPA_OK) return fail(status);

    char* metrics_json = nullptr;
    status = gpa_evaluate(model.ptr, data.ptr, &metrics_json);
    if (status != GPA_OK) return fail(status);
    const json metrics = json::parse(metrics_json);
    gpa_string_free(metrics_json);

    std::ostringstream csv;
    csv.precision(10);
    csv << "metric,value\n";
    csv << "accuracy," << metrics.at("accuracy").get<double>() << "\n";
    csv << "mean_loss," << metrics.at("mean_loss").get<double>() << "\n";
    const auto& pca = metrics.at("per_class_accuracy");
    for (size_t c = 0; c < pca.size(); ++c)
      csv << "class_" << c << "_accuracy," << pca[c].get<double>() << "\n";
    write_text(eval_out, csv.str());
    std::cout << "accuracy " << metrics.at("accuracy").get<double>() << "\n";
    return 0;
  }

  if (grid->parsed()) {
    DatasetHandle train_set, test_set;
    gpa_status status = gpa_dataset_load(grid_train.c_str(), &train_set.ptr);
    if (status != GPA_OK) return fail(status);
    status = gpa_dataset_load(grid_test.c_str(), &test_set.ptr);
    if (status != GPA_OK) return fail(status);

    struct Cell {
      const char* classifier;
      const char* regime;
      const char* framework;
    };
    std::vector<Cell> cells;
    for (const char* clf : {"logreg", "mlp", "convnet"})
      for (const char* regime : {"two_stage", "end_to_end"})
        for (const char* framework : {"imp", "uac"}) cells.push_back({clf, regime, framework});
    for (const char* regime : {"two_stage", "end_to_end"})
      cells.push_back({"meg", regime, "uac"});

    std::ostringstream csv;
    csv << "classifier,regime,framework,accuracy\n";
    for (const Cell& cell : cells) {
      json c = cfg;
      c["classifier"] = cell.classifier;
      c["regime"] = cell.regime;
      c["framework"] = cell.framework;
      c["seed"] = grid_seed;
      ModelHandle model;
      status = gpa_train(train_set.ptr, c.dump().c_str(), &model.ptr, nullptr);
      if (status != GPA_OK) return fail(status);
      char* metrics_json = nullptr;
      status = gpa_evaluate(model.ptr, test_set.ptr, &metrics_json);
      if (status != GPA_OK) return fail(status);
      const double acc = json::parse(metrics_json).at("accuracy").get<double>();
      gpa_string_free(metrics_json);
      csv << cell.classifier << "," << cell.regime << "," << cell.framework << "," << acc
          << "\n";
      std::cout << cell.classifier << "/" << cell.regime << "/" << cell.framework << ": "
                << acc << "\n";
    }
    write_text(grid_out, csv.str());
    return 0;
  }

  if (uwave->parsed()) {
    std::ifstream in(uwave_in);
    if (!in) {
      std::cerr << "error: cannot open " << uwave_in << "\n";
      return 2;
    }
    std::vector<RawSeries> all;
    int min_label = std::numeric_limits<int>::max(), max_label = 0;
    std::string line;
    while (std::getline(in, line)) {
      const std::vector<std::string> tok = split_tokens(line);
      if (tok.size() < 2) continue;
      RawSeries s;
      s.label = static_cast<int>(std::lround(std::stod(tok[0])));
      const size_t n = tok.size() - 1;
      s.times.resize(n);
      s.values.resize(n);
      for (size_t i = 0; i < n; ++i) {
        s.times[i] = uwave_tmax * static_cast<double>(i) / static_cast<double>(n - 1);
        s.values[i] = std::stod(tok[i + 1]);
      }
      min_label = std::min(min_label, s.label);
      max_label = std::max(max_label, s.label);
      all.push_back(std::move(s));
    }
    if (all.empty()) {
      std::cerr << "error: no series found in " << uwave_in << "\n";
      return 2;
    }
    for (RawSeries& s : all) s.label -= min_label;  // labels to 0-based
    return save_raw_series(all, uwave_tmax, max_label - min_label + 1, uwave_out);
  }

  if (csvimp->parsed()) {
    std::vector<RawSeries> all;
    double max_time = 0.0;
    for (const std::string& path : csv_inputs) {
      std::ifstream in(path);
      if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        return 2;
      }
      RawSeries s;
      s.label = csv_label;
      std::string line;
      while (std::getline(in, line)) {
        const std::vector<std::string> tok = split_tokens(line);
        if (tok.size() < 2) continue;
        try {
          const double t = std::stod(tok[0]);
          const double v = std::stod(tok[1]);
          s.times.push_back(t);
          s.values.push_back(v);
          max_time = std::max(max_time, t);
        } catch (const std::exception&) {
          continue;  // header or malformed line
        }
      }
      if (s.times.empty()) {
        std::cerr << "error: no (time, value) rows in " << path << "\n";
        return 2;
      }
      all.push_back(std::move(s));
    }
    const double t_max = csv_tmax > 0.0 ? csv_tmax : max_time;
    const int classes = csv_classes > 0 ? csv_classes : (csv_label >= 0 ? csv_label + 1 : 0);
    return save_raw_series(all, t_max, classes, csv_out);
  }

  return 0;
}
