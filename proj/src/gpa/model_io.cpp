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

#include "gpa/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gpa {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json tensor(const Mat& m) {
  json t;
  t["shape"] = {m.rows(), m.cols()};
  t["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return t;
}

json tensor(const Vec& v) {
  json t;
  t["shape"] = {v.size()};
  t["data"] = std::vector<double>(v.data(), v.data() + v.size());
  return t;
}

Mat mat_from(const json& t) {
  const auto shape = t.at("shape");
  require(shape.size() == 2, "model_from_json: expected rank-2 tensor");
  Mat m(shape[0].get<Index>(), shape[1].get<Index>());
  const auto& data = t.at("data");
  require(static_cast<Index>(data.size()) == m.size(), "model_from_json: tensor size mismatch");
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = data[static_cast<size_t>(i)].get<double>();
  return m;
}

Vec vec_from(const json& t) {
  const auto shape = t.at("shape");
  require(shape.size() == 1, "model_from_json: expected rank-1 tensor");
  Vec v(shape[0].get<Index>());
  const auto& data = t.at("data");
  require(static_cast<Index>(data.size()) == v.size(), "model_from_json: tensor size mismatch");
  for (Index i = 0; i < v.size(); ++i) v[i] = data[static_cast<size_t>(i)].get<double>();
  return v;
}

json layer_to_json(const Layer& layer) {
  json j;
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    j["kind"] = "dense";
    j["w"] = tensor(d->w);
    j["b"] = tensor(d->b);
  } else if (std::holds_alternative<ReluLayer>(layer)) {
    j["kind"] = "relu";
  } else if (const auto* c = std::get_if<Conv1dLayer>(&layer)) {
    j["kind"] = "conv1d";
    json filters = json::array();
    for (const Mat& w : c->w) filters.push_back(tensor(w));
    j["filters"] = filters;
    j["b"] = tensor(c->b);
  } else {
    j["kind"] = "maxpool1d";
    j["size"] = std::get<MaxPool1dLayer>(layer).size;
  }
  return j;
}

Layer layer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") return DenseLayer{mat_from(j.at("w")), vec_from(j.at("b"))};
  if (kind == "relu") return ReluLayer{};
  if (kind == "conv1d") {
    Conv1dLayer c;
    for (const json& f : j.at("filters")) c.w.push_back(mat_from(f));
    c.b = vec_from(j.at("b"));
    return c;
  }
  if (kind == "maxpool1d") return MaxPool1dLayer{j.at("size").get<Index>()};
  throw InvalidArgument("model_from_json: unknown layer kind " + kind);
}

ClassifierKind kind_from_name(const std::string& name) {
  if (name == "logreg") return ClassifierKind::kLogReg;
  if (name == "mlp") return ClassifierKind::kMlp;
  if (name == "convnet") return ClassifierKind::kConvNet;
  if (name == "meg") return ClassifierKind::kMeg;
  throw InvalidArgument("model_from_json: unknown classifier kind " + name);
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json j;
  j["format"] = "gpadapter-model";
  j["version"] = kFormatVersion;
  j["gp"] = {{"alpha", model.gp.alpha}, {"beta", model.gp.beta}, {"gamma", model.gp.gamma}};
  j["classifier_kind"] = classifier_kind_name(model.kind);
  j["num_classes"] = model.num_classes;

  json a;
  a["ref_times"] = tensor(model.adapter.ref_times);
  a["m"] = model.adapter.m;
  a["k"] = model.adapter.lanczos_k;
  a["samples"] = model.adapter.num_samples;
  a["mode"] = model.adapter.mode == AdapterMode::kExact ? "exact" : "ski";
  a["framework"] = model.adapter.framework == Framework::kUac ? "uac" : "imp";
  a["seed"] = model.adapter.seed;
  a["cg_tol"] = model.adapter.cg.tol;
  a["cg_max_iter"] = model.adapter.cg.max_iter;
  j["adapter"] = a;

  json clf;
  clf["input_dim"] = model.clf.input_dim;
  clf["num_classes"] = model.clf.num_classes;
  json layers = json::array();
  for (const Layer& layer : model.clf.layers) layers.push_back(layer_to_json(layer));
  clf["layers"] = layers;
  j["classifier"] = clf;

  if (model.meg) {
    j["meg"] = {{"directions", tensor(model.meg->directions)},
                {"phases", tensor(model.meg->phases)}};
  }
  return j.dump();
}

TrainedModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  require(j.value("format", "") == "gpadapter-model", "model_from_json: not a model file");
  require(j.value("version", 0) == kFormatVersion, "model_from_json: unsupported version");

  TrainedModel model;
  model.gp.alpha = j.at("gp").at("alpha").get<double>();
  model.gp.beta = j.at("gp").at("beta").get<double>();
  model.gp.gamma = j.at("gp").at("gamma").get<double>();
  model.kind = kind_from_name(j.at("classifier_kind").get<std::string>());
  model.num_classes = j.at("num_classes").get<int>();

  const json& a = j.at("adapter");
  model.adapter.ref_times = vec_from(a.at("ref_times"));
  model.adapter.m = a.at("m").get<Index>();
  model.adapter.lanczos_k = a.at("k").get<int>();
  model.adapter.num_samples = a.at("samples").get<int>();
  model.adapter.mode =
      a.at("mode").get<std::string>() == "exact" ? AdapterMode::kExact : AdapterMode::kSki;
  model.adapter.framework =
      a.at("framework").get<std::string>() == "imp" ? Framework::kImp : Framework::kUac;
  model.adapter.seed = a.at("seed").get<std::uint64_t>();
  model.adapter.cg.tol = a.at("cg_tol").get<double>();
  model.adapter.cg.max_iter = a.at("cg_max_iter").get<int>();

  const json& clf = j.at("classifier");
  model.clf.input_dim = clf.at("input_dim").get<Index>();
  model.clf.num_classes = clf.at("num_classes").get<Index>();
  for (const json& l : clf.at("layers")) model.clf.layers.push_back(layer_from_json(l));

  if (j.contains("meg")) {
    MegFeatureBank bank;
    bank.directions = mat_from(j.at("meg").at("directions"));
    bank.phases = vec_from(j.at("meg").at("phases"));
    model.meg = std::move(bank);
  }
  return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("save_model: cannot open " + path);
  out << model_to_json(model) << "\n";
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("load_model: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace gpa
