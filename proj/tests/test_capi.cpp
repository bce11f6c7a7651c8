#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gpadapter.h>

#include <json.hpp>

#include <cstring>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct Dataset {
  gpa_dataset* ptr = nullptr;
  ~Dataset() { gpa_dataset_free(ptr); }
};
struct Model {
  gpa_model* ptr = nullptr;
  ~Model() { gpa_model_free(ptr); }
};

const char* kSynthConfig = R"({
  "num_series": 40, "classes": 2, "n_min": 10, "n_max": 18, "t_max": 1.0,
  "seed": 5, "alpha": 0.0, "beta": 3.2, "gamma": -3.0,
  "class_structure": "mean", "template_amplitude": 2.0
})";

const char* kTrainConfig = R"({
  "classifier": "logreg", "framework": "imp", "regime": "end_to_end",
  "mode": "ski", "d": 8, "m": 16, "k": 3, "samples": 2, "seed": 1,
  "lr": 0.05, "epochs": 10, "patience": 10, "init_beta": 3.2, "init_gamma": -2.3
})";

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(gpa_version()) > 0);
  gpa_dataset* out = nullptr;
  CHECK(gpa_dataset_load("/nonexistent/missing.jsonl", &out) == GPA_ERROR_INVALID_ARGUMENT);
  CHECK(std::strlen(gpa_last_error()) > 0);
  CHECK(out == nullptr);
}

TEST_CASE("dataset synth, info, save, load, subsample") {
  Dataset data;
  REQUIRE(gpa_dataset_synth(kSynthConfig, &data.ptr) == GPA_OK);

  char* info = nullptr;
  REQUIRE(gpa_dataset_info(data.ptr, &info) == GPA_OK);
  const json j = json::parse(info);
  gpa_string_free(info);
  CHECK(j.at("size").get<int>() == 40);
  CHECK(j.at("classes").get<int>() == 2);

  REQUIRE(gpa_dataset_save(data.ptr, "/tmp/gpa_capi_data.jsonl") == GPA_OK);
  Dataset loaded;
  REQUIRE(gpa_dataset_load("/tmp/gpa_capi_data.jsonl", &loaded.ptr) == GPA_OK);

  Dataset sub;
  REQUIRE(gpa_dataset_subsample(loaded.ptr, 0.5, 3, &sub.ptr) == GPA_OK);

  // bad fraction surfaces as invalid argument with a message
  gpa_dataset* bad = nullptr;
  CHECK(gpa_dataset_subsample(loaded.ptr, 0.0, 3, &bad) == GPA_ERROR_INVALID_ARGUMENT);

  // malformed config JSON
  gpa_dataset* nope = nullptr;
  CHECK(gpa_dataset_synth("{not json", &nope) == GPA_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("train, predict, evaluate, model round trip") {
  Dataset data;
  REQUIRE(gpa_dataset_synth(kSynthConfig, &data.ptr) == GPA_OK);

  Model model;
  REQUIRE(gpa_train(data.ptr, kTrainConfig, &model.ptr, "/tmp/gpa_capi_history.csv") == GPA_OK);

  char* metrics = nullptr;
  REQUIRE(gpa_evaluate(model.ptr, data.ptr, &metrics) == GPA_OK);
  const json m = json::parse(metrics);
  gpa_string_free(metrics);
  CHECK(m.at("accuracy").get<double>() >= 0.8);
  CHECK(m.at("per_class_accuracy").size() == 2);

  // prediction on a raw series
  std::vector<double> times{0.1, 0.3, 0.5, 0.8};
  std::vector<double> values{2.0, 2.1, 1.9, 2.0};
  int label = -1;
  REQUIRE(gpa_predict(model.ptr, times.data(), values.data(), 4, &label) == GPA_OK);
  CHECK((label == 0 || label == 1));

  // checkpoint round trip preserves predictions
  REQUIRE(gpa_model_save(model.ptr, "/tmp/gpa_capi_model.json") == GPA_OK);
  Model back;
  REQUIRE(gpa_model_load("/tmp/gpa_capi_model.json", &back.ptr) == GPA_OK);
  int label2 = -1;
  REQUIRE(gpa_predict(back.ptr, times.data(), values.data(), 4, &label2) == GPA_OK);
  CHECK(label2 == label);

  // history CSV landed with the expected header
  FILE* f = std::fopen("/tmp/gpa_capi_history.csv", "r");
  REQUIRE(f != nullptr);
  char line[128] = {0};
  REQUIRE(std::fgets(line, sizeof(line), f) != nullptr);
  std::fclose(f);
  CHECK(std::string(line).rfind("epoch,train_loss,val_acc", 0) == 0);
}

TEST_CASE("dataset create from raw arrays") {
  std::vector<double> t0{0.1, 0.2, 0.9};
  std::vector<double> v0{1.0, -1.0, 0.5};
  std::vector<double> t1{0.05, 0.4};
  std::vector<double> v1{0.3, 0.6};
  const double* times[] = {t0.data(), t1.data()};
  const double* values[] = {v0.data(), v1.data()};
  const size_t lengths[] = {3, 2};
  const int labels[] = {0, 1};

  Dataset data;
  REQUIRE(gpa_dataset_create(times, values, lengths, labels, 2, 1.0, 2, &data.ptr) == GPA_OK);
  char* info = nullptr;
  REQUIRE(gpa_dataset_info(data.ptr, &info) == GPA_OK);
  CHECK(json::parse(info).at("size").get<int>() == 2);
  gpa_string_free(info);

  // non-increasing times rejected
  std::vector<double> tb{0.5, 0.5};
  const double* times_b[] = {tb.data()};
  const double* values_b[] = {v1.data()};
  const size_t lengths_b[] = {2};
  gpa_dataset* bad = nullptr;
  CHECK(gpa_dataset_create(times_b, values_b, lengths_b, nullptr, 1, 1.0, 0, &bad) ==
        GPA_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("experiment csv emitters") {
  const char* cfg = R"({
    "lengths": [60], "m_sweep": [16, 32], "k_sweep": [2, 4],
    "k_fixed": 4, "m_fixed": 32, "seed": 2, "beta": 3.5, "gamma": -3.0
  })";
  REQUIRE(gpa_experiment_approx_error(cfg, "/tmp/gpa_capi_approx.csv") == GPA_OK);
  FILE* f = std::fopen("/tmp/gpa_capi_approx.csv", "r");
  REQUIRE(f != nullptr);
  char line[128] = {0};
  REQUIRE(std::fgets(line, sizeof(line), f) != nullptr);
  std::fclose(f);
  CHECK(std::string(line) == "sweep,n,m,k,error\n");

  const char* tcfg = R"({"lengths": [50], "m": 16, "k": 3, "reps": 1, "exact_reps": 1})";
  REQUIRE(gpa_experiment_timing(tcfg, "/tmp/gpa_capi_timing.csv") == GPA_OK);
  f = std::fopen("/tmp/gpa_capi_timing.csv", "r");
  REQUIRE(f != nullptr);
  REQUIRE(std::fgets(line, sizeof(line), f) != nullptr);
  std::fclose(f);
  CHECK(std::string(line) == "method,n,seconds\n");
}
