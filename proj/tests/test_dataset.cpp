#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpa/dataset.hpp"
#include "test_util.hpp"

#include <sstream>

using namespace gpa;
using namespace gpa::testing;

namespace {

std::string roundtrip_text(const Dataset& data) {
  std::ostringstream out;
  write_jsonl(data, out);
  return out.str();
}

}  // namespace

TEST_CASE("jsonl write-then-read is identity") {
  auto rng = make_rng(111);
  Dataset data;
  data.t_max = 2.5;
  data.num_classes = 3;
  for (int i = 0; i < 5; ++i) {
    TimeSeries s = random_series(4 + i, 2.5, rng);
    s.label = i % 3;
    data.series.push_back(std::move(s));
  }
  data.series.push_back(random_series(3, 2.5, rng));  // unlabeled

  const std::string text = roundtrip_text(data);
  std::istringstream in(text);
  const Dataset back = read_jsonl(in);

  CHECK(back.t_max == data.t_max);
  CHECK(back.num_classes == data.num_classes);
  REQUIRE(back.series.size() == data.series.size());
  for (size_t i = 0; i < data.series.size(); ++i) {
    CHECK(back.series[i].label == data.series[i].label);
    CHECK((back.series[i].times - data.series[i].times).norm() == 0.0);
    CHECK((back.series[i].values - data.series[i].values).norm() == 0.0);
  }
  // and the re-serialization is byte identical
  CHECK(roundtrip_text(back) == text);
}

TEST_CASE("synth dataset determinism and empty case") {
  SynthConfig cfg;
  cfg.num_series = 0;
  cfg.seed = 3;
  const Dataset empty = synth_dataset(cfg);
  CHECK(empty.series.empty());
  CHECK(roundtrip_text(empty).find("\"T\"") != std::string::npos);

  cfg.num_series = 12;
  cfg.classes = 3;
  cfg.class_structure = "mean";
  const Dataset a = synth_dataset(cfg);
  const Dataset b = synth_dataset(cfg);
  CHECK(roundtrip_text(a) == roundtrip_text(b));
  CHECK(a.series[0].label == 0);
  CHECK(a.series[1].label == 1);

  cfg.class_structure = "bogus";
  CHECK_THROWS_AS(synth_dataset(cfg), InvalidArgument);
}

TEST_CASE("synth prior marginals match the kernel amplitude") {
  SynthConfig cfg;
  cfg.num_series = 2000;
  cfg.n_min = 3;
  cfg.n_max = 6;
  cfg.params.alpha = std::log(1.7);
  cfg.params.beta = std::log(40.0);
  cfg.params.gamma = std::log(1e-6);
  cfg.seed = 9;
  const Dataset data = synth_dataset(cfg);

  double sq_sum = 0.0;
  std::size_t count = 0;
  for (const TimeSeries& s : data.series) {
    sq_sum += s.values.squaredNorm();
    count += static_cast<std::size_t>(s.size());
  }
  const double var_est = sq_sum / static_cast<double>(count);
  const double want = cfg.params.amplitude() + cfg.params.noise_var();
  // marginal of every point is N(0, a + sigma^2); points within a series are
  // correlated, so bound the standard error by the series count, not the
  // point count
  const double se = want * std::sqrt(2.0 / static_cast<double>(data.series.size()));
  CHECK(std::abs(var_est - want) < 3.0 * se);
}

TEST_CASE("subsample keeps floor(fraction n) sorted points") {
  auto rng = make_rng(112);
  Dataset data;
  data.t_max = 1.0;
  data.num_classes = 1;
  TimeSeries s = random_series(945, 1.0, rng);
  s.label = 0;
  data.series.push_back(s);

  const Dataset sub = subsample_dataset(data, 0.10, 4);
  REQUIRE(sub.series.size() == 1);
  CHECK(sub.series[0].size() == 94);  // floor rule
  for (Index i = 1; i < sub.series[0].size(); ++i)
    CHECK(sub.series[0].times[i] > sub.series[0].times[i - 1]);

  // kept points are an exact subset of the original
  Index cursor = 0;
  for (Index i = 0; i < sub.series[0].size(); ++i) {
    while (cursor < s.size() && s.times[cursor] != sub.series[0].times[i]) ++cursor;
    REQUIRE(cursor < s.size());
    CHECK(s.values[cursor] == sub.series[0].values[i]);
  }

  // identity at fraction 1
  const Dataset all = subsample_dataset(data, 1.0, 4);
  CHECK((all.series[0].times - s.times).norm() == 0.0);

  // determinism
  CHECK(roundtrip_text(subsample_dataset(data, 0.10, 4)) == roundtrip_text(sub));

  // a fraction leaving zero points is rejected
  Dataset tiny;
  tiny.t_max = 1.0;
  tiny.num_classes = 1;
  TimeSeries t = random_series(5, 1.0, rng);
  t.label = 0;
  tiny.series.push_back(t);
  CHECK_THROWS_AS(subsample_dataset(tiny, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(subsample_dataset(tiny, 0.0, 1), InvalidArgument);
}

TEST_CASE("dataset file round trip") {
  auto rng = make_rng(113);
  Dataset data;
  data.t_max = 1.0;
  data.num_classes = 2;
  for (int i = 0; i < 3; ++i) {
    TimeSeries s = random_series(6, 1.0, rng);
    s.label = i % 2;
    data.series.push_back(std::move(s));
  }
  const std::string path = "/tmp/gpa_test_dataset.jsonl";
  save_dataset(data, path);
  const Dataset back = load_dataset(path);
  CHECK(roundtrip_text(back) == roundtrip_text(data));

  CHECK_THROWS_AS(load_dataset("/nonexistent/nope.jsonl"), InvalidArgument);
}
