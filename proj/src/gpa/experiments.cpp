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

#include "gpa/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

namespace gpa {

namespace {

TimeSeries synth_one(Index n, double t_max, const GpParams& params, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_series = 1;
  cfg.classes = 1;
  cfg.n_min = n;
  cfg.n_max = n;
  cfg.t_max = t_max;
  cfg.params = params;
  cfg.seed = seed;
  return synth_dataset(cfg).series[0];
}

Vec ski_sample(const TimeSeries& series, const Vec& ref_times, const GpParams& params,
               Index m, int k, const Vec& xi, const CgOptions& cg) {
  SkiOperator::Options opts;
  opts.m = m;
  opts.cg = cg;
  const SkiOperator op(series, ref_times, params, opts);
  const Vec mean = op.posterior_mean();
  auto matvec = [&op](const Vec& v) { return op.cov_matvec(v); };
  return mean + lanczos_sqrt_vec(matvec, xi, k, false).approx;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

template <typename F>
double time_median(int reps, F&& fn) {
  std::vector<double> times;
  times.reserve(static_cast<size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  return median(std::move(times));
}

}  // namespace

std::vector<ApproxErrorRow> run_approx_error(const ApproxErrorConfig& cfg) {
  std::vector<ApproxErrorRow> rows;
  for (Index n : cfg.lengths) {
    const TimeSeries series =
        synth_one(n, cfg.t_max, cfg.params, mix_seed(cfg.seed, static_cast<std::uint64_t>(n)));
    const Vec ref_times = AdapterConfig::even_ref_times(n, cfg.t_max);
    const Vec xi =
        standard_normal(n, 1, mix_seed(cfg.seed, static_cast<std::uint64_t>(n), 0x71)).col(0);

    // exact draw, computed once per length
    const GaussianRepr repr = exact_posterior(series, ref_times, cfg.params);
    const Vec z_exact = exact_sample(repr, xi);

    for (Index m : cfg.m_sweep) {
      const Vec z = ski_sample(series, ref_times, cfg.params, m, cfg.k_fixed, xi, cfg.cg);
      rows.push_back({"m", n, m, cfg.k_fixed, (z - z_exact).norm()});
    }
    for (int k : cfg.k_sweep) {
      const Vec z = ski_sample(series, ref_times, cfg.params, cfg.m_fixed, k, xi, cfg.cg);
      rows.push_back({"k", n, cfg.m_fixed, k, (z - z_exact).norm()});
    }
  }
  return rows;
}

void write_approx_error_csv(const std::vector<ApproxErrorRow>& rows, std::ostream& out) {
  out << "sweep,n,m,k,error\n";
  out.precision(12);
  for (const ApproxErrorRow& r : rows)
    out << r.sweep << "," << r.n << "," << r.m << "," << r.k << "," << r.error << "\n";
}

std::vector<TimingRow> run_timing(const TimingConfig& cfg) {
  std::vector<TimingRow> rows;
  for (Index n : cfg.lengths) {
    const TimeSeries series =
        synth_one(n, cfg.t_max, cfg.params, mix_seed(cfg.seed, static_cast<std::uint64_t>(n)));
    const Vec ref_times = AdapterConfig::even_ref_times(n, cfg.t_max);
    const Vec xi =
        standard_normal(n, 1, mix_seed(cfg.seed, static_cast<std::uint64_t>(n), 0x71)).col(0);

    AdapterConfig acfg;
    acfg.ref_times = ref_times;
    acfg.m = cfg.m;
    acfg.lanczos_k = cfg.k;
    acfg.num_samples = 1;
    acfg.framework = Framework::kUac;
    acfg.cg = cfg.cg;

    const Mat xi_mat = xi;
    rows.push_back({"exact", n, time_median(cfg.exact_reps, [&] {
                      const GaussianRepr repr = exact_posterior(series, ref_times, cfg.params);
                      (void)exact_sample(repr, xi);
                    })});
    rows.push_back({"exact-bp", n, time_median(cfg.exact_reps, [&] {
                      (void)exact_posterior_grad(series, ref_times, cfg.params, xi);
                    })});
    rows.push_back({"lanczos", n, time_median(cfg.reps, [&] {
                      (void)ski_sample(series, ref_times, cfg.params, cfg.m, cfg.k, xi, cfg.cg);
                    })});
    rows.push_back({"lanczos-bp", n, time_median(cfg.reps, [&] {
                      acfg.mode = AdapterMode::kSki;
                      const AdapterOutput fwd =
                          adapt_forward(series, cfg.params, acfg, &xi_mat, true);
                      const Mat upstream = Mat::Ones(n, 1);
                      (void)adapt_backward(fwd, upstream);
                    })});
  }
  return rows;
}

void write_timing_csv(const std::vector<TimingRow>& rows, std::ostream& out) {
  out << "method,n,seconds\n";
  out.precision(9);
  for (const TimingRow& r : rows) out << r.method << "," << r.n << "," << r.seconds << "\n";
}

}  // namespace gpa
