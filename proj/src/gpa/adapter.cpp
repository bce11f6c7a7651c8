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

#include "gpa/adapter.hpp"

#include <random>

namespace gpa {

void AdapterConfig::validate() const {
  require(ref_times.size() >= 1, "AdapterConfig: ref_times must be non-empty");
  require(m >= 4, "AdapterConfig: m must be >= 4");
  require(lanczos_k >= 1, "AdapterConfig: lanczos_k must be >= 1");
  require(num_samples >= 1, "AdapterConfig: num_samples must be >= 1");
  for (Index i = 1; i < ref_times.size(); ++i)
    require(ref_times[i] > ref_times[i - 1], "AdapterConfig: ref_times must be increasing");
}

Vec AdapterConfig::even_ref_times(Index d, double t_max) {
  require(d >= 1, "even_ref_times: d must be >= 1");
  Vec x(d);
  if (d == 1) {
    x[0] = 0.5 * t_max;
    return x;
  }
  for (Index i = 0; i < d; ++i)
    x[i] = t_max * static_cast<double>(i) / static_cast<double>(d - 1);
  return x;
}

Mat standard_normal(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

namespace {

AdapterOutput forward_exact(const TimeSeries& series, const GpParams& params,
                            const AdapterConfig& cfg, const Mat& xi, bool keep_tape) {
  const GaussianRepr repr = exact_posterior(series, cfg.ref_times, params);
  AdapterOutput out;
  out.mean = repr.mean;
  if (cfg.framework == Framework::kImp) {
    out.samples = repr.mean;
  } else {
    const Mat root = sym_sqrt(repr.cov);
    out.samples = (root * xi).colwise() + repr.mean;
  }
  if (keep_tape) {
    out.tape = std::make_shared<AdapterOutput::Tape>();
    out.tape->series = series;
    out.tape->params = params;
    out.tape->cfg = cfg;
    out.tape->xi = xi;
  }
  return out;
}

AdapterOutput forward_ski(const TimeSeries& series, const GpParams& params,
                          const AdapterConfig& cfg, const Mat& xi, bool keep_tape) {
  SkiOperator::Options opts;
  opts.m = cfg.m;
  opts.cg = cfg.cg;
  auto op = std::make_shared<const SkiOperator>(series, cfg.ref_times, params, opts);

  AdapterOutput out;
  out.mean = op->posterior_mean();
  if (keep_tape) {
    out.tape = std::make_shared<AdapterOutput::Tape>();
    out.tape->series = series;
    out.tape->params = params;
    out.tape->cfg = cfg;
    out.tape->xi = xi;
    out.tape->op = op;
  }
  if (cfg.framework == Framework::kImp) {
    out.samples = out.mean;
    return out;
  }

  const Index s = xi.cols();
  out.samples.resize(cfg.d(), s);
  if (keep_tape) {
    // one Lanczos recursion per sample so the tape matches the computation
    out.tape->lanczos.resize(s);
    out.tape->cov_records.resize(s);
    for (Index j = 0; j < s; ++j) {
      if (xi.col(j).norm() == 0.0) {
        out.samples.col(j) = out.mean;  // Sigma^{1/2} 0 = 0
        continue;
      }
      auto& records = out.tape->cov_records[j];
      auto matvec = [&op, &records](const Vec& v) {
        SkiOperator::CovRecord rec;
        Vec y = op->cov_matvec(v, &rec);
        records.push_back(std::move(rec));
        return y;
      };
      LanczosResult res = lanczos_sqrt_vec(matvec, xi.col(j), cfg.lanczos_k, true);
      out.samples.col(j) = out.mean + res.approx;
      out.tape->lanczos[j] = std::move(res.record);
    }
  } else {
    auto matvec = [&op](const Vec& v) { return op->cov_matvec(v); };
    if (xi.colwise().norm().maxCoeff() == 0.0) {
      out.samples = out.mean.replicate(1, s);
    } else {
      const BlockLanczosResult res = block_lanczos_sqrt(matvec, xi, cfg.lanczos_k);
      out.samples = res.approx.colwise() + out.mean;
    }
  }
  return out;
}

}  // namespace

AdapterOutput adapt_forward(const TimeSeries& series, const GpParams& params,
                            const AdapterConfig& cfg, const Mat* noise, bool keep_tape) {
  cfg.validate();
  series.validate();

  Mat xi;
  if (cfg.framework == Framework::kUac) {
    if (noise) {
      require(noise->rows() == cfg.d() && noise->cols() == cfg.num_samples,
              "adapt_forward: noise must be d x num_samples");
      xi = *noise;
    } else {
      xi = standard_normal(cfg.d(), cfg.num_samples, cfg.seed);
    }
  }

  return cfg.mode == AdapterMode::kExact ? forward_exact(series, params, cfg, xi, keep_tape)
                                         : forward_ski(series, params, cfg, xi, keep_tape);
}

ParamGrad adapt_backward(const AdapterOutput& output, const Mat& upstream) {
  if (!output.tape) throw InvalidState("adapt_backward: no tape retained");
  const AdapterOutput::Tape& tape = *output.tape;
  require(upstream.rows() == output.samples.rows() && upstream.cols() == output.samples.cols(),
          "adapt_backward: upstream shape mismatch");

  ParamGrad grad;
  if (tape.cfg.mode == AdapterMode::kExact) {
    const Index d = upstream.rows();
    for (Index j = 0; j < upstream.cols(); ++j) {
      const Vec xi_j = tape.xi.size() > 0 ? Vec(tape.xi.col(j)) : Vec(Vec::Zero(d));
      const PosteriorSampleGrad g =
          exact_posterior_grad(tape.series, tape.cfg.ref_times, tape.params, xi_j);
      grad.d_alpha += upstream.col(j).dot(g.d_alpha);
      grad.d_beta += upstream.col(j).dot(g.d_beta);
      grad.d_gamma += upstream.col(j).dot(g.d_gamma);
    }
    return grad;
  }

  // SKI mode: mean path once over the summed upstream, sample path per column.
  const SkiOperator& op = *tape.op;
  grad += op.mean_grad(upstream.rowwise().sum());
  if (tape.cfg.framework == Framework::kUac) {
    for (Index j = 0; j < upstream.cols(); ++j) {
      if (tape.xi.col(j).norm() == 0.0) continue;
      const auto& records = tape.cov_records[j];
      SigmaPullback pullback;
      pullback.params = [&op, &records](Index iter, const Vec& dvec, const Vec& up) {
        return op.cov_grad(dvec, up, records.at(static_cast<size_t>(iter)));
      };
      pullback.apply = [&op](const Vec& v) { return op.cov_matvec(v); };
      grad += lanczos_backprop(tape.lanczos[j], pullback, upstream.col(j));
    }
  }
  return grad;
}

}  // namespace gpa
