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

#include "gpa/ski.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <sstream>

namespace gpa {

InducingGrid InducingGrid::cover(double lo, double hi, Index m) {
  require(m >= 4, "InducingGrid: need at least 4 inducing points");
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "InducingGrid: bad range");
  double span = hi - lo;
  if (span <= 0.0) span = 1.0;  // degenerate single-point range
  InducingGrid g;
  g.m = m;
  g.spacing = span / static_cast<double>(m - 3);
  g.start = lo - g.spacing;
  return g;
}

namespace {

// Keys (1981) cubic convolution kernel with a = -1/2, support |x| <= 2.
double keys_cubic(double x) {
  x = std::abs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

Index next_pow2(Index x) {
  Index l = 1;
  while (l < x) l <<= 1;
  return l;
}

Eigen::FFT<double>& fft_engine() {
  static thread_local Eigen::FFT<double> fft;
  return fft;
}

}  // namespace

InterpRow cubic_weights(double target, const InducingGrid& grid) {
  const Index m = grid.m;
  require(m >= 4, "cubic_weights: grid too small");
  const double pos = (target - grid.start) / grid.spacing;
  Index cell = static_cast<Index>(std::floor(pos));
  // interior band: stencil cell-1 .. cell+2 must exist
  if (cell < 1 || cell > m - 3) {
    const double fuzz = 1e-9;
    if (pos >= 1.0 - fuzz && cell < 1)
      cell = 1;
    else if (pos <= static_cast<double>(m - 2) + fuzz && cell > m - 3)
      cell = m - 3;
    else {
      std::ostringstream msg;
      msg << "cubic_weights: target " << target << " outside grid interior band ["
          << grid.point(1) << ", " << grid.point(m - 2) << "]";
      throw InvalidArgument(msg.str());
    }
  }
  const double s = pos - static_cast<double>(cell);

  InterpRow r;
  r.idx = {cell - 1, cell, cell + 1, cell + 2};
  r.w = {keys_cubic(s + 1.0), keys_cubic(s), keys_cubic(1.0 - s), keys_cubic(2.0 - s)};
  return r;
}

Vec SparseInterpMatrix::apply(const Vec& x_cols) const {
  require(x_cols.size() == cols, "SparseInterpMatrix::apply: length mismatch");
  Vec y = Vec::Zero(rows);
  for (Index i = 0; i < rows; ++i) {
    const InterpRow& r = row[i];
    double acc = 0.0;
    for (int t = 0; t < 4; ++t) acc += r.w[t] * x_cols[r.idx[t]];
    y[i] = acc;
  }
  return y;
}

Vec SparseInterpMatrix::apply_transpose(const Vec& x_rows) const {
  require(x_rows.size() == rows, "SparseInterpMatrix::apply_transpose: length mismatch");
  Vec y = Vec::Zero(cols);
  for (Index i = 0; i < rows; ++i) {
    const InterpRow& r = row[i];
    for (int t = 0; t < 4; ++t) y[r.idx[t]] += r.w[t] * x_rows[i];
  }
  return y;
}

Mat SparseInterpMatrix::to_dense() const {
  Mat w = Mat::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (int t = 0; t < 4; ++t) w(i, row[i].idx[t]) += row[i].w[t];
  return w;
}

SparseInterpMatrix build_interp_matrix(const Vec& targets, const InducingGrid& grid) {
  SparseInterpMatrix w;
  w.rows = targets.size();
  w.cols = grid.m;
  w.row.reserve(targets.size());
  for (Index i = 0; i < targets.size(); ++i) w.row.push_back(cubic_weights(targets[i], grid));
  return w;
}

ToeplitzColumn make_toeplitz(Vec first_col) {
  require(first_col.size() >= 1, "make_toeplitz: empty column");
  const Index m = first_col.size();
  const Index l = next_pow2(2 * m);
  Vec embedded = Vec::Zero(l);
  embedded.head(m) = first_col;
  for (Index j = 1; j < m; ++j) embedded[l - j] = first_col[j];

  ToeplitzColumn col;
  col.first_col = std::move(first_col);
  fft_engine().fwd(col.spectrum, embedded);
  return col;
}

Vec toeplitz_matvec(const ToeplitzColumn& col, const Vec& vec) {
  const Index m = col.first_col.size();
  require(vec.size() == m, "toeplitz_matvec: length mismatch");
  const Index l = col.spectrum.size();
  Vec padded = Vec::Zero(l);
  padded.head(m) = vec;
  Eigen::VectorXcd vhat;
  fft_engine().fwd(vhat, padded);
  vhat.array() *= col.spectrum.array();
  Vec full;
  fft_engine().inv(full, vhat);
  return full.head(m);
}

namespace {

Vec se_toeplitz_column(const InducingGrid& grid, const GpParams& params) {
  const double a = params.amplitude();
  const double b = params.inv_length();
  Vec col(grid.m);
  for (Index j = 0; j < grid.m; ++j) {
    const double lag = static_cast<double>(j) * grid.spacing;
    col[j] = a * std::exp(-b * lag * lag);
  }
  return col;
}

Vec se_toeplitz_column_dbeta(const InducingGrid& grid, const GpParams& params) {
  const double a = params.amplitude();
  const double b = params.inv_length();
  Vec col(grid.m);
  for (Index j = 0; j < grid.m; ++j) {
    const double lag2 = static_cast<double>(j) * grid.spacing * static_cast<double>(j) *
                        grid.spacing;
    col[j] = -b * lag2 * a * std::exp(-b * lag2);
  }
  return col;
}

}  // namespace

SkiOperator::SkiOperator(const TimeSeries& series, const Vec& ref_times,
                         const GpParams& params, const Options& opts)
    : params_(params), values_(series.values), cg_(opts.cg) {
  series.validate();
  require(ref_times.size() >= 1, "SkiOperator: ref_times must be non-empty");
  const double lo = std::min(series.times.minCoeff(), ref_times.minCoeff());
  const double hi = std::max(series.times.maxCoeff(), ref_times.maxCoeff());
  grid_ = InducingGrid::cover(lo, hi, opts.m);
  w_t_ = build_interp_matrix(series.times, grid_);
  w_x_ = build_interp_matrix(ref_times, grid_);
  k_uu_ = make_toeplitz(se_toeplitz_column(grid_, params));
  dk_uu_dbeta_ = make_toeplitz(se_toeplitz_column_dbeta(grid_, params));
}

Vec SkiOperator::regularized_matvec(const Vec& v) const {
  require(v.size() == n(), "regularized_matvec: length mismatch");
  Vec y = w_t_.apply(toeplitz_matvec(k_uu_, w_t_.apply_transpose(v)));
  y += params_.noise_var() * v;
  return y;
}

Vec SkiOperator::solve_regularized(const Vec& rhs) const {
  auto matvec = [this](const Vec& v) { return regularized_matvec(v); };
  return conjugate_gradient(matvec, rhs, cg_);
}

Mat SkiOperator::solve_regularized_block(const Mat& rhs) const {
  auto matvec = [this](const Vec& v) { return regularized_matvec(v); };
  return block_conjugate_gradient(matvec, rhs, cg_);
}

Vec SkiOperator::posterior_mean() const {
  if (!mean_solve_) mean_solve_ = solve_regularized(values_);
  return w_x_.apply(toeplitz_matvec(k_uu_, w_t_.apply_transpose(*mean_solve_)));
}

Vec SkiOperator::cov_matvec(const Vec& dvec, CovRecord* record) const {
  require(dvec.size() == d(), "cov_matvec: length mismatch");
  Vec alpha = w_x_.apply_transpose(dvec);
  Vec gamma = toeplitz_matvec(k_uu_, alpha);
  Vec prior = w_x_.apply(gamma);
  Vec delta = solve_regularized(w_t_.apply(gamma));
  Vec corr = w_x_.apply(toeplitz_matvec(k_uu_, w_t_.apply_transpose(delta)));
  if (record) {
    record->alpha_m = std::move(alpha);
    record->gamma_m = std::move(gamma);
    record->delta_n = std::move(delta);
  }
  return prior - corr;
}

ParamGrad SkiOperator::mean_grad(const Vec& upstream) const {
  require(upstream.size() == d(), "mean_grad: length mismatch");
  if (!mean_solve_) mean_solve_ = solve_regularized(values_);
  const Vec& a_inv_v = *mean_solve_;

  const Vec wt_a = w_t_.apply_transpose(a_inv_v);
  const Vec beta_alpha = toeplitz_matvec(k_uu_, wt_a);
  const Vec beta_beta = toeplitz_matvec(dk_uu_dbeta_, wt_a);

  // one shared block solve: A^{-1} [W_t beta_alpha, W_t beta_beta, A^{-1} v rhs]
  Mat rhs(n(), 3);
  rhs.col(0) = w_t_.apply(beta_alpha);
  rhs.col(1) = w_t_.apply(beta_beta);
  rhs.col(2) = a_inv_v;
  const Mat solved = solve_regularized_block(rhs);

  auto corr = [this](const Vec& u) {
    return w_x_.apply(toeplitz_matvec(k_uu_, w_t_.apply_transpose(u)));
  };
  const Vec grad_alpha = w_x_.apply(beta_alpha) - corr(solved.col(0));
  const Vec grad_beta = w_x_.apply(beta_beta) - corr(solved.col(1));
  const Vec grad_rho = -corr(solved.col(2));

  ParamGrad g;
  g.d_alpha = upstream.dot(grad_alpha);
  g.d_beta = upstream.dot(grad_beta);
  g.d_gamma = params_.noise_var() * upstream.dot(grad_rho);
  return g;
}

ParamGrad SkiOperator::cov_grad(const Vec& dvec, const Vec& upstream,
                                const CovRecord& record) const {
  require(dvec.size() == d() && upstream.size() == d(), "cov_grad: length mismatch");
  require(record.alpha_m.size() == grid_.m && record.delta_n.size() == n(),
          "cov_grad: stale forward record");

  const Vec wt_delta = w_t_.apply_transpose(record.delta_n);
  // beta = dK alpha, zeta = dK W_t' delta, per hyperparameter
  const Vec& beta_alpha = record.gamma_m;  // dK/dalpha = K, so beta = gamma
  const Vec zeta_alpha = toeplitz_matvec(k_uu_, wt_delta);
  const Vec beta_beta = toeplitz_matvec(dk_uu_dbeta_, record.alpha_m);
  const Vec zeta_beta = toeplitz_matvec(dk_uu_dbeta_, wt_delta);

  Mat rhs(n(), 3);
  rhs.col(0) = w_t_.apply(zeta_alpha - beta_alpha);
  rhs.col(1) = w_t_.apply(zeta_beta - beta_beta);
  rhs.col(2) = record.delta_n;
  const Mat solved = solve_regularized_block(rhs);

  auto k_wt = [this](const Vec& u) { return toeplitz_matvec(k_uu_, w_t_.apply_transpose(u)); };
  const Vec grad_alpha = w_x_.apply(beta_alpha - zeta_alpha + k_wt(solved.col(0)));
  const Vec grad_beta = w_x_.apply(beta_beta - zeta_beta + k_wt(solved.col(1)));
  const Vec grad_rho = w_x_.apply(k_wt(solved.col(2)));

  ParamGrad g;
  g.d_alpha = upstream.dot(grad_alpha);
  g.d_beta = upstream.dot(grad_beta);
  g.d_gamma = params_.noise_var() * upstream.dot(grad_rho);
  return g;
}

}  // namespace gpa
