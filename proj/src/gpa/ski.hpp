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

#ifndef GPA_SKI_HPP
#define GPA_SKI_HPP

#include "gpa/common.hpp"
#include "gpa/exact_gp.hpp"
#include "gpa/kernel.hpp"
#include "gpa/krylov.hpp"

#include <array>
#include <optional>
#include <vector>

namespace gpa {

// Evenly spaced inducing points u_j = start + j * spacing, j = 0..m-1.
struct InducingGrid {
  double start = 0.0;
  double spacing = 1.0;
  Index m = 0;

  double point(Index j) const { return start + static_cast<double>(j) * spacing; }

  // Grid with one spacing of margin beyond [lo, hi], so every 4-point
  // cubic stencil for a target in [lo, hi] stays interior.
  static InducingGrid cover(double lo, double hi, Index m);
};

// Keys cubic convolution weights (a = -1/2) for one target point:
// 4 consecutive grid indices and their weights (summing to 1).
struct InterpRow {
  std::array<Index, 4> idx;
  std::array<double, 4> w;
};
InterpRow cubic_weights(double target, const InducingGrid& grid);

// Row-sparse p x m interpolation matrix, at most 4 non-zeros per row.
// Depends only on the target points and the grid, never on GP parameters.
struct SparseInterpMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<InterpRow> row;

  Vec apply(const Vec& x_cols) const;            // W x
  Vec apply_transpose(const Vec& x_rows) const;  // W' x
  Mat to_dense() const;
};
SparseInterpMatrix build_interp_matrix(const Vec& targets, const InducingGrid& grid);

// Symmetric Toeplitz matrix in O(m) space: first column plus the cached
// spectrum of its circulant embedding (length = next power of two >= 2m).
struct ToeplitzColumn {
  Vec first_col;
  Eigen::VectorXcd spectrum;
};
ToeplitzColumn make_toeplitz(Vec first_col);

// Dense-equivalent K vec in O(m log m) via the circulant embedding.
Vec toeplitz_matvec(const ToeplitzColumn& col, const Vec& vec);

// The structured-kernel-interpolation posterior operator for one series:
// K_tt ~ W_t K_uu W_t', K_xt ~ W_x K_uu W_t', with K_uu Toeplitz on the
// inducing grid. Provides the posterior mean, the posterior covariance
// matvec, and their hyperparameter gradients.
//
// Immutable after construction except the cached mean solve; share freely
// for concurrent forward matvecs, but serialize forward+backward pairs.
class SkiOperator {
 public:
  struct Options {
    Index m = 256;
    CgOptions cg;
  };

  SkiOperator(const TimeSeries& series, const Vec& ref_times, const GpParams& params,
              const Options& opts);

  Index n() const { return values_.size(); }
  Index d() const { return w_x_.rows; }
  const InducingGrid& grid() const { return grid_; }
  const SparseInterpMatrix& w_t() const { return w_t_; }
  const SparseInterpMatrix& w_x() const { return w_x_; }
  const ToeplitzColumn& k_uu() const { return k_uu_; }
  const ToeplitzColumn& dk_uu_dbeta() const { return dk_uu_dbeta_; }
  const GpParams& params() const { return params_; }
  const Vec& values() const { return values_; }

  // (W_t K_uu W_t' + sigma^2 I) v
  Vec regularized_matvec(const Vec& v) const;

  // mu = W_x K_uu W_t' (W_t K_uu W_t' + sigma^2 I)^{-1} v.
  // The CG solution is cached for gradient reuse.
  Vec posterior_mean() const;

  // Intermediates of one covariance matvec, reused by cov_grad.
  struct CovRecord {
    Vec alpha_m;  // W_x' d
    Vec gamma_m;  // K_uu alpha
    Vec delta_n;  // (W_t K_uu W_t' + sigma^2 I)^{-1} W_t gamma
  };

  // Sigma d = W_x K_uu W_x' d - W_x K_uu W_t' A^{-1} W_t K_uu W_x' d.
  Vec cov_matvec(const Vec& dvec, CovRecord* record = nullptr) const;

  // upstream' (d mu / d theta) for theta in {alpha, beta, gamma}, reusing
  // the cached mean solve; gamma via the noise-variance chain rule.
  ParamGrad mean_grad(const Vec& upstream) const;

  // upstream' (d (Sigma d) / d theta) reusing the forward record.
  ParamGrad cov_grad(const Vec& dvec, const Vec& upstream, const CovRecord& record) const;

 private:
  Vec solve_regularized(const Vec& rhs) const;
  Mat solve_regularized_block(const Mat& rhs) const;

  InducingGrid grid_;
  SparseInterpMatrix w_t_;
  SparseInterpMatrix w_x_;
  ToeplitzColumn k_uu_;
  ToeplitzColumn dk_uu_dbeta_;
  GpParams params_;
  Vec values_;
  CgOptions cg_;
  mutable std::optional<Vec> mean_solve_;  // A^{-1} v
};

}  // namespace gpa

#endif  // GPA_SKI_HPP
