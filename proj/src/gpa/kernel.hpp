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

#ifndef GPA_KERNEL_HPP
#define GPA_KERNEL_HPP

#include "gpa/common.hpp"

namespace gpa {

// GP hyperparameters in unconstrained log form. All optimizers work on
// (alpha, beta, gamma) directly; the positive quantities are derived:
//   amplitude        a      = exp(alpha)
//   inverse sq. len. b      = exp(beta)
//   noise variance   sigma2 = exp(gamma)
struct GpParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  double amplitude() const { return std::exp(alpha); }
  double inv_length() const { return std::exp(beta); }
  double noise_var() const { return std::exp(gamma); }
};

// Gradient triple in the unconstrained coordinates.
struct ParamGrad {
  double d_alpha = 0.0;
  double d_beta = 0.0;
  double d_gamma = 0.0;

  ParamGrad& operator+=(const ParamGrad& o) {
    d_alpha += o.d_alpha;
    d_beta += o.d_beta;
    d_gamma += o.d_gamma;
    return *this;
  }
  ParamGrad operator*(double s) const { return {d_alpha * s, d_beta * s, d_gamma * s}; }
};

// Squared exponential kernel k(t1,t2) = a * exp(-b (t1-t2)^2).
double se_kernel(double t1, double t2, const GpParams& params);

// Elementwise derivatives of se_kernel w.r.t. the log parameters:
//   dk/dalpha = k,   dk/dbeta = -b (t1-t2)^2 k.
struct KernelGrad {
  double d_alpha;
  double d_beta;
};
KernelGrad se_kernel_grad(double t1, double t2, const GpParams& params);

// Dense pairwise kernel matrix, entries[i][j] = k(rows_at[i], cols_at[j]).
Mat build_kernel_matrix(const Vec& rows_at, const Vec& cols_at, const GpParams& params);

}  // namespace gpa

#endif  // GPA_KERNEL_HPP
