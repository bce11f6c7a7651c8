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

#include "gpa/kernel.hpp"

namespace gpa {

namespace {

void check_finite_inputs(double t1, double t2, const GpParams& p) {
  if (!std::isfinite(t1) || !std::isfinite(t2))
    throw InvalidArgument("se_kernel: non-finite time input");
  if (!std::isfinite(p.alpha) || !std::isfinite(p.beta) || !std::isfinite(p.gamma))
    throw InvalidArgument("se_kernel: non-finite GP parameter");
}

}  // namespace

double se_kernel(double t1, double t2, const GpParams& params) {
  check_finite_inputs(t1, t2, params);
  const double lag = t1 - t2;
  return params.amplitude() * std::exp(-params.inv_length() * lag * lag);
}

KernelGrad se_kernel_grad(double t1, double t2, const GpParams& params) {
  check_finite_inputs(t1, t2, params);
  const double lag = t1 - t2;
  const double k = params.amplitude() * std::exp(-params.inv_length() * lag * lag);
  return {k, -params.inv_length() * lag * lag * k};
}

Mat build_kernel_matrix(const Vec& rows_at, const Vec& cols_at, const GpParams& params) {
  require(rows_at.size() > 0 && cols_at.size() > 0,
          "build_kernel_matrix: time point lists must be non-empty");
  const double a = params.amplitude();
  const double b = params.inv_length();
  Mat k(rows_at.size(), cols_at.size());
  for (Index j = 0; j < cols_at.size(); ++j) {
    for (Index i = 0; i < rows_at.size(); ++i) {
      const double lag = rows_at[i] - cols_at[j];
      k(i, j) = a * std::exp(-b * lag * lag);
    }
  }
  return k;
}

}  // namespace gpa
