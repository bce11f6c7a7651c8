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

#ifndef GPA_EXACT_GP_HPP
#define GPA_EXACT_GP_HPP

#include "gpa/common.hpp"
#include "gpa/kernel.hpp"

#include <functional>
#include <optional>

namespace gpa {

// One irregularly sampled series: strictly increasing times in [0,T],
// matching values, optional class label (-1 when unlabeled).
struct TimeSeries {
  Vec times;
  Vec values;
  int label = -1;

  Index size() const { return times.size(); }
  void validate() const;
};

// Posterior Gaussian at the reference times: mean plus either a dense
// covariance (exact mode) or an opaque covariance matvec (SKI mode).
struct GaussianRepr {
  Vec mean;
  Vec ref_times;
  Mat cov;  // 0x0 when only the operator form is available
  std::function<Vec(const Vec&)> cov_op;

  bool has_dense_cov() const { return cov.size() > 0; }
};

// Symmetric PSD square root by eigendecomposition, negative eigenvalues
// clamped to zero.
Mat sym_sqrt(const Mat& m);

// Exact GP posterior at ref_times, Eqs. solved via Cholesky of the
// regularized Gram matrix.
GaussianRepr exact_posterior(const TimeSeries& series, const Vec& ref_times,
                             const GpParams& params);

// z = mean + cov^{1/2} xi with the symmetric square root.
Vec exact_sample(const GaussianRepr& repr, const Vec& xi);

// Log evidence of the series under the GP regression model.
double log_marginal_likelihood(const TimeSeries& series, const GpParams& params);

// Gradient of the log evidence in the unconstrained coordinates,
// via the trace identity.
ParamGrad log_marginal_likelihood_grad(const TimeSeries& series, const GpParams& params);

// Exact per-parameter derivative vectors of z = mu + Sigma^{1/2} xi.
// The square-root derivative solves the Sylvester equation
// (dR) R + R (dR) = dSigma in the eigenbasis of R.
struct PosteriorSampleGrad {
  Vec d_alpha;
  Vec d_beta;
  Vec d_gamma;
  bool sylvester_regularized = false;  // set when +1e-10 I was needed
};
PosteriorSampleGrad exact_posterior_grad(const TimeSeries& series, const Vec& ref_times,
                                         const GpParams& params, const Vec& xi);

}  // namespace gpa

#endif  // GPA_EXACT_GP_HPP
