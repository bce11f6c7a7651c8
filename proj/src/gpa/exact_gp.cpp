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

#include "gpa/exact_gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <sstream>

namespace gpa {

void TimeSeries::validate() const {
  require(times.size() >= 1, "TimeSeries: at least one observation required");
  require(times.size() == values.size(), "TimeSeries: times/values length mismatch");
  require(times.allFinite() && values.allFinite(), "TimeSeries: non-finite entry");
  for (Index i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "TimeSeries: times must be strictly increasing");
}

namespace {

Eigen::LLT<Mat> cholesky_or_throw(const Mat& a, const char* where) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << where << ": Cholesky factorization failed (n=" << a.rows()
        << ", diag min=" << a.diagonal().minCoeff()
        << ", diag max=" << a.diagonal().maxCoeff() << ")";
    throw NumericBreakdown(msg.str());
  }
  return llt;
}

Mat regularized_gram(const TimeSeries& series, const GpParams& params) {
  Mat a = build_kernel_matrix(series.times, series.times, params);
  a.diagonal().array() += params.noise_var();
  return a;
}

// Elementwise dk/dbeta over a pair of time lists.
Mat kernel_matrix_dbeta(const Vec& rows_at, const Vec& cols_at, const GpParams& params) {
  const double a = params.amplitude();
  const double b = params.inv_length();
  Mat g(rows_at.size(), cols_at.size());
  for (Index j = 0; j < cols_at.size(); ++j) {
    for (Index i = 0; i < rows_at.size(); ++i) {
      const double lag2 = (rows_at[i] - cols_at[j]) * (rows_at[i] - cols_at[j]);
      g(i, j) = -b * lag2 * a * std::exp(-b * lag2);
    }
  }
  return g;
}

}  // namespace

Mat sym_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  if (eig.info() != Eigen::Success)
    throw NumericBreakdown("sym_sqrt: eigendecomposition failed");
  Vec s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

GaussianRepr exact_posterior(const TimeSeries& series, const Vec& ref_times,
                             const GpParams& params) {
  series.validate();
  require(ref_times.size() >= 1, "exact_posterior: ref_times must be non-empty");

  const Mat k_xt = build_kernel_matrix(ref_times, series.times, params);
  const Mat k_xx = build_kernel_matrix(ref_times, ref_times, params);
  const Eigen::LLT<Mat> llt = cholesky_or_throw(regularized_gram(series, params), "exact_posterior");

  GaussianRepr repr;
  repr.ref_times = ref_times;
  repr.mean = k_xt * llt.solve(series.values);
  Mat cov = k_xx - k_xt * llt.solve(k_xt.transpose());
  repr.cov = 0.5 * (cov + cov.transpose());
  return repr;
}

Vec exact_sample(const GaussianRepr& repr, const Vec& xi) {
  if (!repr.has_dense_cov())
    throw InvalidState("exact_sample: representation has no dense covariance");
  require(xi.size() == repr.mean.size(), "exact_sample: xi length mismatch");
  return repr.mean + sym_sqrt(repr.cov) * xi;
}

double log_marginal_likelihood(const TimeSeries& series, const GpParams& params) {
  series.validate();
  const Index n = series.size();
  const Eigen::LLT<Mat> llt =
      cholesky_or_throw(regularized_gram(series, params), "log_marginal_likelihood");
  const Vec alpha = llt.solve(series.values);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * series.values.dot(alpha) - 0.5 * log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

ParamGrad log_marginal_likelihood_grad(const TimeSeries& series, const GpParams& params) {
  series.validate();
  const Index n = series.size();
  const Mat k_tt = build_kernel_matrix(series.times, series.times, params);
  Mat a = k_tt;
  a.diagonal().array() += params.noise_var();
  const Eigen::LLT<Mat> llt = cholesky_or_throw(a, "log_marginal_likelihood_grad");
  const Vec alpha = llt.solve(series.values);
  const Mat a_inv = llt.solve(Mat::Identity(n, n));

  // dL/dtheta = 1/2 alpha' dA alpha - 1/2 tr(A^{-1} dA)
  auto directional = [&](const Mat& da) {
    return 0.5 * alpha.dot(da * alpha) - 0.5 * (a_inv.cwiseProduct(da)).sum();
  };

  const Mat dk_beta = kernel_matrix_dbeta(series.times, series.times, params);
  ParamGrad g;
  g.d_alpha = directional(k_tt);  // dK/dalpha = K
  g.d_beta = directional(dk_beta);
  g.d_gamma = params.noise_var() * (0.5 * alpha.squaredNorm() - 0.5 * a_inv.trace());
  return g;
}

PosteriorSampleGrad exact_posterior_grad(const TimeSeries& series, const Vec& ref_times,
                                         const GpParams& params, const Vec& xi) {
  series.validate();
  require(ref_times.size() == xi.size(), "exact_posterior_grad: xi length mismatch");
  const double sigma2 = params.noise_var();

  const Mat k_xt = build_kernel_matrix(ref_times, series.times, params);
  Mat a = build_kernel_matrix(series.times, series.times, params);
  a.diagonal().array() += sigma2;
  const Eigen::LLT<Mat> llt = cholesky_or_throw(a, "exact_posterior_grad");

  const Vec alpha = llt.solve(series.values);
  const Mat b_mat = llt.solve(k_xt.transpose());  // B = A^{-1} K_tx, n x d
  const Vec mu = k_xt * alpha;
  Mat sigma = build_kernel_matrix(ref_times, ref_times, params) - k_xt * b_mat;
  sigma = 0.5 * (sigma + sigma.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw NumericBreakdown("exact_posterior_grad: eigendecomposition failed");
  const Mat& q = eig.eigenvectors();
  Vec s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();

  PosteriorSampleGrad out;
  // Repeated (near-)zero roots make the Sylvester operator singular.
  if ((2.0 * s.minCoeff()) < 1e-12) {
    s.array() += 1e-10;
    out.sylvester_regularized = true;
  }

  // (dR) xi with (dR) R + R (dR) = dSigma, solved in the eigenbasis of R;
  // only the action on xi is ever needed.
  const Vec qt_xi = q.transpose() * xi;
  auto dr_xi = [&](const Mat& c_tilde) {
    Vec w(qt_xi.size());
    for (Index i = 0; i < w.size(); ++i) {
      double acc = 0.0;
      for (Index j = 0; j < qt_xi.size(); ++j) acc += c_tilde(i, j) / (s[i] + s[j]) * qt_xi[j];
      w[i] = acc;
    }
    return Vec(q * w);
  };

  // Shared heavy products. With W = B'B the alpha and gamma directions
  // collapse: dSigma/dalpha = Sigma - sigma2 W (since B'K_tt B = B'K_tx -
  // sigma2 W and dK/dalpha = K), dSigma/dgamma = sigma2^ * W. Both Sylvester
  // right-hand sides therefore reuse one Q'WQ.
  const Mat w = b_mat.transpose() * b_mat;
  const Mat qwq = q.transpose() * w * q;
  const Vec bt_v = b_mat.transpose() * series.values;
  const Vec bt_alpha = b_mat.transpose() * alpha;

  // alpha direction: dmu = mu - B'(v - sigma2 alpha), C~ = Lambda - sigma2 Q'WQ
  {
    Mat c = -sigma2 * qwq;
    c.diagonal() += eig.eigenvalues().cwiseMax(0.0);
    out.d_alpha = mu - bt_v + sigma2 * bt_alpha + dr_xi(c);
  }

  // gamma direction: dmu = -sigma2 B'alpha, C~ = sigma2 Q'WQ
  out.d_gamma = -sigma2 * bt_alpha + dr_xi(Mat(sigma2 * qwq));

  // beta direction needs the elementwise kernel derivatives
  {
    const Mat dk_tt = kernel_matrix_dbeta(series.times, series.times, params);
    const Mat dk_xt = kernel_matrix_dbeta(ref_times, series.times, params);
    const Mat dk_xx = kernel_matrix_dbeta(ref_times, ref_times, params);
    const Vec dmu = dk_xt * alpha - b_mat.transpose() * (dk_tt * alpha);
    const Mat dkb = dk_xt * b_mat;  // dK_xt B, d x d
    Mat dsigma = dk_xx - dkb - dkb.transpose() + b_mat.transpose() * (dk_tt * b_mat);
    dsigma = 0.5 * (dsigma + dsigma.transpose());
    out.d_beta = dmu + dr_xi(Mat(q.transpose() * dsigma * q));
  }
  return out;
}

}  // namespace gpa
