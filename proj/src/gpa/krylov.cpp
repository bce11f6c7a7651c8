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

#include "gpa/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <limits>
#include <sstream>

namespace gpa {

Vec conjugate_gradient(const LinOp& matvec, const Vec& rhs, const CgOptions& opts,
                       const Vec* x0) {
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Vec::Zero(rhs.size());

  Vec x = x0 ? *x0 : Vec::Zero(rhs.size());
  Vec r = x0 ? Vec(rhs - matvec(x)) : rhs;
  const double target = opts.tol * rhs_norm;
  double r2 = r.squaredNorm();
  if (std::sqrt(r2) <= target) return x;

  Vec p = r;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vec ap = matvec(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      std::ostringstream msg;
      msg << "conjugate_gradient: operator not positive definite (p'Ap=" << pap
          << " at iteration " << it << ")";
      throw NumericBreakdown(msg.str());
    }
    const double step = r2 / pap;
    x += step * p;
    r -= step * ap;
    const double r2_new = r.squaredNorm();
    if (std::sqrt(r2_new) <= target) return x;
    p = r + (r2_new / r2) * p;
    r2 = r2_new;
  }
  std::ostringstream msg;
  msg << "conjugate_gradient: no convergence after " << opts.max_iter
      << " iterations (relative residual " << std::sqrt(r2) / rhs_norm << ", target "
      << opts.tol << ")";
  throw NumericBreakdown(msg.str());
}

Mat block_conjugate_gradient(const LinOp& matvec, const Mat& rhs_block,
                             const CgOptions& opts) {
  require(rhs_block.cols() >= 1, "block_conjugate_gradient: empty right-hand block");
  const Index n = rhs_block.rows();
  const Index s = rhs_block.cols();

  const Vec col_norms = rhs_block.colwise().norm();
  Mat x = Mat::Zero(n, s);
  Mat r = rhs_block;
  Mat p = r;

  auto apply = [&](const Mat& block) {
    Mat out(n, block.cols());
    for (Index j = 0; j < block.cols(); ++j) out.col(j) = matvec(block.col(j));
    return out;
  };
  auto converged = [&]() {
    for (Index j = 0; j < s; ++j)
      if (r.col(j).norm() > opts.tol * std::max(col_norms[j], 1e-300)) return false;
    return true;
  };

  // O'Leary block recurrence; the S x S systems use a rank-revealing solve
  // so dependent columns deflate implicitly. The recurrence can stagnate
  // once columns converge at different rates, so progress is monitored and
  // stragglers are handed to the single-vector polish below.
  Mat rtr = r.transpose() * r;
  double best_resid = std::numeric_limits<double>::infinity();
  int since_progress = 0;
  for (int it = 0; it < opts.max_iter && !converged(); ++it) {
    const Mat ap = apply(p);
    Mat ptap = p.transpose() * ap;
    ptap = 0.5 * (ptap + ptap.transpose());
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(ptap);
    cod.setThreshold(1e-13);
    const Mat alpha = cod.solve(rtr);
    x += p * alpha;
    r -= ap * alpha;
    const Mat rtr_new = r.transpose() * r;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod_r(rtr);
    cod_r.setThreshold(1e-13);
    const Mat beta = cod_r.solve(rtr_new);
    p = r + p * beta;
    if (!x.allFinite() || !r.allFinite()) {
      x = Mat::Zero(n, s);  // rank collapse mid-flight; restart via polish
      break;
    }
    rtr = rtr_new;
    double worst = 0.0;
    for (Index j = 0; j < s; ++j)
      worst = std::max(worst, r.col(j).norm() / std::max(col_norms[j], 1e-300));
    if (worst < 0.99 * best_resid) {
      best_resid = worst;
      since_progress = 0;
    } else if (++since_progress >= 25) {
      break;
    }
  }

  // Per-column polish guarantees the residual contract for every column.
  for (Index j = 0; j < s; ++j) {
    if (col_norms[j] == 0.0) {
      x.col(j).setZero();
      continue;
    }
    const Vec res = rhs_block.col(j) - matvec(x.col(j));
    if (res.norm() > opts.tol * col_norms[j]) {
      const Vec xj = x.col(j);
      x.col(j) = conjugate_gradient(matvec, rhs_block.col(j), opts, &xj);
    }
  }
  return x;
}

TridiagSqrt tridiag_sqrt(const Mat& h) {
  require(h.rows() == h.cols() && h.rows() >= 1, "tridiag_sqrt: square matrix required");
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (h + h.transpose()));
  if (eig.info() != Eigen::Success)
    throw NumericBreakdown("tridiag_sqrt: eigendecomposition failed");

  const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-6 * std::max(scale, 1.0)) {
    std::ostringstream msg;
    msg << "tridiag_sqrt: matrix substantially indefinite (min eigenvalue " << min_eig
        << ", scale " << scale << "); upstream operator is not PSD";
    throw NumericBreakdown(msg.str());
  }

  TridiagSqrt out;
  out.h = h;
  out.eigvec = eig.eigenvectors();
  out.eigval = eig.eigenvalues().cwiseMax(0.0);
  out.root_eigval = out.eigval.cwiseSqrt();
  out.root = out.eigvec * out.root_eigval.asDiagonal() * out.eigvec.transpose();
  return out;
}

Mat sylvester_sqrt_grad(const TridiagSqrt& hroot, const Mat& dh) {
  require(dh.rows() == hroot.root.rows() && dh.cols() == hroot.root.cols(),
          "sylvester_sqrt_grad: dimension mismatch");
  Vec s = hroot.root_eigval;
  if (s.minCoeff() == 0.0) s.array() += 1e-10;  // clamped zero roots
  if (2.0 * s.minCoeff() < 1e-12) {
    std::ostringstream msg;
    msg << "sylvester_sqrt_grad: eigenvalue sum below 1e-12 (min root eigenvalue "
        << s.minCoeff() << ")";
    throw NumericBreakdown(msg.str());
  }
  Mat c = hroot.eigvec.transpose() * dh * hroot.eigvec;
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j) c(i, j) /= (s[i] + s[j]);
  return hroot.eigvec * c * hroot.eigvec.transpose();
}

namespace {

// Two classical Gram-Schmidt passes against the first `j` basis columns.
// Coefficients from each pass are recorded for the adjoint sweep.
void reorthogonalize(const Mat& basis, Index j, Vec& w, Vec& c1, Vec& c2, Vec& w_mid) {
  const auto d = basis.leftCols(j + 1);
  c1 = d.transpose() * w;
  w -= d * c1;
  w_mid = w;
  c2 = d.transpose() * w;
  w -= d * c2;
}

}  // namespace

LanczosResult lanczos_sqrt_vec(const LinOp& matvec, const Vec& xi, int k, bool keep_tape) {
  require(k >= 1, "lanczos_sqrt_vec: k must be >= 1");
  const double xi_norm = xi.norm();
  require(xi_norm > 0.0, "lanczos_sqrt_vec: xi must be non-zero");

  const Index d = xi.size();
  LanczosRecord rec;
  rec.xi_norm = xi_norm;
  rec.basis.resize(d, k);
  rec.basis.col(0) = xi / xi_norm;
  Vec alphas(k), betas(k);  // betas[j] = beta_{j+2} in paper numbering
  if (keep_tape) {
    rec.sigma_d.resize(d, k);
    rec.w_pre.resize(d, k);
    rec.w_mid.resize(d, k);
    rec.reorth_c1.resize(k);
    rec.reorth_c2.resize(k);
  }

  Index steps = k;
  double beta_prev = 0.0;
  for (Index j = 0; j < k; ++j) {
    const Vec sd = matvec(rec.basis.col(j));
    Vec w = sd;
    if (j > 0) {
      // symmetry check: d_{j-1}' Sigma d_j must reproduce beta_j
      const double cross = rec.basis.col(j - 1).dot(sd);
      if (std::abs(cross - beta_prev) > 1e-6 * (sd.norm() + std::abs(beta_prev))) {
        std::ostringstream msg;
        msg << "lanczos_sqrt_vec: operator not symmetric (d'Sd cross term " << cross
            << " vs beta " << beta_prev << ")";
        throw NumericBreakdown(msg.str());
      }
      w -= beta_prev * rec.basis.col(j - 1);
    }
    const double alpha = rec.basis.col(j).dot(w);
    w -= alpha * rec.basis.col(j);
    alphas[j] = alpha;
    if (keep_tape) {
      rec.sigma_d.col(j) = sd;
      rec.w_pre.col(j) = w;
    }
    Vec c1, c2, w_mid;
    reorthogonalize(rec.basis, j, w, c1, c2, w_mid);
    if (keep_tape) {
      rec.w_mid.col(j) = w_mid;
      rec.reorth_c1[j] = c1;
      rec.reorth_c2[j] = c2;
    }

    const double beta = w.norm();
    betas[j] = beta;
    if (beta < 1e-12 * xi_norm) {
      // invariant subspace: the answer is exact in the smaller basis
      steps = j + 1;
      rec.truncated = true;
      break;
    }
    beta_prev = beta;
    if (j + 1 < k) rec.basis.col(j + 1) = w / beta;
  }

  rec.basis.conservativeResize(d, steps);
  rec.diag = alphas.head(steps);
  rec.offdiag = betas.head(steps - 1);
  if (keep_tape) {
    rec.sigma_d.conservativeResize(d, steps);
    rec.w_pre.conservativeResize(d, steps);
    rec.w_mid.conservativeResize(d, steps);
    rec.reorth_c1.resize(steps);
    rec.reorth_c2.resize(steps);
  }

  Mat h = Mat::Zero(steps, steps);
  h.diagonal() = rec.diag;
  for (Index j = 0; j + 1 < steps; ++j) {
    h(j, j + 1) = rec.offdiag[j];
    h(j + 1, j) = rec.offdiag[j];
  }
  rec.hroot = tridiag_sqrt(h);

  LanczosResult out;
  out.approx = xi_norm * (rec.basis * rec.hroot.root.col(0));
  out.record = std::move(rec);
  return out;
}

ParamGrad lanczos_backprop(const LanczosRecord& record, const SigmaPullback& op,
                           const Vec& upstream) {
  if (record.sigma_d.size() == 0)
    throw InvalidState("lanczos_backprop: record has no retained intermediates");
  const Index k = record.iterations();
  const Index d = record.basis.rows();
  const double q = record.xi_norm;

  // y = q * D * (Hroot e_1)
  const Vec h0 = record.hroot.root.col(0);
  Mat d_bar = Mat::Zero(d, k);
  for (Index j = 0; j < k; ++j) d_bar.col(j) = q * h0[j] * upstream;

  // Adjoint through Hroot e_1 and the square root (self-adjoint Sylvester map).
  Mat hroot_bar = Mat::Zero(k, k);
  hroot_bar.col(0) = q * (record.basis.transpose() * upstream);
  const Mat h_bar = sylvester_sqrt_grad(record.hroot, hroot_bar);

  Vec alpha_bar(k), beta_bar(k);
  for (Index j = 0; j < k; ++j) alpha_bar[j] = h_bar(j, j);
  beta_bar.setZero();
  for (Index j = 0; j + 1 < k; ++j) beta_bar[j] = h_bar(j, j + 1) + h_bar(j + 1, j);

  ParamGrad grad;
  for (Index j = k - 1; j >= 0; --j) {
    // normalize step: d_{j+1} = w3 / beta, beta = ||w3|| (unused for the last j)
    Vec w_bar;
    if (j + 1 < k) {
      const double beta = record.offdiag[j];
      const Vec& d_next = record.basis.col(j + 1);
      w_bar = (d_bar.col(j + 1) - d_next.dot(d_bar.col(j + 1)) * d_next) / beta +
              beta_bar[j] * d_next;
    } else {
      w_bar = Vec::Zero(d);
    }

    // second reorthogonalization pass: w3 = w_mid - D c2
    const auto basis_j = record.basis.leftCols(j + 1);
    const Vec& c2 = record.reorth_c2[j];
    const Vec proj2 = basis_j.transpose() * w_bar;
    Vec w_mid_bar = w_bar - basis_j * proj2;
    d_bar.leftCols(j + 1) -= record.w_mid.col(j) * proj2.transpose();
    d_bar.leftCols(j + 1) -= w_bar * c2.transpose();

    // first pass: w_mid = w_pre - D c1
    const Vec& c1 = record.reorth_c1[j];
    const Vec proj1 = basis_j.transpose() * w_mid_bar;
    Vec w_pre_bar = w_mid_bar - basis_j * proj1;
    d_bar.leftCols(j + 1) -= record.w_pre.col(j) * proj1.transpose();
    d_bar.leftCols(j + 1) -= w_mid_bar * c1.transpose();

    // w_pre = w1 - alpha_j d_j
    Vec w1_bar = w_pre_bar;
    alpha_bar[j] += -record.basis.col(j).dot(w_pre_bar);
    d_bar.col(j) += -record.diag[j] * w_pre_bar;

    // alpha_j = d_j' w1, with w1 = sigma_d_j - beta_j d_{j-1}
    Vec w1(d);
    if (j > 0)
      w1 = record.sigma_d.col(j) - record.offdiag[j - 1] * record.basis.col(j - 1);
    else
      w1 = record.sigma_d.col(j);
    d_bar.col(j) += alpha_bar[j] * w1;
    w1_bar += alpha_bar[j] * record.basis.col(j);

    // w1 = sigma_d_j - beta_j d_{j-1}
    const Vec& sd_bar = w1_bar;
    if (j > 0) {
      beta_bar[j - 1] += -record.basis.col(j - 1).dot(w1_bar);
      d_bar.col(j - 1) += -record.offdiag[j - 1] * w1_bar;
    }

    // sigma_d_j = Sigma(theta) d_j
    grad += op.params(j, record.basis.col(j), sd_bar);
    d_bar.col(j) += op.apply(sd_bar);
  }
  // d_1 = xi/||xi|| carries no theta dependence; its adjoint is discarded.
  return grad;
}

namespace {

// Economy rank-revealing QR with deflation: returns Q (n x r) and the
// coefficient matrix C (r x cols) with block = Q C, signs fixed so the
// leading coefficient of each Q column is tied to a positive pivot.
struct DeflatedQr {
  Mat q;
  Mat coeff;
  Index rank;
};

DeflatedQr deflated_qr(const Mat& block) {
  Eigen::ColPivHouseholderQR<Mat> qr(block);
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  DeflatedQr out;
  out.rank = r;
  if (r == 0) return out;
  Mat q_full = qr.householderQ() * Mat::Identity(block.rows(), r);
  Mat r_mat = qr.matrixR().topRows(r).template triangularView<Eigen::Upper>();
  // undo column pivoting: block = Q R P'
  Mat coeff = r_mat * qr.colsPermutation().transpose();
  for (Index i = 0; i < r; ++i) {
    if (r_mat(i, i) < 0) {
      q_full.col(i) = -q_full.col(i);
      coeff.row(i) = -coeff.row(i);
    }
  }
  out.q = std::move(q_full);
  out.coeff = std::move(coeff);
  return out;
}

}  // namespace

BlockLanczosResult block_lanczos_sqrt(const LinOp& matvec, const Mat& xi_block, int k) {
  require(xi_block.cols() >= 1, "block_lanczos_sqrt: empty block");
  require(k >= 1, "block_lanczos_sqrt: k must be >= 1");
  const Index d = xi_block.rows();
  const Index s = xi_block.cols();

  DeflatedQr seed = deflated_qr(xi_block);
  require(seed.rank >= 1, "block_lanczos_sqrt: zero right-hand block");

  std::vector<Mat> blocks;      // orthonormal basis blocks
  std::vector<Mat> diag_blocks; // A_j
  std::vector<Mat> sub_blocks;  // B_{j+1}, maps block j to block j+1
  blocks.push_back(seed.q);

  bool truncated = false;
  for (Index j = 0; j < k; ++j) {
    const Mat& dj = blocks[j];
    Mat w(d, dj.cols());
    for (Index c = 0; c < dj.cols(); ++c) w.col(c) = matvec(dj.col(c));
    if (j > 0) w -= blocks[j - 1] * sub_blocks[j - 1].transpose();
    Mat a = dj.transpose() * w;
    a = 0.5 * (a + a.transpose());
    diag_blocks.push_back(a);
    w -= dj * a;
    // full reorthogonalization, two passes over all previous blocks
    for (int pass = 0; pass < 2; ++pass)
      for (const Mat& prev : blocks) w -= prev * (prev.transpose() * w);

    if (j + 1 == k) break;
    DeflatedQr next = deflated_qr(w);
    if (next.rank == 0) {
      truncated = true;
      break;
    }
    blocks.push_back(next.q);
    sub_blocks.push_back(next.coeff);
  }

  std::vector<Index> sizes;
  Index total = 0;
  for (const Mat& b : blocks) {
    sizes.push_back(b.cols());
    total += b.cols();
  }

  Mat basis(d, total);
  Mat h = Mat::Zero(total, total);
  Index off = 0;
  for (size_t j = 0; j < blocks.size(); ++j) {
    basis.middleCols(off, sizes[j]) = blocks[j];
    h.block(off, off, sizes[j], sizes[j]) = diag_blocks[j];
    if (j + 1 < blocks.size()) {
      // B_{j+1} couples block j into block j+1
      h.block(off + sizes[j], off, sizes[j + 1], sizes[j]) = sub_blocks[j];
      h.block(off, off + sizes[j], sizes[j], sizes[j + 1]) = sub_blocks[j].transpose();
    }
    off += sizes[j];
  }

  const TridiagSqrt hroot = tridiag_sqrt(h);
  BlockLanczosResult out;
  out.basis = std::move(basis);
  out.h = std::move(h);
  out.block_sizes = std::move(sizes);
  out.truncated = truncated;
  // Y = D H^{1/2} E_1 R with E_1 selecting the first block row
  out.approx = out.basis * hroot.root.leftCols(seed.rank) * seed.coeff;
  (void)s;
  return out;
}

}  // namespace gpa
