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

#ifndef GPA_KRYLOV_HPP
#define GPA_KRYLOV_HPP

#include "gpa/common.hpp"
#include "gpa/kernel.hpp"

#include <functional>
#include <vector>

namespace gpa {

// Symmetric positive definite operator, applied as y = A x.
using LinOp = std::function<Vec(const Vec&)>;

struct CgOptions {
  double tol = 1e-10;  // relative residual target
  int max_iter = 1000;
};

// Solves A x = rhs for SPD A given only matvecs. Returns x with
// ||A x - rhs|| <= tol * ||rhs||, or throws NumericBreakdown.
// An optional x0 warm-starts the iteration.
Vec conjugate_gradient(const LinOp& matvec, const Vec& rhs, const CgOptions& opts = {},
                       const Vec* x0 = nullptr);

// Solves A X = B column-wise with a shared Krylov recurrence. Small inner
// systems are solved with a rank-revealing decomposition so rank-deficient
// residual blocks (e.g. duplicate columns) deflate instead of breaking down.
// Columns that the block recurrence leaves short of tolerance are polished
// with single-vector CG.
Mat block_conjugate_gradient(const LinOp& matvec, const Mat& rhs_block,
                             const CgOptions& opts = {});

// Symmetric square root of a small symmetric (tridiagonal in our use)
// matrix via eigendecomposition, negative eigenvalues clamped to zero.
// The eigen pair is kept for the Sylvester solve in backprop.
struct TridiagSqrt {
  Mat h;
  Mat root;
  Mat eigvec;       // H = eigvec diag(eigval) eigvec'
  Vec eigval;       // clamped to >= 0
  Vec root_eigval;  // sqrt of clamped eigenvalues
};
TridiagSqrt tridiag_sqrt(const Mat& h);

// Solves X A + A X = C with A = hroot.root (symmetric PSD), in the
// eigenbasis of A. This is both the forward derivative of the matrix
// square root and its own adjoint.
Mat sylvester_sqrt_grad(const TridiagSqrt& hroot, const Mat& dh);

// Forward tape of one Lanczos run: orthonormal basis, tridiagonal
// coefficients, and the per-iteration intermediates the reverse sweep needs.
struct LanczosRecord {
  Mat basis;     // d x k, columns d_1..d_k
  Vec diag;      // alpha_1..alpha_k
  Vec offdiag;   // beta_2..beta_k (size k-1)
  double xi_norm = 0.0;
  bool truncated = false;  // stopped early on an invariant subspace

  // Per-iteration intermediates (only kept when keep_tape):
  Mat sigma_d;    // columns Sigma d_j
  Mat w_pre;      // residual after the alpha subtraction, before reorthogonalization
  Mat w_mid;      // after the first reorthogonalization pass
  std::vector<Vec> reorth_c1, reorth_c2;  // projection coefficients per pass

  TridiagSqrt hroot;

  Index iterations() const { return diag.size(); }
};

struct LanczosResult {
  Vec approx;  // ||xi|| D H^{1/2} e_1
  LanczosRecord record;
};

// Algorithm: Lanczos tridiagonalization with full (two-pass)
// reorthogonalization, then approx = ||xi|| D H^{1/2} e_1.
// Terminates early when beta_{j+1} < 1e-12 ||xi|| (invariant subspace).
LanczosResult lanczos_sqrt_vec(const LinOp& matvec, const Vec& xi, int k,
                               bool keep_tape = true);

// Block generalization for S simultaneous right-hand vectors.
// Xi = Q R (rank-revealing, deflating) seeds the first block; the result is
// D H^{1/2} E_1 R for the block-tridiagonal H.
struct BlockLanczosResult {
  Mat approx;                     // d x S
  Mat basis;                      // d x (sum of block sizes)
  Mat h;                          // block tridiagonal, symmetric
  std::vector<Index> block_sizes; // per iteration, after deflation
  bool truncated = false;
};
BlockLanczosResult block_lanczos_sqrt(const LinOp& matvec, const Mat& xi_block, int k);

// Pullback interface for the Sigma operator used during Lanczos.
// `params(j, d, upstream)` accumulates GP-parameter gradients of the j-th
// forward matvec (0-based forward order) and `apply` is the operator itself
// (symmetric, so it is also the pullback into d).
struct SigmaPullback {
  std::function<ParamGrad(Index iter, const Vec& dvec, const Vec& upstream)> params;
  LinOp apply;
};

// Reverse-mode sweep over the recorded Lanczos recursion: adjoints flow
// through ||xi|| D H^{1/2} e_1, the square root (Sylvester solve), the
// alpha/beta/d recursion including both reorthogonalization passes, and
// into every Sigma d_j matvec.
ParamGrad lanczos_backprop(const LanczosRecord& record, const SigmaPullback& op,
                           const Vec& upstream);

}  // namespace gpa

#endif  // GPA_KRYLOV_HPP
