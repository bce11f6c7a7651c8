#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpa/ski.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

using namespace gpa;
using namespace gpa::testing;

namespace {

Mat dense_toeplitz(const Vec& first_col) {
  const Index m = first_col.size();
  Mat t(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) t(i, j) = first_col[std::abs(i - j)];
  return t;
}

// Dense expansions of the SKI formulas, the oracle for the operator path.
struct DenseSki {
  Mat w_t, w_x, k_uu, a;  // a = W_t K W_t' + sigma^2 I
  Vec v;

  Vec mean() const { return w_x * k_uu * w_t.transpose() * a.ldlt().solve(v); }
  Vec cov_times(const Vec& dvec) const {
    const Vec rhs = w_t * k_uu * w_x.transpose() * dvec;
    return w_x * k_uu * w_x.transpose() * dvec -
           w_x * k_uu * w_t.transpose() * a.ldlt().solve(rhs);
  }
};

DenseSki densify(const SkiOperator& op) {
  DenseSki d;
  d.w_t = op.w_t().to_dense();
  d.w_x = op.w_x().to_dense();
  d.k_uu = dense_toeplitz(op.k_uu().first_col);
  d.a = d.w_t * d.k_uu * d.w_t.transpose() +
        op.params().noise_var() * Mat::Identity(d.w_t.rows(), d.w_t.rows());
  d.v = op.values();
  return d;
}

SkiOperator make_op(const TimeSeries& s, const Vec& x, const GpParams& p, Index m,
                    double cg_tol = 1e-10) {
  SkiOperator::Options opts;
  opts.m = m;
  opts.cg.tol = cg_tol;
  return SkiOperator(s, x, p, opts);
}

double grad_triple_err(const ParamGrad& got, const FdGrad& fd) {
  const Vec g = (Vec(3) << got.d_alpha, got.d_beta, got.d_gamma).finished();
  const Vec f = (Vec(3) << fd.d_alpha, fd.d_beta, fd.d_gamma).finished();
  return (g - f).norm() / std::max(1e-8, f.norm());
}

}  // namespace

TEST_CASE("inducing grid covers the range with one spacing of margin") {
  const InducingGrid g = InducingGrid::cover(0.0, 1.0, 11);
  CHECK(g.m == 11);
  CHECK(g.point(1) == doctest::Approx(0.0));
  CHECK(g.point(g.m - 2) == doctest::Approx(1.0));
  CHECK(g.spacing == doctest::Approx(1.0 / 8.0));
  CHECK_THROWS_AS(InducingGrid::cover(0.0, 1.0, 3), InvalidArgument);
}

TEST_CASE("cubic interpolation weights") {
  const InducingGrid g = InducingGrid::cover(0.0, 1.0, 16);

  // a grid point reproduces exactly
  for (Index j = 1; j <= g.m - 2; ++j) {
    const InterpRow r = cubic_weights(g.point(j), g);
    double at_j = 0.0, elsewhere = 0.0;
    for (int t = 0; t < 4; ++t) {
      if (r.idx[t] == j)
        at_j += r.w[t];
      else
        elsewhere += std::abs(r.w[t]);
    }
    CHECK(at_j == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(elsewhere < 1e-13);
  }

  // cell midpoint: the classical (-1/16, 9/16, 9/16, -1/16) stencil
  const double mid = g.point(5) + 0.5 * g.spacing;
  const InterpRow r = cubic_weights(mid, g);
  CHECK(r.w[0] == doctest::Approx(-1.0 / 16.0).epsilon(1e-12));
  CHECK(r.w[1] == doctest::Approx(9.0 / 16.0).epsilon(1e-12));
  CHECK(r.w[2] == doctest::Approx(9.0 / 16.0).epsilon(1e-12));
  CHECK(r.w[3] == doctest::Approx(-1.0 / 16.0).epsilon(1e-12));

  // partition of unity on random targets
  auto rng = make_rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const InterpRow row = cubic_weights(u(rng), g);
    CHECK(std::abs(row.w[0] + row.w[1] + row.w[2] + row.w[3] - 1.0) < 1e-12);
  }

  // outside the interior band
  CHECK_THROWS_AS(cubic_weights(g.point(0) - g.spacing, g), InvalidArgument);
  CHECK_THROWS_AS(cubic_weights(g.point(g.m - 1) + g.spacing, g), InvalidArgument);
}

TEST_CASE("interpolation matrices never depend on GP parameters") {
  auto rng = make_rng(52);
  const TimeSeries s = random_series(20, 1.0, rng);
  const Vec x = sorted_times(9, 1.0, rng);
  GpParams p1 = random_params(rng);
  GpParams p2 = random_params(rng);
  const SkiOperator op1 = make_op(s, x, p1, 24);
  const SkiOperator op2 = make_op(s, x, p2, 24);
  // bit-identical rows across different hyperparameters
  for (Index i = 0; i < op1.w_t().rows; ++i)
    for (int t = 0; t < 4; ++t) {
      CHECK(op1.w_t().row[i].idx[t] == op2.w_t().row[i].idx[t]);
      CHECK(op1.w_t().row[i].w[t] == op2.w_t().row[i].w[t]);
    }
  for (Index i = 0; i < op1.w_x().rows; ++i)
    for (int t = 0; t < 4; ++t) CHECK(op1.w_x().row[i].w[t] == op2.w_x().row[i].w[t]);
}

TEST_CASE("toeplitz matvec against the dense oracle") {
  auto rng = make_rng(53);

  // identity column
  Vec e1 = Vec::Zero(8);
  e1[0] = 1.0;
  const ToeplitzColumn ident = make_toeplitz(e1);
  const Vec v = random_vec(8, rng);
  CHECK(rel_err(toeplitz_matvec(ident, v), v) < 1e-14);
  CHECK(toeplitz_matvec(ident, Vec::Zero(8)).norm() == 0.0);

  // random symmetric Toeplitz of assorted sizes, including non powers of two
  for (Index m : {1, 2, 3, 8, 13, 37, 64}) {
    const Vec col = random_vec(m, rng);
    const ToeplitzColumn t = make_toeplitz(col);
    const Vec vec = random_vec(m, rng);
    CHECK(rel_err(toeplitz_matvec(t, vec), Vec(dense_toeplitz(col) * vec)) < 1e-12);
  }

  CHECK_THROWS_AS(toeplitz_matvec(ident, Vec::Zero(5)), InvalidArgument);
}

TEST_CASE("regularized matvec dense check") {
  auto rng = make_rng(54);
  const GpParams p = random_params(rng);
  const TimeSeries s = random_series(10, 1.0, rng);
  const Vec x = sorted_times(7, 1.0, rng);
  const SkiOperator op = make_op(s, x, p, 32);
  const DenseSki dense = densify(op);

  CHECK(op.regularized_matvec(Vec::Zero(10)).norm() == 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec v = random_vec(10, rng);
    CHECK(rel_err(op.regularized_matvec(v), Vec(dense.a * v)) < 1e-10);
  }

  // dominant regularizer
  GpParams noisy = p;
  noisy.gamma = 20.0;
  const SkiOperator noisy_op = make_op(s, x, noisy, 32);
  const Vec v = random_vec(10, rng);
  CHECK(rel_err(noisy_op.regularized_matvec(v), Vec(noisy.noise_var() * v)) < 1e-6);
}

TEST_CASE("ski posterior mean dense check and zero data") {
  auto rng = make_rng(55);
  const GpParams p = random_params(rng);
  TimeSeries s = random_series(10, 1.0, rng);
  const Vec x = sorted_times(7, 1.0, rng);

  {
    TimeSeries zero = s;
    zero.values.setZero();
    CHECK(make_op(zero, x, p, 32).posterior_mean().norm() == 0.0);
  }

  const SkiOperator op = make_op(s, x, p, 32);
  CHECK(rel_err(op.posterior_mean(), densify(op).mean()) < 1e-8);
}

TEST_CASE("ski posterior mean converges to the exact mean as m grows") {
  auto rng = make_rng(56);
  GpParams p;
  p.beta = std::log(50.0);
  p.gamma = std::log(0.05);
  const TimeSeries s = random_series(500, 1.0, rng);
  Vec x(40);
  for (Index i = 0; i < x.size(); ++i)
    x[i] = static_cast<double>(i) / (static_cast<double>(x.size()) - 1.0);

  const Vec exact_mean = exact_posterior(s, x, p).mean;
  double prev = std::numeric_limits<double>::infinity();
  for (Index m : {64, 128, 256, 512}) {
    const double err = rel_err(make_op(s, x, p, m).posterior_mean(), exact_mean);
    CHECK(err <= 1.10 * prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("ski covariance matvec dense check") {
  auto rng = make_rng(57);
  const GpParams p = random_params(rng);
  const TimeSeries s = random_series(10, 1.0, rng);
  const Vec x = sorted_times(7, 1.0, rng);
  const SkiOperator op = make_op(s, x, p, 32);
  const DenseSki dense = densify(op);

  CHECK(op.cov_matvec(Vec::Zero(7)).norm() == 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec dvec = random_vec(7, rng);
    CHECK(rel_err(op.cov_matvec(dvec), dense.cov_times(dvec)) < 1e-8);
  }

  // huge noise suppresses the correction term: prior part only
  GpParams noisy = p;
  noisy.gamma = 20.0;
  const SkiOperator noisy_op = make_op(s, x, noisy, 32);
  const Vec dvec = random_vec(7, rng);
  const Vec prior = noisy_op.w_x().apply(
      toeplitz_matvec(noisy_op.k_uu(), noisy_op.w_x().apply_transpose(dvec)));
  CHECK(rel_err(noisy_op.cov_matvec(dvec), prior) < 1e-5);

  // symmetry of the covariance operator
  const Vec u1 = random_vec(7, rng), u2 = random_vec(7, rng);
  CHECK(rel_err(u2.dot(op.cov_matvec(u1)), u1.dot(op.cov_matvec(u2))) < 1e-8);
}

TEST_CASE("ski mean gradient finite differences") {
  auto rng = make_rng(58);
  for (int trial = 0; trial < 10; ++trial) {
    const GpParams p = random_params(rng);
    const TimeSeries s = random_series(12, 1.0, rng);
    const Vec x = sorted_times(9, 1.0, rng);
    const Vec upstream = random_vec(9, rng);
    const SkiOperator op = make_op(s, x, p, 32, 1e-13);
    const ParamGrad g = op.mean_grad(upstream);

    const FdGrad fd = central_fd(
        [&](const GpParams& q) {
          return upstream.dot(make_op(s, x, q, 32, 1e-13).posterior_mean());
        },
        p, 1e-5);
    CHECK(grad_triple_err(g, fd) < 1e-4);
  }

  // zero values and zero upstream both kill the gradient
  auto rng2 = make_rng(61);
  const GpParams p = random_params(rng2);
  const TimeSeries s = random_series(8, 1.0, rng2);
  const Vec x = sorted_times(5, 1.0, rng2);
  {
    TimeSeries zero = s;
    zero.values.setZero();
    const SkiOperator op = make_op(zero, x, p, 32);
    const ParamGrad g = op.mean_grad(random_vec(5, rng2));
    CHECK(g.d_alpha == 0.0);
    CHECK(g.d_beta == 0.0);
    CHECK(g.d_gamma == 0.0);
  }
  {
    const SkiOperator op = make_op(s, x, p, 32);
    const ParamGrad g = op.mean_grad(Vec::Zero(5));
    CHECK(g.d_alpha == 0.0);
    CHECK(g.d_beta == 0.0);
    CHECK(g.d_gamma == 0.0);
  }
}

TEST_CASE("ski covariance matvec gradient finite differences") {
  auto rng = make_rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    const GpParams p = random_params(rng);
    const TimeSeries s = random_series(12, 1.0, rng);
    const Vec x = sorted_times(9, 1.0, rng);
    const Vec dvec = random_vec(9, rng);
    const Vec upstream = random_vec(9, rng);
    const SkiOperator op = make_op(s, x, p, 32, 1e-13);
    SkiOperator::CovRecord rec;
    (void)op.cov_matvec(dvec, &rec);
    const ParamGrad g = op.cov_grad(dvec, upstream, rec);

    const FdGrad fd = central_fd(
        [&](const GpParams& q) {
          return upstream.dot(make_op(s, x, q, 32, 1e-13).cov_matvec(dvec));
        },
        p, 1e-5);
    CHECK(grad_triple_err(g, fd) < 1e-4);
  }

  // dvec = 0: zero parameter gradients
  auto rng2 = make_rng(62);
  const GpParams p = random_params(rng2);
  const TimeSeries s = random_series(8, 1.0, rng2);
  const Vec x = sorted_times(5, 1.0, rng2);
  const SkiOperator op = make_op(s, x, p, 32);
  SkiOperator::CovRecord rec;
  (void)op.cov_matvec(Vec::Zero(5), &rec);
  const ParamGrad g = op.cov_grad(Vec::Zero(5), random_vec(5, rng2), rec);
  CHECK(g.d_alpha == 0.0);
  CHECK(g.d_beta == 0.0);
  CHECK(g.d_gamma == 0.0);
}

TEST_CASE("ski operator storage stays linear") {
  // O(n + d + m) floats: spot-check the actual container sizes
  auto rng = make_rng(60);
  const GpParams p = random_params(rng);
  const TimeSeries s = random_series(200, 1.0, rng);
  const Vec x = sorted_times(50, 1.0, rng);
  const SkiOperator op = make_op(s, x, p, 64);
  CHECK(op.w_t().row.size() == 200);
  CHECK(op.w_x().row.size() == 50);
  CHECK(op.k_uu().first_col.size() == 64);
  CHECK(op.k_uu().spectrum.size() == 128);  // next power of two >= 2m
}
