#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gradkrig/linalg.hpp"
#include "gradkrig/rng.hpp"
#include "test_utils.hpp"

using namespace gradkrig;
using testutil::random_spd;
using testutil::random_vector;

TEST_CASE("cg: identity converges immediately, zero rhs is trivial") {
  DenseOperator I(Eigen::MatrixXd::Identity(20, 20));
  Eigen::VectorXd b = random_vector(20, 1);
  auto res = cg(I, b, {1e-10, 100});
  CHECK(res.converged);
  CHECK(res.iterations <= 1);
  CHECK((res.x - b).norm() < 1e-12);

  auto zero = cg(I, Eigen::VectorXd::Zero(20));
  CHECK(zero.converged);
  CHECK(zero.x.norm() == 0.0);
}

TEST_CASE("cg: matches a dense direct solve") {
  Eigen::MatrixXd A = random_spd(50, 3);
  DenseOperator op(A);
  Eigen::VectorXd b = random_vector(50, 4);
  auto res = cg(op, b, {1e-12, 500});
  CHECK(res.converged);
  Eigen::VectorXd want = A.llt().solve(b);
  CHECK((res.x - want).norm() <= 1e-8 * want.norm());
  // residual history is recorded and decreasing overall
  CHECK(res.residual_history.size() == size_t(res.iterations) + 1);
  CHECK(res.residual_history.back() <= 1e-12);
}

TEST_CASE("cg: an exact-inverse preconditioner converges in at most 2 iterations") {
  Eigen::MatrixXd A = random_spd(40, 5);
  Eigen::MatrixXd Ainv = A.inverse();
  DenseOperator op(A);
  Eigen::VectorXd b = random_vector(40, 6);
  auto res = cg(op, b, {1e-10, 100},
                [&](const Eigen::Ref<const Eigen::VectorXd>& r) -> Eigen::VectorXd {
                  return Ainv * r;
                });
  CHECK(res.converged);
  CHECK(res.iterations <= 2);
}

TEST_CASE("cg: non-convergence is flagged, not thrown") {
  // tiny iteration budget on an ill-conditioned matrix
  Eigen::MatrixXd A = random_spd(60, 7, 1e-12);
  A.diagonal().array() += 0.0;
  DenseOperator op(A);
  auto res = cg(op, random_vector(60, 8), {1e-14, 2});
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 2);
}

TEST_CASE("cg: A-norm error decreases monotonically") {
  Eigen::MatrixXd A = random_spd(30, 9);
  Eigen::VectorXd b = random_vector(30, 10);
  Eigen::VectorXd xstar = A.llt().solve(b);
  DenseOperator op(A);

  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 12; ++it) {
    auto res = cg(op, b, {0.0, it});
    Eigen::VectorXd e = res.x - xstar;
    double anorm = std::sqrt(e.dot(A * e));
    CHECK(anorm <= prev * (1.0 + 1e-12));
    prev = anorm;
  }
}

TEST_CASE("pivoted_cholesky: rank-1 operator recovered at rank 1") {
  Eigen::VectorXd v = random_vector(25, 11);
  Eigen::MatrixXd A = v * v.transpose();
  auto fac = pivoted_cholesky(
      A.diagonal(), [&](Eigen::Index i) -> Eigen::VectorXd { return A.row(i); }, 10, 0.0);
  CHECK(fac.pivots.size() >= 1);
  Eigen::Index expect;
  v.cwiseAbs2().maxCoeff(&expect);
  CHECK(fac.pivots[0] == expect);
  Eigen::MatrixXd R = fac.L * fac.L.transpose();
  CHECK((R - A).cwiseAbs().maxCoeff() < 1e-10 * A.diagonal().maxCoeff());
}

TEST_CASE("pivoted_cholesky: diagonal operator pivots in decreasing order") {
  Eigen::VectorXd d(6);
  d << 3.0, 9.0, 1.0, 7.0, 5.0, 2.0;
  Eigen::MatrixXd A = d.asDiagonal();
  auto fac = pivoted_cholesky(
      d, [&](Eigen::Index i) -> Eigen::VectorXd { return A.row(i); }, 6, 0.0);
  std::vector<Eigen::Index> want = {1, 3, 4, 0, 5, 2};
  CHECK(fac.pivots == want);
}

TEST_CASE("pivoted_cholesky: full-rank reconstruction of a random PSD matrix") {
  Eigen::MatrixXd A = random_spd(40, 13);
  auto fac = pivoted_cholesky(
      A.diagonal(), [&](Eigen::Index i) -> Eigen::VectorXd { return A.row(i); }, 40, 0.0);
  Eigen::MatrixXd R = fac.L * fac.L.transpose();
  CHECK((R - A).cwiseAbs().maxCoeff() <= 1e-10 * A.cwiseAbs().maxCoeff());
  CHECK(fac.residual_trace <= 1e-10 * fac.initial_trace);

  // interpolation property: pivot rows agree exactly at every truncation
  auto partial = pivoted_cholesky(
      A.diagonal(), [&](Eigen::Index i) -> Eigen::VectorXd { return A.row(i); }, 12, 0.0);
  Eigen::MatrixXd Rp = partial.L * partial.L.transpose();
  for (auto piv : partial.pivots)
    CHECK((Rp.row(piv) - A.row(piv)).cwiseAbs().maxCoeff() <
          1e-9 * A.cwiseAbs().maxCoeff());
}

TEST_CASE("pivoted_cholesky: indefinite input is rejected") {
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  Eigen::VectorXd diag = A.diagonal();
  CHECK_THROWS_AS(pivoted_cholesky(
                      diag, [&](Eigen::Index i) -> Eigen::VectorXd { return A.row(i); },
                      2, 0.0),
                  std::runtime_error);
}

TEST_CASE("preconditioner: zero-ish factor reduces to b / sigma^2") {
  const Eigen::Index n = 15;
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, 1);
  F(0, 0) = 1e-300;  // numerically zero factor
  Preconditioner M(F, 0.5, n);
  Eigen::VectorXd b = random_vector(n, 17);
  CHECK((M.apply(b) - b / 0.25).norm() < 1e-10 * b.norm());
}

namespace {

// Extended-precision solve of (sigma^2 I + F F^T) x = b; the double-precision
// dense inverse is exactly the route that loses digits at small sigma, so the
// oracle runs in long double.
Eigen::VectorXd solve_long_double(const Eigen::MatrixXd& F, double sigma,
                                  const Eigen::VectorXd& b) {
  using LD = long double;
  const Eigen::Index n = F.rows();
  Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      LD acc = (i == j) ? LD(sigma) * LD(sigma) : LD(0);
      for (Eigen::Index c = 0; c < F.cols(); ++c) acc += LD(F(i, c)) * LD(F(j, c));
      M(i, j) = acc;
    }
  Eigen::Matrix<LD, Eigen::Dynamic, 1> bl = b.cast<LD>();
  Eigen::Matrix<LD, Eigen::Dynamic, 1> x = M.ldlt().solve(bl);
  return x.cast<double>();
}

}  // namespace

TEST_CASE("preconditioner: matches dense inverse where Woodbury loses digits") {
  const Eigen::Index n = 20, k = 5;
  const double sigma = 1e-4;
  Eigen::MatrixXd F(n, k);
  for (Eigen::Index j = 0; j < k; ++j) F.col(j) = random_vector(n, 100 + j);

  Preconditioner P(F, sigma, n);
  CHECK(P.rank() == k);
  for (unsigned s = 0; s < 5; ++s) {
    Eigen::VectorXd b = random_vector(n, 200 + s);
    Eigen::VectorXd want = solve_long_double(F, sigma, b);
    CHECK((P.apply(b) - want).norm() <= 1e-8 * want.norm());
    CHECK(P.quadratic(b) == doctest::Approx(b.dot(want)).epsilon(1e-8));
  }
}

TEST_CASE("preconditioner: general positive diagonal noise") {
  const Eigen::Index n = 18, k = 4;
  Eigen::MatrixXd F(n, k);
  for (Eigen::Index j = 0; j < k; ++j) F.col(j) = random_vector(n, 300 + j);
  Eigen::VectorXd d = random_vector(n, 310).cwiseAbs().array() + 0.01;
  Eigen::MatrixXd M = Eigen::MatrixXd(d.asDiagonal()) + F * F.transpose();
  Eigen::MatrixXd Minv = M.inverse();
  Preconditioner P(F, d);
  Eigen::VectorXd b = random_vector(n, 311);
  CHECK((P.apply(b) - Minv * b).norm() <= 1e-10 * (Minv * b).norm());
}

TEST_CASE("preconditioner: residual projection is idempotent") {
  // Q1 has orthonormal columns only in the sigma -> 0 limit (Q1^T Q1 =
  // I - sigma^2 (R^T R)^{-1}); at sigma far below the singular values of F
  // the residual map I - Q1 Q1^T is a projection to working precision.
  const Eigen::Index n = 30, k = 6;
  const double sigma = 1e-8;
  Eigen::MatrixXd F(n, k);
  for (Eigen::Index j = 0; j < k; ++j) F.col(j) = random_vector(n, 400 + j);
  Preconditioner P(F, sigma, n);
  Eigen::VectorXd b = random_vector(n, 410);
  auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - P.q1() * (P.q1().transpose() * v);
  };
  Eigen::VectorXd once = residual(b);
  Eigen::VectorXd twice = residual(once);
  CHECK((twice - once).norm() <= 1e-12 * b.norm());
}

TEST_CASE("preconditioner: zero noise is rejected at construction") {
  Eigen::MatrixXd F = Eigen::MatrixXd::Ones(5, 1);
  CHECK_THROWS_AS(Preconditioner(F, 0.0, 5), std::invalid_argument);
  Eigen::VectorXd bad(5);
  bad << 1, 1, 0, 1, 1;
  CHECK_THROWS_AS(Preconditioner(F, bad), std::invalid_argument);
  CHECK_THROWS_AS(Preconditioner(Eigen::MatrixXd(5, 0), 1.0, 5), std::invalid_argument);
}

TEST_CASE("slq_logdet: exact for scaled identities") {
  DenseOperator I(Eigen::MatrixXd::Identity(64, 64));
  auto r1 = slq_logdet(I, {4, 10, 42, 1e-12});
  CHECK(r1.logdet == doctest::Approx(0.0).epsilon(1e-12));

  DenseOperator C(3.7 * Eigen::MatrixXd::Identity(64, 64));
  auto r2 = slq_logdet(C, {4, 10, 42, 1e-12});
  CHECK(r2.logdet == doctest::Approx(64.0 * std::log(3.7)).epsilon(1e-10));
}

TEST_CASE("slq_logdet: within 1% of the dense value on a kernel-like spectrum") {
  // fast eigenvalue decay onto a noise floor, the regime SLQ is built for
  const Eigen::Index n = 400;
  Eigen::MatrixXd basis = random_spd(n, 21);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis);
  Eigen::VectorXd lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam(i) = 0.01 + 100.0 * std::exp(-0.5 * double(i));
  Eigen::MatrixXd A = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  DenseOperator op(A);
  const double want = lam.array().log().sum();

  std::vector<double> errs;
  for (unsigned seed = 0; seed < 5; ++seed) {
    auto r = slq_logdet(op, {10, 50, seed, 1e-12});
    errs.push_back(std::abs(r.logdet - want) / std::abs(want));
  }
  std::sort(errs.begin(), errs.end());
  CHECK(errs[2] < 0.01);  // median over 5 seeds
}

TEST_CASE("trace_estimate: A = B gives N exactly, B = 0 gives zero") {
  Eigen::MatrixXd A = random_spd(40, 23);
  DenseOperator op(A);
  double t = trace_estimate(op, op, 8, 9, {1e-12, 1000});
  CHECK(t == doctest::Approx(40.0).epsilon(1e-8));

  DenseOperator zero(Eigen::MatrixXd::Zero(40, 40));
  CHECK(trace_estimate(op, zero, 8, 9, {1e-12, 1000}) == doctest::Approx(0.0));
}

TEST_CASE("trace_estimate: dense oracle within a few percent") {
  Eigen::MatrixXd A = random_spd(100, 29, 1e-1);
  Eigen::MatrixXd B = random_spd(100, 31);
  double want = (A.llt().solve(B)).trace();
  double got = trace_estimate(DenseOperator(A), DenseOperator(B), 64, 12, {1e-12, 2000});
  CHECK(std::abs(got - want) <= 0.02 * std::abs(want));
}

TEST_CASE("trace_estimate: propagates CG non-convergence") {
  Eigen::MatrixXd A = random_spd(50, 33, 1e-12);
  DenseOperator op(A);
  CHECK_THROWS_AS(trace_estimate(op, op, 2, 1, {1e-14, 1}), std::runtime_error);
}

TEST_CASE("lanczos_lowrank: identity operator reproduces the start space") {
  DenseOperator I(Eigen::MatrixXd::Identity(30, 30));
  auto fac = lanczos_lowrank(I, 5, 3);
  // identity: immediate breakdown after one step with alpha = 1
  CHECK(fac.alpha(0) == doctest::Approx(1.0));
  CHECK(fac.breakdown);
  Eigen::VectorXd q0 = fac.Q.col(0);
  CHECK((fac.apply(q0) - q0).norm() < 1e-12);
}

TEST_CASE("lanczos_lowrank: exact reconstruction of a rank-3 operator") {
  Eigen::MatrixXd G(40, 3);
  for (int j = 0; j < 3; ++j) G.col(j) = random_vector(40, 500 + j);
  Eigen::MatrixXd A = G * G.transpose();
  DenseOperator op(A);
  auto fac = lanczos_lowrank(op, 10, 7);
  CHECK(fac.rank() >= 3);
  CHECK((fac.dense() - A).cwiseAbs().maxCoeff() <= 1e-10 * A.cwiseAbs().maxCoeff());
  // orthonormality of Q
  Eigen::MatrixXd QtQ = fac.Q.transpose() * fac.Q;
  CHECK((QtQ - Eigen::MatrixXd::Identity(fac.rank(), fac.rank())).norm() < 1e-8);
}

TEST_CASE("lanczos_lowrank: low-rank MVM accuracy on a smooth spectrum") {
  // kernel-like spectrum with fast decay
  const Eigen::Index n = 300;
  Eigen::MatrixXd V = random_spd(n, 41);  // use its eigenvectors
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
  Eigen::VectorXd lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam(i) = std::exp(-0.4 * double(i));
  Eigen::MatrixXd A =
      eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  DenseOperator op(A);
  auto fac = lanczos_lowrank(op, 50, 11);
  for (unsigned s = 0; s < 3; ++s) {
    Eigen::VectorXd v = random_vector(n, 600 + s);
    Eigen::VectorXd want = A * v;
    CHECK((fac.apply(v) - want).norm() <= 1e-5 * want.norm());
  }
}
