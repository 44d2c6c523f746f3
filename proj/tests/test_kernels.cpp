#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gradkrig/kernels.hpp"
#include "test_utils.hpp"

using namespace gradkrig;
using testutil::fd_grad;
using testutil::fd_hess;
using testutil::random_points;

namespace {

KernelSpec se(double ell = 1.0, double s = 1.0) {
  return KernelSpec(KernelFamily::SquaredExponential, ell, s);
}

KernelSpec spline(int dim, double ell = 1.0, double s = 1.0, double diam = 4.0) {
  return KernelSpec(KernelFamily::Spline, ell, s, SplineConstants::for_domain(diam, dim));
}

}  // namespace

TEST_CASE("eval: SE closed form") {
  auto k = se();
  Eigen::Vector2d x(0.3, -0.2);
  CHECK(eval(k, x, x) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::Vector2d a(1.0, 1.0), b(0.0, 0.0);  // |a-b| = sqrt(2)
  CHECK(eval(k, a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  auto k2 = se(0.5, 2.0);
  CHECK(eval(k2, x, x) == doctest::Approx(4.0));  // s^2 at coincident points
}

TEST_CASE("eval: spline at coincident points is s^2 b") {
  for (int d : {1, 3}) {
    auto k = spline(d);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(d, 0.4);
    CHECK(eval(k, x, x) == doctest::Approx(k.spline().b).epsilon(1e-14));
  }
  auto k2 = spline(2, 1.0, 2.0);
  Eigen::Vector2d x(0.1, 0.2);
  CHECK(eval(k2, x, x) == doctest::Approx(4.0 * k2.spline().b).epsilon(1e-14));
}

TEST_CASE("eval: dimension mismatch throws") {
  auto k = se();
  Eigen::Vector2d x(0, 0);
  Eigen::Vector3d y(0, 0, 0);
  CHECK_THROWS_AS(eval(k, x, y), std::invalid_argument);
  CHECK_THROWS_AS(eval_grad(k, x, y), std::invalid_argument);
  CHECK_THROWS_AS(eval_hess_block(k, x, y), std::invalid_argument);
}

TEST_CASE("eval_grad: SE special values and antisymmetry") {
  auto k = se();
  Eigen::Vector2d x(0.7, -0.1);
  CHECK(eval_grad(k, x, x).norm() == doctest::Approx(0.0));

  Eigen::Vector2d a(1.0, 0.0), b(0.0, 0.0);
  Eigen::VectorXd g = eval_grad(k, a, b);
  CHECK(g(0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(g(1) == doctest::Approx(0.0));

  Eigen::VectorXd gswap = eval_grad(k, b, a);
  CHECK((g + gswap).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("eval_hess_block: SE special values") {
  auto k = se(0.5, 1.5);
  Eigen::Vector3d x(0.1, 0.2, 0.3);
  Eigen::MatrixXd H = eval_hess_block(k, x, x);
  const double want = 1.5 * 1.5 / 0.25;  // s^2 / ell^2
  CHECK((H - want * Eigen::MatrixXd::Identity(3, 3)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));

  // d=1, ell=s=1, x-x'=1: (1 - 1) e^{-1/2} = 0
  auto k1 = se();
  Eigen::VectorXd a(1), b(1);
  a << 1.0;
  b << 0.0;
  CHECK(eval_hess_block(k1, a, b)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("eval_hess_block: transpose symmetry under argument swap") {
  for (auto k : {se(0.8, 1.3), spline(3, 0.9, 1.1)}) {
    auto X = random_points(8, 3, -1, 1, 11);
    auto Y = random_points(8, 3, -1, 1, 12);
    for (int i = 0; i < 8; ++i) {
      Eigen::MatrixXd H1 = eval_hess_block(k, X.row(i), Y.row(i));
      Eigen::MatrixXd H2 = eval_hess_block(k, Y.row(i), X.row(i));
      CHECK((H1 - H2.transpose()).norm() < 1e-13 * (1.0 + H1.norm()));
    }
  }
}

TEST_CASE("derivatives agree with finite differences of eval") {
  // SE down to separations of 1e-3 ell; spline at generic separations.
  const double ell = 0.7;
  auto kse = se(ell, 1.2);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + trial % 3;
    Eigen::VectorXd x(d), y(d);
    for (int j = 0; j < d; ++j) x(j) = unif(rng);
    double sep = (trial % 5 == 0) ? 1e-3 * ell : std::abs(unif(rng)) + 0.05;
    Eigen::VectorXd dir = Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return unif(rng); });
    dir.normalize();
    y = x + sep * dir;

    Eigen::VectorXd g = eval_grad(kse, x, y);
    Eigen::VectorXd gfd = fd_grad(kse, x, y, 1e-5 * ell);
    double gscale = std::max(g.cwiseAbs().maxCoeff(), 1e-12);
    CHECK((g - gfd).cwiseAbs().maxCoeff() / gscale < 1e-6);

    Eigen::MatrixXd H = eval_hess_block(kse, x, y);
    Eigen::MatrixXd Hfd = fd_hess(kse, x, y, 1e-4 * ell);
    double hscale = std::max(H.cwiseAbs().maxCoeff(), 1e-12);
    CHECK((H - Hfd).cwiseAbs().maxCoeff() / hscale < 1e-6);
  }

  auto ksp = spline(3, 0.9, 1.1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(3), y(3);
    for (int j = 0; j < 3; ++j) {
      x(j) = unif(rng);
      y(j) = unif(rng);
    }
    if ((x - y).norm() < 0.05) continue;
    Eigen::VectorXd g = eval_grad(ksp, x, y);
    Eigen::VectorXd gfd = fd_grad(ksp, x, y, 1e-5);
    CHECK((g - gfd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff() < 1e-6);
    Eigen::MatrixXd H = eval_hess_block(ksp, x, y);
    Eigen::MatrixXd Hfd = fd_hess(ksp, x, y, 1e-4);
    CHECK((H - Hfd).cwiseAbs().maxCoeff() / H.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("log-lengthscale derivatives agree with finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (bool use_se : {true, false}) {
    for (int trial = 0; trial < 40; ++trial) {
      int d = use_se ? 2 : 3;
      Eigen::VectorXd x(d), y(d);
      for (int j = 0; j < d; ++j) {
        x(j) = unif(rng);
        y(j) = unif(rng);
      }
      if ((x - y).norm() < 0.05) continue;
      const double ell = 0.8, h = 1e-6;
      auto make = [&](double l) {
        return use_se ? se(l, 1.1) : spline(3, l, 1.1);
      };
      auto k = make(ell);

      double want = (eval(make(ell * std::exp(h)), x, y) -
                     eval(make(ell * std::exp(-h)), x, y)) /
                    (2 * h);
      CHECK(eval_dlogell(k, x, y) == doctest::Approx(want).epsilon(1e-6));

      Eigen::VectorXd wgrad = (eval_grad(make(ell * std::exp(h)), x, y) -
                               eval_grad(make(ell * std::exp(-h)), x, y)) /
                              (2 * h);
      Eigen::VectorXd got = eval_grad_dlogell(k, x, y);
      CHECK((got - wgrad).norm() < 1e-5 * (1.0 + wgrad.norm()));

      Eigen::MatrixXd whess = (eval_hess_block(make(ell * std::exp(h)), x, y) -
                               eval_hess_block(make(ell * std::exp(-h)), x, y)) /
                              (2 * h);
      Eigen::MatrixXd goth = eval_hess_dlogell(k, x, y);
      CHECK((goth - whess).norm() < 1e-5 * (1.0 + whess.norm()));
    }
  }
}

TEST_CASE("assemble_dense: 1-point coincident SE is the identity") {
  auto k = se();
  Eigen::MatrixXd X(1, 1);
  X << 0.3;
  Eigen::MatrixXd K = assemble_dense(k, X, X, true);
  CHECK(K.rows() == 2);
  CHECK((K - Eigen::Matrix2d::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("assemble_dense: value block matches elementwise eval") {
  auto k = se(0.6, 1.4);
  auto X = random_points(20, 2, 0, 1, 21);
  auto Y = random_points(15, 2, 0, 1, 22);
  Eigen::MatrixXd K = assemble_dense(k, X, Y, true);
  Eigen::MatrixXd V = assemble_dense(k, X, Y, false);
  CHECK(V.rows() == 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 15; ++j) {
      CHECK(K(i, j) == doctest::Approx(eval(k, X.row(i), Y.row(j))).epsilon(1e-14));
      CHECK(V(i, j) == K(i, j));
    }
}

TEST_CASE("assemble_dense: derivative blocks match finite differences of the value block") {
  const double ell = 0.7;
  for (auto k : {se(ell, 1.0), spline(3, ell, 1.0)}) {
    int d = 3;
    auto X = random_points(6, d, 0, 1, 31);
    auto Y = random_points(5, d, 2.0, 3.0, 32);  // separated sets
    Eigen::MatrixXd K = assemble_dense(k, X, Y, true);
    const int n = 6, np = 5;
    double scale = K.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < np; ++j) {
        Eigen::VectorXd gfd = fd_grad(k, X.row(i), Y.row(j), 1e-5 * ell);
        Eigen::MatrixXd hfd = fd_hess(k, X.row(i), Y.row(j), 1e-4 * ell);
        for (int p = 0; p < d; ++p) {
          CHECK(K(i, (p + 1) * np + j) == doctest::Approx(gfd(p)).epsilon(1e-6));
          CHECK(std::abs(K((p + 1) * n + i, j) + gfd(p)) < 1e-6 * scale);
          for (int q = 0; q < d; ++q)
            CHECK(std::abs(K((p + 1) * n + i, (q + 1) * np + j) - hfd(p, q)) <
                  1e-6 * scale);
        }
      }
    }
  }
}

TEST_CASE("assemble_dense: symmetric when X == X', and PSD with jitter") {
  for (int d : {1, 2}) {
    auto k = se(0.4, 1.0);
    auto X = random_points(60, d, 0, 1, 41 + d);
    Eigen::MatrixXd K = assemble_dense(k, X, X, true);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const double sigma = 1e-4;  // >= 1e-4 * s
    Eigen::MatrixXd Kt = K + sigma * sigma * Eigen::MatrixXd::Identity(K.rows(), K.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Kt, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("assemble_dense: spline kernel matrix PSD on random point sets") {
  for (int d : {1, 2, 3}) {
    double diam = 2.0 * std::sqrt(double(d));
    auto k = KernelSpec(KernelFamily::Spline, 1.0, 1.0, SplineConstants::for_domain(diam, d));
    auto X = random_points(80, d, -1, 1, 51 + d);
    Eigen::MatrixXd K = assemble_dense(k, X, X, false);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > -1e-9 * eig.eigenvalues().maxCoeff());
  }
}

TEST_CASE("assemble_dense: size cap is enforced") {
  auto k = se();
  auto X = random_points(200, 2, 0, 1, 61);
  AssemblyOptions opts;
  opts.size_cap = 1000;
  CHECK_THROWS_AS(assemble_dense(k, X, X, opts), std::length_error);
}

TEST_CASE("derivative scaling is symmetric and optional") {
  auto k = se(0.5, 1.0);
  auto X = random_points(10, 2, 0, 1, 71);
  AssemblyOptions opts;
  opts.derivative_scale = 0.5;
  Eigen::MatrixXd Ks = assemble_dense(k, X, X, opts);
  Eigen::MatrixXd K = assemble_dense(k, X, X, true);
  const int n = 10;
  CHECK((Ks.topLeftCorner(n, n) - K.topLeftCorner(n, n)).norm() == doctest::Approx(0.0));
  CHECK((Ks.bottomLeftCorner(2 * n, n) - 0.5 * K.bottomLeftCorner(2 * n, n)).norm() ==
        doctest::Approx(0.0));
  CHECK((Ks.bottomRightCorner(2 * n, 2 * n) - 0.25 * K.bottomRightCorner(2 * n, 2 * n))
            .norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((Ks - Ks.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("point-major permutation exposes the value block per point") {
  const int n = 7, d = 2;
  auto k = se(0.5, 1.0);
  auto X = random_points(n, d, 0, 1, 81);
  Eigen::MatrixXd K = assemble_dense(k, X, X, true);
  auto perm = point_major_permutation(n, d);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n * (d + 1), n * (d + 1));
  for (size_t r = 0; r < perm.size(); ++r) P(Eigen::Index(r), perm[r]) = 1.0;
  Eigen::MatrixXd Kp = P * K * P.transpose();
  // point-major: entry ((i,(t=0)), (j,(t=0))) is the value covariance
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(Kp(i * (d + 1), j * (d + 1)) == doctest::Approx(K(i, j)));
  // type-major: the value-only matrix is the leading principal block
  CHECK((K.topLeftCorner(n, n) - assemble_dense(k, X, X, false)).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("invalid hyperparameters are rejected") {
  CHECK_THROWS_AS(se(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(se(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SplineConstants::for_domain(-2.0, 3), std::invalid_argument);
}
