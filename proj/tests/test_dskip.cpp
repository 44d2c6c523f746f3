#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gradkrig/dskip.hpp"
#include "test_utils.hpp"

using namespace gradkrig;
using testutil::random_points;
using testutil::random_vector;

namespace {

KernelSpec se(double ell = 0.5, double s = 1.0) {
  return KernelSpec(KernelFamily::SquaredExponential, ell, s);
}

LanczosFactor ones_factor(Eigen::Index n) {
  LanczosFactor f;
  f.Q = Eigen::MatrixXd::Constant(n, 1, 1.0 / std::sqrt(double(n)));
  f.alpha = Eigen::VectorXd::Constant(1, double(n));
  f.beta = Eigen::VectorXd(0);
  return f;
}

}  // namespace

TEST_CASE("build_factor rejects non-separable kernels") {
  auto cs = SplineConstants::for_domain(3.0, 2);
  KernelSpec spline(KernelFamily::Spline, 1.0, 1.0, cs);
  auto X = random_points(10, 2, 0, 1, 3);
  CHECK_THROWS_AS(build_factor(spline, X, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_factor(se(), X, 2), std::invalid_argument);
}

TEST_CASE("d=1: the single factor equals the D-SKI matrix at zero noise") {
  auto X = random_points(30, 1, 0, 1, 5);
  auto k = se(0.4, 1.2);
  OneDimFactor f = build_factor(k, X, 0, 0.1, 64);
  DskiOperator dski(k, f.grid(), X, {0.0, 0.0});
  Eigen::MatrixXd A = f.dense();
  Eigen::MatrixXd B = dski.dense();
  CHECK((A - B).cwiseAbs().maxCoeff() <= 1e-12 * B.cwiseAbs().maxCoeff());
}

TEST_CASE("d=2: Hadamard product of factors equals the tensor-grid D-SKI assembly") {
  const int n = 40;
  auto X = random_points(n, 2, 0, 1, 7);
  auto k = se(0.5, 1.3);
  OneDimFactor f0 = build_factor(k, X, 0, 0.15, 48);
  OneDimFactor f1 = build_factor(k, X, 1, 0.15, 48);

  Grid g2;
  g2.dims.resize(2);
  g2.origin.resize(2);
  g2.spacing.resize(2);
  g2.dims << f0.grid().dims(0), f1.grid().dims(0);
  g2.origin << f0.grid().origin(0), f1.grid().origin(0);
  g2.spacing << f0.grid().spacing(0), f1.grid().spacing(0);
  DskiOperator dski(k, g2, X, {0.0, 0.0});

  Eigen::MatrixXd H = f0.dense().cwiseProduct(f1.dense());
  Eigen::MatrixXd B = dski.dense();
  CHECK((H - B).cwiseAbs().maxCoeff() <= 1e-10 * B.cwiseAbs().maxCoeff());
}

TEST_CASE("factor blocks outside the derivative group replicate W K W^T") {
  const int n = 12, d = 3;
  auto X = random_points(n, d, 0, 1, 9);
  OneDimFactor f = build_factor(se(), X, 1, 0.2, 32);
  Eigen::MatrixXd A = f.dense();
  Eigen::MatrixXd value = A.topLeftCorner(n, n);
  for (int g = 0; g <= d; ++g) {
    for (int h = 0; h <= d; ++h) {
      if (g == 2 || h == 2) continue;  // derivative group for direction 1
      CHECK((A.block(g * n, h * n, n, n) - value).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("hadamard_mvm: single factor, identity element, dense pair oracle") {
  const Eigen::Index N = 60;
  Eigen::MatrixXd A = testutil::random_spd(N, 11);
  Eigen::MatrixXd B = testutil::random_spd(N, 13);
  auto fa = lanczos_lowrank(DenseOperator(A), N, 1);
  auto fb = lanczos_lowrank(DenseOperator(B), N, 2);

  Eigen::VectorXd v = random_vector(N, 3);
  CHECK((hadamard_mvm({fa}, v) - fa.apply(v)).norm() == 0.0);

  Eigen::VectorXd want = (A.cwiseProduct(B)) * v;
  Eigen::VectorXd got = hadamard_mvm({fa, fb}, v);
  CHECK((got - want).norm() <= 1e-6 * want.norm());

  // Hadamard identity element: the all-ones rank-1 factor changes nothing
  Eigen::VectorXd same = hadamard_mvm({fa, ones_factor(N)}, v);
  CHECK((same - fa.apply(v)).norm() <= 1e-12 * same.norm());

  CHECK_THROWS_AS(hadamard_mvm({}, v), std::invalid_argument);
}

TEST_CASE("hadamard diagonal and rows match the dense product") {
  const Eigen::Index N = 60;
  Eigen::MatrixXd A = testutil::random_spd(N, 17);
  Eigen::MatrixXd B = testutil::random_spd(N, 19);
  auto fa = lanczos_lowrank(DenseOperator(A), N, 4);
  auto fb = lanczos_lowrank(DenseOperator(B), N, 5);
  Eigen::MatrixXd H = A.cwiseProduct(B);

  Eigen::VectorXd diag = hadamard_diagonal({fa, fb});
  CHECK((diag - H.diagonal()).cwiseAbs().maxCoeff() <= 1e-8 * H.diagonal().maxCoeff());
  CHECK(diag.minCoeff() >= 0.0);  // Schur product of PSD matrices

  for (Eigen::Index i : {0L, 17L, 59L}) {
    Eigen::VectorXd row = hadamard_row({fa, fb}, i);
    CHECK((row - H.row(i).transpose()).norm() <= 1e-8 * H.row(i).norm());
  }
}

TEST_CASE("DskipOperator: full-rank build matches the dense Hadamard oracle") {
  const int n = 30, d = 3;
  auto X = random_points(n, d, 0, 1, 21);
  auto k = se(0.6, 1.1);
  const Eigen::Index N = n * (d + 1);

  Eigen::MatrixXd oracle = Eigen::MatrixXd::Ones(N, N);
  for (int j = 0; j < d; ++j)
    oracle = oracle.cwiseProduct(build_factor(k, X, j, 0.1, 128).dense());

  DskipConfig cfg;
  cfg.rank = N;
  cfg.grid_ratio = 0.1;
  cfg.max_grid_nodes = 128;
  DskipOperator op(k, X, {0.05, 0.02}, cfg);
  CHECK(op.factors().size() <= 2);

  Eigen::MatrixXd with_noise = oracle;
  with_noise += Eigen::MatrixXd(op.noise_diagonal().asDiagonal());
  for (unsigned s = 0; s < 4; ++s) {
    Eigen::VectorXd v = random_vector(N, 31 + s);
    Eigen::VectorXd want = with_noise * v;
    CHECK((op.apply(v) - want).norm() <= 1e-8 * want.norm());
  }

  Eigen::VectorXd diag = op.diagonal();
  CHECK((diag - with_noise.diagonal()).cwiseAbs().maxCoeff() <=
        1e-8 * with_noise.diagonal().maxCoeff());
  for (Eigen::Index i : {0L, 45L, 119L}) {
    CHECK((op.row(i) - with_noise.row(i).transpose()).norm() <=
          1e-8 * with_noise.row(i).norm());
  }
}

TEST_CASE("DskipOperator: PSD as a quadratic form and truncation accuracy") {
  const int n = 40, d = 2;
  auto X = random_points(n, d, 0, 1, 23);
  auto k = se(0.5, 1.0);
  const Eigen::Index N = n * (d + 1);

  Eigen::MatrixXd oracle = Eigen::MatrixXd::Ones(N, N);
  for (int j = 0; j < d; ++j)
    oracle = oracle.cwiseProduct(build_factor(k, X, j, 0.1, 96).dense());

  DskipConfig cfg;
  cfg.rank = 40;
  cfg.max_grid_nodes = 96;
  DskipOperator op(k, X, {0.0, 0.0}, cfg);

  double worst = 0;
  for (unsigned s = 0; s < 4; ++s) {
    Eigen::VectorXd v = random_vector(N, 41 + s);
    Eigen::VectorXd want = oracle * v;
    worst = std::max(worst, (op.apply(v) - want).norm() / want.norm());
    CHECK(v.dot(op.apply(v)) >= -1e-10 * v.squaredNorm());
  }
  CHECK(worst <= 1e-3);  // truncated rank
}

TEST_CASE("DskipOperator: Ritz values track the dense spectrum") {
  const int n = 40, d = 3;
  auto X = random_points(n, d, 0, 1, 29);
  auto k = se(0.6, 1.0);
  const Eigen::Index N = n * (d + 1);

  DskipConfig cfg;
  cfg.rank = N;
  DskipOperator op(k, X, {0.1, 0.1}, cfg);
  Eigen::MatrixXd A = op.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  Eigen::VectorXd lam = eig.eigenvalues().reverse();

  auto fac = lanczos_lowrank(op, 120, 31);
  Eigen::VectorXd ritz = fac.ritz_values();
  for (int i = 0; i < 20; ++i)
    CHECK(std::abs(ritz(i) - lam(i)) <= 0.01 * std::abs(lam(i)));
}

TEST_CASE("DskipOperator: log-lengthscale derivative matches finite differences") {
  const int n = 25, d = 2;
  auto X = random_points(n, d, 0, 1, 37);
  const double ell = 0.6, h = 1e-5;
  const Eigen::Index N = n * (d + 1);

  DskipConfig cfg;
  cfg.rank = N;
  cfg.track_dlogell = true;
  DskipOperator op(se(ell), X, {0.0, 0.0}, cfg);

  // finite differences at fixed interpolation grids: the derivative is taken
  // with W, dW held constant, so the oracle must pin the grids too
  std::vector<Grid> grids;
  for (int j = 0; j < d; ++j) grids.push_back(build_factor(se(ell), X, j).grid());
  auto dense_kernel_part = [&](double l) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Ones(N, N);
    for (int j = 0; j < d; ++j) {
      KernelSpec k1(KernelFamily::SquaredExponential, l, std::pow(1.0, 1.0 / d));
      OneDimFactor f(k1, grids[j], X.col(j), j, d);
      H = H.cwiseProduct(f.dense());
    }
    return H;
  };
  Eigen::MatrixXd want = (dense_kernel_part(ell * std::exp(h)) -
                          dense_kernel_part(ell * std::exp(-h))) /
                         (2 * h);
  Eigen::VectorXd v = random_vector(N, 43);
  Eigen::VectorXd got = op.dlogell_apply(v);
  CHECK((got - want * v).norm() <= 1e-5 * (want * v).norm());
}

TEST_CASE("rank policy: strict mode rejects intermediate overflow") {
  const int n = 10, d = 4;
  auto X = random_points(n, d, 0, 1, 41);
  DskipConfig cfg;
  cfg.rank = 8;
  cfg.rank_policy = RankPolicy::Error;
  CHECK_THROWS_AS(DskipOperator(se(), X, {0.0, 0.0}, cfg), std::runtime_error);

  cfg.rank_policy = RankPolicy::Recompress;
  DskipOperator ok(se(), X, {0.0, 0.0}, cfg);
  CHECK(ok.factors().size() == 2);
}
