#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "gradkrig/interpolation.hpp"
#include "gradkrig/kernels.hpp"
#include "test_utils.hpp"

using namespace gradkrig;
using testutil::random_points;

namespace {

Grid grid_1d(double lo, double hi, double h) {
  Grid g;
  g.dims.resize(1);
  g.origin.resize(1);
  g.spacing.resize(1);
  const int m = static_cast<int>(std::ceil((hi - lo) / h)) + 1;
  g.dims << m;
  g.origin << lo;
  g.spacing << h;
  return g;
}

Eigen::VectorXd grid_samples_1d(const Grid& g, const std::function<double(double)>& f) {
  Eigen::VectorXd v(g.dims(0));
  for (int i = 0; i < g.dims(0); ++i) v(i) = f(g.node(0, i));
  return v;
}

}  // namespace

TEST_CASE("quintic_weights: interpolation and partition of unity") {
  auto [w0, dw0] = quintic_weights(0.0);
  for (int k = 0; k < 6; ++k) {
    CHECK(w0[k] == doctest::Approx(k == 2 ? 1.0 : 0.0).epsilon(1e-14));
  }

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    double t = unif(rng);
    if (t >= 1.0) continue;
    auto [w, dw] = quintic_weights(t);
    double sw = 0, sdw = 0;
    for (int k = 0; k < 6; ++k) {
      sw += w[k];
      sdw += dw[k];
    }
    CHECK(sw == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(sdw == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(quintic_weights(1.0), std::invalid_argument);
  CHECK_THROWS_AS(quintic_weights(-0.1), std::invalid_argument);
}

TEST_CASE("quintic_weights: derivative coefficients are the kernel derivative") {
  // central differences of the weights in t
  for (double t : {0.0, 0.2, 0.5, 0.9}) {
    const double h = 1e-6;
    auto [wp, dwp] = quintic_weights(std::min(t + h, 1.0 - 1e-12));
    auto [wm, dwm] = quintic_weights(t - h < 0 ? 0.0 : t - h);
    auto [w, dw] = quintic_weights(t);
    if (t - h < 0 || t + h >= 1.0) continue;
    for (int k = 0; k < 6; ++k)
      CHECK(dw[k] == doctest::Approx((wp[k] - wm[k]) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("quintic interpolation reproduces low-degree polynomials exactly") {
  Grid g = grid_1d(-1.0, 2.0, 0.1);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(-0.3, 1.3);
  for (int deg = 0; deg <= 4; ++deg) {
    auto f = [deg](double x) { return std::pow(x, deg); };
    Eigen::VectorXd fg = grid_samples_1d(g, f);
    for (int trial = 0; trial < 60; ++trial) {
      Eigen::VectorXd x(1);
      x << unif(rng);
      auto st = point_stencil(g, x);
      double val = 0;
      for (size_t c = 0; c < st.indices.size(); ++c) val += st.value(c) * fg(st.indices[c]);
      CHECK(val == doctest::Approx(f(x(0))).epsilon(1e-12));
    }
  }
}

TEST_CASE("cubic weights reproduce quadratics and sum to one") {
  Grid g = grid_1d(-1.0, 2.0, 0.05);
  Eigen::VectorXd fg = grid_samples_1d(g, [](double x) { return x * x; });
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-0.4, 1.4);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(1);
    x << unif(rng);
    auto st = point_stencil(g, x, InterpolationOrder::Cubic);
    CHECK(st.indices.size() == 4);
    double val = 0, sw = 0;
    for (size_t c = 0; c < st.indices.size(); ++c) {
      val += st.value(c) * fg(st.indices[c]);
      sw += st.value(c);
    }
    CHECK(sw == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(val == doctest::Approx(x(0) * x(0)).epsilon(1e-12));
  }
}

TEST_CASE("build_interpolation: row structure and unit rows at grid nodes") {
  Grid g = Grid::cover(random_points(50, 2, 0, 1, 3), 0.07);
  auto X = random_points(50, 2, 0, 1, 3);
  auto interp = build_interpolation(g, X);
  CHECK(interp.W.rows() == 50);
  CHECK(interp.dW.size() == 2);
  CHECK(interp.W.nonZeros() <= 50 * 36);
  for (const auto& dWj : interp.dW) CHECK(dWj.nonZeros() <= 50 * 36);

  // rows sum to 1 / 0
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
  Eigen::VectorXd rw = interp.W * ones;
  CHECK((rw.array() - 1.0).abs().maxCoeff() < 1e-12);
  for (const auto& dWj : interp.dW)
    CHECK((dWj * ones).cwiseAbs().maxCoeff() < 1e-10);

  // a point exactly on a grid node has a unit weight row
  Eigen::MatrixXd node(1, 2);
  node << g.node(0, 5), g.node(1, 7);
  auto ni = build_interpolation(g, node);
  Eigen::VectorXd row = ni.W.row(0);
  CHECK(row.maxCoeff() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(row.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interpolated SE kernel slice matches direct evaluation") {
  const double ell = 0.45;
  KernelSpec k(KernelFamily::SquaredExponential, ell, 1.0);
  auto X = random_points(100, 2, 0, 1, 23);
  Grid g = Grid::cover(X, ell / 6.0);  // h <= ell/5

  Eigen::Vector2d x0(0.52, 0.31);
  Eigen::VectorXd kg(g.size());
  for (int i = 0; i < g.dims(0); ++i)
    for (int j = 0; j < g.dims(1); ++j) {
      Eigen::Vector2d u(g.node(0, i), g.node(1, j));
      kg(i * g.dims(1) + j) = eval(k, u, x0);
    }

  auto interp = build_interpolation(g, X);
  Eigen::VectorXd approx = interp.W * kg;
  double worst = 0;
  for (int i = 0; i < X.rows(); ++i) {
    double exact = eval(k, X.row(i).transpose(), x0);
    worst = std::max(worst, std::abs(approx(i) - exact));
  }
  CHECK(worst < 1e-5);  // h = ell/5
}

TEST_CASE("derivative operator differentiates linear fields exactly") {
  auto X = random_points(40, 3, 0, 1, 29);
  Grid g = Grid::cover(X, 0.2);
  auto interp = build_interpolation(g, X);
  Eigen::VectorXd fg(g.size());
  for (int i = 0; i < g.dims(0); ++i)
    for (int j = 0; j < g.dims(1); ++j)
      for (int l = 0; l < g.dims(2); ++l)
        fg((i * g.dims(1) + j) * g.dims(2) + l) =
            g.node(0, i) + g.node(1, j) + g.node(2, l);
  for (int p = 0; p < 3; ++p) {
    Eigen::VectorXd dp = interp.dW[p] * fg;
    CHECK((dp.array() - 1.0).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dW matches finite differences of W interpolation") {
  const double ell = 0.5;
  auto Xbase = random_points(30, 2, 0.2, 0.8, 31);
  Grid g = Grid::cover(Xbase, ell / 6.0);
  auto smooth = [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y) + x * y; };
  Eigen::VectorXd fg(g.size());
  for (int i = 0; i < g.dims(0); ++i)
    for (int j = 0; j < g.dims(1); ++j)
      fg(i * g.dims(1) + j) = smooth(g.node(0, i), g.node(1, j));

  const double h = 1e-6;
  for (int i = 0; i < Xbase.rows(); ++i) {
    Eigen::VectorXd x = Xbase.row(i);
    auto st = point_stencil(g, x);
    for (int p = 0; p < 2; ++p) {
      Eigen::VectorXd xp = x, xm = x;
      xp(p) += h;
      xm(p) -= h;
      auto stp = point_stencil(g, xp);
      auto stm = point_stencil(g, xm);
      double vp = 0, vm = 0, dv = 0;
      for (size_t c = 0; c < stp.indices.size(); ++c) vp += stp.value(c) * fg(stp.indices[c]);
      for (size_t c = 0; c < stm.indices.size(); ++c) vm += stm.value(c) * fg(stm.indices[c]);
      for (size_t c = 0; c < st.indices.size(); ++c)
        dv += st.derivative(c, p) * fg(st.indices[c]);
      CHECK(dv == doctest::Approx((vp - vm) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("grid refinement: halving h gains at least a factor 8") {
  const double ell = 0.6;
  KernelSpec k(KernelFamily::SquaredExponential, ell, 1.0);
  auto X = random_points(200, 1, 0, 1, 37);
  Eigen::Vector2d dummy;
  Eigen::VectorXd x0(1);
  x0 << 0.37;

  auto slice_error = [&](double h) {
    Grid g = Grid::cover(X, h);
    Eigen::VectorXd kg(g.size());
    for (int i = 0; i < g.dims(0); ++i) {
      Eigen::VectorXd u(1);
      u << g.node(0, i);
      kg(i) = eval(k, u, x0);
    }
    auto interp = build_interpolation(g, X);
    Eigen::VectorXd approx = interp.W * kg;
    double worst = 0;
    for (int i = 0; i < X.rows(); ++i) {
      Eigen::VectorXd xi = X.row(i);
      worst = std::max(worst, std::abs(approx(i) - eval(k, xi, x0)));
    }
    return worst;
  };

  double prev = slice_error(ell / 2.0);
  for (double h : {ell / 4.0, ell / 8.0}) {
    double cur = slice_error(h);
    CHECK(cur * 8.0 <= prev * 1.05);  // observed order >= 3
    prev = cur;
  }
}

TEST_CASE("points outside the interior raise OutOfGridError naming the point") {
  Grid g = grid_1d(0.0, 1.0, 0.1);
  Eigen::MatrixXd X(2, 1);
  X << 0.5, 0.95;  // second point too close to the boundary for the stencil
  try {
    build_interpolation(g, X);
    FAIL("expected OutOfGridError");
  } catch (const OutOfGridError& e) {
    CHECK(std::string(e.what()).find("point 1") != std::string::npos);
  }
}

TEST_CASE("Grid::cover respects the node cap by growing the spacing") {
  auto X = random_points(50, 2, 0, 10, 41);
  Grid g = Grid::cover(X, 0.01, 3, 40);
  CHECK(g.dims.maxCoeff() <= 40);
  for (int i = 0; i < X.rows(); ++i) CHECK(g.interior(X.row(i)));
  CHECK_THROWS_AS(Grid::cover(X, -1.0), std::invalid_argument);
}
