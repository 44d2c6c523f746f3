#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>

#include "gradkrig/kernels.hpp"

namespace testutil {

inline Eigen::MatrixXd random_points(int n, int d, double lo, double hi,
                                     unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = dist(rng);
  return X;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

// Random symmetric PSD matrix A = G G^T / n + jitter I.
inline Eigen::MatrixXd random_spd(Eigen::Index n, unsigned seed, double jitter = 1e-6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = dist(rng);
  Eigen::MatrixXd A = G * G.transpose() / double(n);
  A.diagonal().array() += jitter;
  return A;
}

// Central finite differences of k(x, x') in the second argument.
inline Eigen::VectorXd fd_grad(const gradkrig::KernelSpec& kernel,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                               double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    Eigen::VectorXd hi = xp, lo = xp;
    hi(p) += h;
    lo(p) -= h;
    g(p) = (gradkrig::eval(kernel, x, hi) - gradkrig::eval(kernel, x, lo)) / (2 * h);
  }
  return g;
}

// Central finite differences for the mixed block d^2 k / dx_p dx'_q.
inline Eigen::MatrixXd fd_hess(const gradkrig::KernelSpec& kernel,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                               double h) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd H(d, d);
  for (Eigen::Index p = 0; p < d; ++p) {
    for (Eigen::Index q = 0; q < d; ++q) {
      Eigen::VectorXd xpp = x, xpm = x;
      xpp(p) += h;
      xpm(p) -= h;
      Eigen::VectorXd yqp = xp, yqm = xp;
      yqp(q) += h;
      yqm(q) -= h;
      H(p, q) = (gradkrig::eval(kernel, xpp, yqp) - gradkrig::eval(kernel, xpp, yqm) -
                 gradkrig::eval(kernel, xpm, yqp) + gradkrig::eval(kernel, xpm, yqm)) /
                (4 * h * h);
    }
  }
  return H;
}

// Central finite difference of a scalar function of one scalar parameter.
inline double fd_scalar(const std::function<double(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2 * h);
}

}  // namespace testutil
