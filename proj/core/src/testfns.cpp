#include "gradkrig/testfns.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gradkrig/rng.hpp"

namespace gradkrig {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd box(int dim, double lo, double hi) {
  Eigen::MatrixXd b(dim, 2);
  b.col(0).setConstant(lo);
  b.col(1).setConstant(hi);
  return b;
}

}  // namespace

bool TestFunction::in_domain(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
  if (x.size() != dim) return false;
  for (int j = 0; j < dim; ++j)
    if (x(j) < domain(j, 0) - tol || x(j) > domain(j, 1) + tol) return false;
  return true;
}

std::pair<double, Eigen::VectorXd> evaluate(const TestFunction& fn,
                                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != fn.dim)
    throw std::domain_error(fn.name + ": point has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(fn.dim));
  if (!fn.in_domain(x))
    throw std::domain_error(fn.name + ": point outside the standard domain");
  return {fn.value(x), fn.gradient(x)};
}

TestFunction branin() {
  TestFunction f;
  f.name = "branin";
  f.dim = 2;
  f.domain.resize(2, 2);
  f.domain << -5.0, 10.0, 0.0, 15.0;
  const double a = 1.0, b = 5.1 / (4.0 * kPi * kPi), c = 5.0 / kPi, r = 6.0, s = 10.0,
               t = 1.0 / (8.0 * kPi);
  f.value = [=](const Eigen::VectorXd& x) {
    const double inner = x(1) - b * x(0) * x(0) + c * x(0) - r;
    return a * inner * inner + s * (1.0 - t) * std::cos(x(0)) + s;
  };
  f.gradient = [=](const Eigen::VectorXd& x) {
    const double inner = x(1) - b * x(0) * x(0) + c * x(0) - r;
    Eigen::VectorXd g(2);
    g(0) = 2.0 * a * inner * (-2.0 * b * x(0) + c) - s * (1.0 - t) * std::sin(x(0));
    g(1) = 2.0 * a * inner;
    return g;
  };
  f.min_value = 0.397887;
  Eigen::VectorXd loc(2);
  loc << kPi, 2.275;
  f.min_location = loc;
  return f;
}

TestFunction franke() {
  TestFunction f;
  f.name = "franke";
  f.dim = 2;
  f.domain = box(2, 0.0, 1.0);
  f.value = [](const Eigen::VectorXd& p) {
    const double x = p(0), y = p(1);
    return 0.75 * std::exp(-(std::pow(9 * x - 2, 2) + std::pow(9 * y - 2, 2)) / 4.0) +
           0.75 * std::exp(-std::pow(9 * x + 1, 2) / 49.0 - (9 * y + 1) / 10.0) +
           0.5 * std::exp(-(std::pow(9 * x - 7, 2) + std::pow(9 * y - 3, 2)) / 4.0) -
           0.2 * std::exp(-std::pow(9 * x - 4, 2) - std::pow(9 * y - 7, 2));
  };
  f.gradient = [](const Eigen::VectorXd& p) {
    const double x = p(0), y = p(1);
    const double t1 = 0.75 * std::exp(-(std::pow(9 * x - 2, 2) + std::pow(9 * y - 2, 2)) / 4.0);
    const double t2 = 0.75 * std::exp(-std::pow(9 * x + 1, 2) / 49.0 - (9 * y + 1) / 10.0);
    const double t3 = 0.5 * std::exp(-(std::pow(9 * x - 7, 2) + std::pow(9 * y - 3, 2)) / 4.0);
    const double t4 = -0.2 * std::exp(-std::pow(9 * x - 4, 2) - std::pow(9 * y - 7, 2));
    Eigen::VectorXd g(2);
    g(0) = t1 * (-9.0 * (9 * x - 2) / 2.0) + t2 * (-18.0 * (9 * x + 1) / 49.0) +
           t3 * (-9.0 * (9 * x - 7) / 2.0) + t4 * (-18.0 * (9 * x - 4));
    g(1) = t1 * (-9.0 * (9 * y - 2) / 2.0) + t2 * (-9.0 / 10.0) +
           t3 * (-9.0 * (9 * y - 3) / 2.0) + t4 * (-18.0 * (9 * y - 7));
    return g;
  };
  return f;
}

TestFunction sine_norm(int dim) {
  TestFunction f;
  f.name = "sine-norm";
  f.dim = dim;
  f.domain = box(dim, -2.0, 2.0);
  f.value = [](const Eigen::VectorXd& x) { return std::sin(x.squaredNorm()); };
  f.gradient = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(2.0 * std::cos(x.squaredNorm()) * x);
  };
  return f;
}

TestFunction sixhump() {
  TestFunction f;
  f.name = "sixhump";
  f.dim = 2;
  f.domain.resize(2, 2);
  f.domain << -3.0, 3.0, -2.0, 2.0;
  f.value = [](const Eigen::VectorXd& p) {
    const double x = p(0), y = p(1);
    return (4.0 - 2.1 * x * x + std::pow(x, 4) / 3.0) * x * x + x * y +
           (-4.0 + 4.0 * y * y) * y * y;
  };
  f.gradient = [](const Eigen::VectorXd& p) {
    const double x = p(0), y = p(1);
    Eigen::VectorXd g(2);
    g(0) = 8.0 * x - 8.4 * std::pow(x, 3) + 2.0 * std::pow(x, 5) + y;
    g(1) = x - 8.0 * y + 16.0 * std::pow(y, 3);
    return g;
  };
  f.min_value = -1.031628;
  Eigen::VectorXd loc(2);
  loc << 0.0898, -0.7126;
  f.min_location = loc;
  return f;
}

TestFunction styblinski_tang(int dim) {
  TestFunction f;
  f.name = "stybtang";
  f.dim = dim;
  f.domain = box(dim, -5.0, 5.0);
  f.value = [](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      acc += std::pow(x(i), 4) - 16.0 * x(i) * x(i) + 5.0 * x(i);
    return 0.5 * acc;
  };
  f.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      g(i) = 0.5 * (4.0 * std::pow(x(i), 3) - 32.0 * x(i) + 5.0);
    return g;
  };
  f.min_value = -39.16617 * dim;
  f.min_location = Eigen::VectorXd::Constant(dim, -2.903534);
  return f;
}

TestFunction hartmann3() {
  TestFunction f;
  f.name = "hartmann3";
  f.dim = 3;
  f.domain = box(3, 0.0, 1.0);
  static const Eigen::Vector4d alpha(1.0, 1.2, 3.0, 3.2);
  static const Eigen::Matrix<double, 4, 3> A = (Eigen::Matrix<double, 4, 3>() <<
      3.0, 10.0, 30.0,
      0.1, 10.0, 35.0,
      3.0, 10.0, 30.0,
      0.1, 10.0, 35.0).finished();
  static const Eigen::Matrix<double, 4, 3> P = 1e-4 * (Eigen::Matrix<double, 4, 3>() <<
      3689, 1170, 2673,
      4699, 4387, 7470,
      1091, 8732, 5547,
      381, 5743, 8828).finished();
  f.value = [](const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
      double e = 0.0;
      for (int j = 0; j < 3; ++j) e += A(i, j) * std::pow(x(j) - P(i, j), 2);
      acc -= alpha(i) * std::exp(-e);
    }
    return acc;
  };
  f.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < 4; ++i) {
      double e = 0.0;
      for (int j = 0; j < 3; ++j) e += A(i, j) * std::pow(x(j) - P(i, j), 2);
      const double w = alpha(i) * std::exp(-e);
      for (int j = 0; j < 3; ++j) g(j) += w * 2.0 * A(i, j) * (x(j) - P(i, j));
    }
    return g;
  };
  f.min_value = -3.86278;
  Eigen::VectorXd loc(3);
  loc << 0.114614, 0.555649, 0.852547;
  f.min_location = loc;
  return f;
}

TestFunction ackley(int dim) {
  TestFunction f;
  f.name = "ackley";
  f.dim = dim;
  f.domain = box(dim, -32.768, 32.768);
  const double a = 20.0, b = 0.2, c = 2.0 * kPi;
  f.value = [=](const Eigen::VectorXd& x) {
    const double d = double(x.size());
    const double s2 = x.squaredNorm() / d;
    const double sc = (c * x.array()).cos().sum();
    return -a * std::exp(-b * std::sqrt(s2)) - std::exp(sc / d) + a + std::exp(1.0);
  };
  f.gradient = [=](const Eigen::VectorXd& x) {
    const double d = double(x.size());
    const double rms = std::sqrt(x.squaredNorm() / d);
    Eigen::VectorXd g(x.size());
    if (rms == 0.0) return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()));
    const double sc = (c * x.array()).cos().sum();
    const double t1 = a * b * std::exp(-b * rms) / (d * rms);
    const double t2 = std::exp(sc / d) * c / d;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      g(i) = t1 * x(i) + t2 * std::sin(c * x(i));
    return g;
  };
  f.min_value = 0.0;
  f.min_location = Eigen::VectorXd::Zero(dim);
  return f;
}

TestFunction rastrigin(int dim) {
  TestFunction f;
  f.name = "rastrigin";
  f.dim = dim;
  f.domain = box(dim, -5.12, 5.12);
  f.value = [](const Eigen::VectorXd& x) {
    double acc = 10.0 * double(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      acc += x(i) * x(i) - 10.0 * std::cos(2.0 * kPi * x(i));
    return acc;
  };
  f.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      g(i) = 2.0 * x(i) + 20.0 * kPi * std::sin(2.0 * kPi * x(i));
    return g;
  };
  f.min_value = 0.0;
  f.min_location = Eigen::VectorXd::Zero(dim);
  return f;
}

// Welch et al. (1992) 20-dimensional screening function, as standardized in
// the common simulation-experiment test suites:
//   f(x) = 5 x12 / (1 + x1) + 5 (x4 - x20)^2 + x5 + 40 x19^3 - 5 x19
//        + 0.05 x2 + 0.08 x3 - 0.03 x6 + 0.03 x7 - 0.09 x9 - 0.01 x10
//        - 0.07 x11 + 0.25 x13^2 - 0.04 x14 + 0.06 x15 - 0.01 x17 - 0.03 x18,
// x in [-0.5, 0.5]^20 (x8 and x16 are inert).
TestFunction welch20() {
  TestFunction f;
  f.name = "welch";
  f.dim = 20;
  f.domain = box(20, -0.5, 0.5);
  f.value = [](const Eigen::VectorXd& x) {
    return 5.0 * x(11) / (1.0 + x(0)) + 5.0 * std::pow(x(3) - x(19), 2) + x(4) +
           40.0 * std::pow(x(18), 3) - 5.0 * x(18) + 0.05 * x(1) + 0.08 * x(2) -
           0.03 * x(5) + 0.03 * x(6) - 0.09 * x(8) - 0.01 * x(9) - 0.07 * x(10) +
           0.25 * x(12) * x(12) - 0.04 * x(13) + 0.06 * x(14) - 0.01 * x(16) -
           0.03 * x(17);
  };
  f.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(20);
    g(0) = -5.0 * x(11) / std::pow(1.0 + x(0), 2);
    g(1) = 0.05;
    g(2) = 0.08;
    g(3) = 10.0 * (x(3) - x(19));
    g(4) = 1.0;
    g(5) = -0.03;
    g(6) = 0.03;
    g(8) = -0.09;
    g(9) = -0.01;
    g(10) = -0.07;
    g(11) = 5.0 / (1.0 + x(0));
    g(12) = 0.5 * x(12);
    g(13) = -0.04;
    g(14) = 0.06;
    g(16) = -0.01;
    g(17) = -0.03;
    g(18) = 120.0 * x(18) * x(18) - 5.0;
    g(19) = -10.0 * (x(3) - x(19));
    return g;
  };
  return f;
}

TestFunction friedman5() {
  TestFunction f;
  f.name = "friedman";
  f.dim = 5;
  f.domain = box(5, 0.0, 1.0);
  f.value = [](const Eigen::VectorXd& x) {
    return 10.0 * std::sin(kPi * x(0) * x(1)) + 20.0 * std::pow(x(2) - 0.5, 2) +
           10.0 * x(3) + 5.0 * x(4);
  };
  f.gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(5);
    const double c = 10.0 * kPi * std::cos(kPi * x(0) * x(1));
    g(0) = c * x(1);
    g(1) = c * x(0);
    g(2) = 40.0 * (x(2) - 0.5);
    g(3) = 10.0;
    g(4) = 5.0;
    return g;
  };
  return f;
}

TestFunction test_function_by_name(const std::string& name, int dim) {
  if (name == "branin") return branin();
  if (name == "franke") return franke();
  if (name == "sine-norm" || name == "sinenorm") return sine_norm(dim > 0 ? dim : 2);
  if (name == "sixhump") return sixhump();
  if (name == "stybtang" || name == "styblinski-tang")
    return styblinski_tang(dim > 0 ? dim : 2);
  if (name == "hartmann3" || name == "hart3") return hartmann3();
  if (name == "ackley") return ackley(dim > 0 ? dim : 5);
  if (name == "rastrigin") return rastrigin(dim > 0 ? dim : 5);
  if (name == "welch") return welch20();
  if (name == "friedman") return friedman5();
  throw std::invalid_argument("unknown test function '" + name + "'");
}

Eigen::MatrixXd embedding_matrix(int D, int d, std::uint64_t seed) {
  if (D < d) throw std::invalid_argument("ambient dimension must be at least the intrinsic one");
  if (D == d) return Eigen::MatrixXd::Identity(D, d);
  Eigen::MatrixXd G(D, d);
  auto rng = seeded_rng(seed, 424242);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return qr.householderQ() * Eigen::MatrixXd::Identity(D, d);
}

TestFunction embed(const TestFunction& fn, int D, std::uint64_t seed, double ambient_lo,
                   double ambient_hi) {
  Eigen::MatrixXd Q = embedding_matrix(D, fn.dim, seed);
  TestFunction out;
  out.name = fn.name + "-embedded";
  out.dim = D;
  out.domain = box(D, ambient_lo, ambient_hi);
  auto value = fn.value;
  auto gradient = fn.gradient;
  out.value = [Q, value](const Eigen::VectorXd& x) { return value(Q.transpose() * x); };
  out.gradient = [Q, gradient](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Q * gradient(Q.transpose() * x));
  };
  return out;
}

ObservationSet sample_dataset(const TestFunction& fn, Eigen::Index n,
                              SamplingScheme scheme, std::uint64_t seed,
                              double noise_value, double noise_gradient,
                              bool with_gradients) {
  ObservationSet data;
  data.X.resize(n, fn.dim);
  auto rng = seeded_rng(seed);
  if (scheme == SamplingScheme::Uniform) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < fn.dim; ++j)
        data.X(i, j) = fn.domain(j, 0) + (fn.domain(j, 1) - fn.domain(j, 0)) * unif(rng);
  } else {
    const auto per_axis =
        static_cast<Eigen::Index>(std::floor(std::pow(double(n), 1.0 / fn.dim)));
    Eigen::Index total = 1;
    for (int j = 0; j < fn.dim; ++j) total *= per_axis;
    data.X.resize(total, fn.dim);
    std::vector<Eigen::Index> idx(fn.dim, 0);
    for (Eigen::Index i = 0; i < total; ++i) {
      for (int j = 0; j < fn.dim; ++j) {
        const double t = per_axis == 1 ? 0.5 : double(idx[j]) / double(per_axis - 1);
        data.X(i, j) = fn.domain(j, 0) + (fn.domain(j, 1) - fn.domain(j, 0)) * t;
      }
      for (int j = fn.dim - 1; j >= 0; --j) {
        if (++idx[j] < per_axis) break;
        idx[j] = 0;
      }
    }
    n = total;
  }

  data.y.resize(n);
  if (with_gradients) data.dY.resize(n, fn.dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd x = data.X.row(i);
    data.y(i) = fn.value(x) + noise_value * gauss(rng);
    if (with_gradients) {
      Eigen::VectorXd g = fn.gradient(x);
      for (int j = 0; j < fn.dim; ++j) data.dY(i, j) = g(j) + noise_gradient * gauss(rng);
    }
  }
  data.noise_value = std::max(noise_value, 1e-3);
  data.noise_gradient = std::max(noise_gradient, 1e-3);
  data.validate();
  return data;
}

}  // namespace gradkrig
