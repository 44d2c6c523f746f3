#include "gradkrig/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace gradkrig {

namespace {

void check_same_dim(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& xp) {
  if (x.size() != xp.size()) {
    throw std::invalid_argument("kernel arguments have dimensions " +
                                std::to_string(x.size()) + " and " +
                                std::to_string(xp.size()));
  }
}

// Scalar kernel profiles as functions of the squared distance r2 = |x-y|^2.
// grad_coeff is defined so that dk/dx'_q = grad_coeff * (x_q - x'_q).

struct SeProfile {
  double s2, ell2;
  double value(double r2) const { return s2 * std::exp(-0.5 * r2 / ell2); }
  double grad_coeff(double r2) const { return value(r2) / ell2; }
  // hess entry (p,q) = (d2k/dx_p dx'_q) = (delta_pq*ell2 - u_p u_q)/ell^4 * k
};

}  // namespace

std::string to_string(KernelFamily family) {
  return family == KernelFamily::SquaredExponential ? "se" : "spline";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "se" || name == "rbf" || name == "squared_exponential")
    return KernelFamily::SquaredExponential;
  if (name == "spline") return KernelFamily::Spline;
  throw std::invalid_argument("unknown kernel family '" + name + "'");
}

SplineConstants SplineConstants::for_domain(double scaled_diameter, int dim) {
  if (scaled_diameter <= 0.0)
    throw std::invalid_argument("spline domain diameter must be positive");
  SplineConstants cs;
  cs.even = (dim % 2 == 0);
  cs.a = -1.5 * scaled_diameter;
  const double rho3 = scaled_diameter * scaled_diameter * scaled_diameter;

  // Canonical lattice: regular grid with 5 points per axis in up to 3 axes,
  // scaled so the box diagonal equals scaled_diameter. Beyond 3 dimensions the
  // check runs on the 3-dimensional section; distances there span the same
  // range, which is what drives definiteness of the radial part.
  const int axes = std::min(dim, 3);
  const int per_axis = 5;
  int npts = 1;
  for (int a = 0; a < axes; ++a) npts *= per_axis;
  const double side = scaled_diameter / std::sqrt(static_cast<double>(axes));
  Eigen::MatrixXd P(npts, axes);
  for (int i = 0; i < npts; ++i) {
    int rem = i;
    for (int a = 0; a < axes; ++a) {
      P(i, a) = side * static_cast<double>(rem % per_axis) / (per_axis - 1);
      rem /= per_axis;
    }
  }

  Eigen::MatrixXd D(npts, npts);
  for (int i = 0; i < npts; ++i)
    for (int j = 0; j < npts; ++j) D(i, j) = (P.row(i) - P.row(j)).norm();

  for (double mult = 0.25; mult <= 1024.0; mult *= 2.0) {
    const double b = mult * rho3;
    Eigen::MatrixXd K(npts, npts);
    for (int i = 0; i < npts; ++i) {
      for (int j = 0; j < npts; ++j) {
        const double rho = D(i, j);
        const double radial = cs.even ? (rho > 0 ? rho * rho * std::log(rho) : 0.0)
                                      : rho * rho * rho;
        K(i, j) = radial + cs.a * rho * rho + b;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff()) {
      cs.b = 2.0 * b;  // margin for point sets rougher than the lattice
      return cs;
    }
  }
  throw std::runtime_error("spline constant calibration failed to reach PSD");
}

KernelSpec::KernelSpec(KernelFamily family, double lengthscale, double outputscale,
                       SplineConstants spline)
    : family_(family), lengthscale_(lengthscale), outputscale_(outputscale),
      spline_(spline) {
  if (!(lengthscale > 0.0)) throw std::invalid_argument("lengthscale must be > 0");
  if (!(outputscale > 0.0)) throw std::invalid_argument("outputscale must be > 0");
}

KernelSpec KernelSpec::with_hyperparameters(double lengthscale, double outputscale) const {
  return KernelSpec(family_, lengthscale, outputscale, spline_);
}

double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& xp) {
  check_same_dim(x, xp);
  const double s2 = kernel.outputscale() * kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double r2 = (x - xp).squaredNorm();
  if (kernel.family() == KernelFamily::SquaredExponential) {
    return SeProfile{s2, ell * ell}.value(r2);
  }
  const auto& cs = kernel.spline();
  const double rho = std::sqrt(r2) / ell;
  const double radial =
      cs.even ? (rho > 0 ? rho * rho * std::log(rho) : 0.0) : rho * rho * rho;
  return s2 * (radial + cs.a * rho * rho + cs.b);
}

Eigen::VectorXd eval_grad(const KernelSpec& kernel,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& xp) {
  check_same_dim(x, xp);
  const Eigen::VectorXd u = x - xp;
  const double s2 = kernel.outputscale() * kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double r = u.norm();
  if (kernel.family() == KernelFamily::SquaredExponential) {
    return (SeProfile{s2, ell * ell}.grad_coeff(r * r)) * u;
  }
  const auto& cs = kernel.spline();
  if (r == 0.0) return Eigen::VectorXd::Zero(x.size());  // analytic limit
  if (!cs.even) return -s2 * (3.0 * r / std::pow(ell, 3) + 2.0 * cs.a / (ell * ell)) * u;
  const double logrho = std::log(r / ell);
  return -s2 * (2.0 * logrho + 1.0 + 2.0 * cs.a) / (ell * ell) * u;
}

Eigen::MatrixXd eval_hess_block(const KernelSpec& kernel,
                                const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& xp) {
  check_same_dim(x, xp);
  const Eigen::Index d = x.size();
  const Eigen::VectorXd u = x - xp;
  const double s2 = kernel.outputscale() * kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double ell2 = ell * ell;
  const double r = u.norm();
  Eigen::MatrixXd H(d, d);
  if (kernel.family() == KernelFamily::SquaredExponential) {
    const double k = SeProfile{s2, ell2}.value(r * r);
    H = (k / (ell2 * ell2)) * (ell2 * Eigen::MatrixXd::Identity(d, d) - u * u.transpose());
    return H;
  }
  const auto& cs = kernel.spline();
  if (r == 0.0) {
    // Radial terms vanish in the limit (odd) or are dropped by convention
    // (even, log singularity); the a rho^2 term survives.
    return (-2.0 * cs.a * s2 / ell2) * Eigen::MatrixXd::Identity(d, d);
  }
  if (!cs.even) {
    const double c1 = 3.0 * r / (ell2 * ell) + 2.0 * cs.a / ell2;
    H = -s2 * (c1 * Eigen::MatrixXd::Identity(d, d) +
               (3.0 / (r * ell2 * ell)) * u * u.transpose());
    return H;
  }
  const double logrho = std::log(r / ell);
  H = (-s2 / ell2) * ((2.0 * logrho + 1.0 + 2.0 * cs.a) * Eigen::MatrixXd::Identity(d, d) +
                      (2.0 / (r * r)) * u * u.transpose());
  return H;
}

double eval_dlogell(const KernelSpec& kernel,
                    const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& xp) {
  check_same_dim(x, xp);
  const double s2 = kernel.outputscale() * kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double r2 = (x - xp).squaredNorm();
  const double rho2 = r2 / (ell * ell);
  if (kernel.family() == KernelFamily::SquaredExponential) {
    return SeProfile{s2, ell * ell}.value(r2) * rho2;
  }
  const auto& cs = kernel.spline();
  if (r2 == 0.0) return 0.0;
  const double rho = std::sqrt(rho2);
  if (!cs.even) return s2 * (-3.0 * rho * rho2 - 2.0 * cs.a * rho2);
  return s2 * (-2.0 * rho2 * std::log(rho) - rho2 - 2.0 * cs.a * rho2);
}

Eigen::VectorXd eval_grad_dlogell(const KernelSpec& kernel,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& xp) {
  check_same_dim(x, xp);
  const Eigen::VectorXd u = x - xp;
  const double s2 = kernel.outputscale() * kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double ell2 = ell * ell;
  const double r = u.norm();
  if (kernel.family() == KernelFamily::SquaredExponential) {
    const double rho2 = r * r / ell2;
    return (SeProfile{s2, ell2}.grad_coeff(r * r) * (rho2 - 2.0)) * u;
  }
  const auto& cs = kernel.spline();
  if (r == 0.0) return Eigen::VectorXd::Zero(x.size());
  if (!cs.even) return s2 * (9.0 * r / (ell2 * ell) + 4.0 * cs.a / ell2) * u;
  const double logrho = std::log(r / ell);
  return (2.0 * s2 * (2.0 * logrho + 2.0 + 2.0 * cs.a) / ell2) * u;
}

Eigen::MatrixXd eval_hess_dlogell(const KernelSpec& kernel,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& xp) {
  check_same_dim(x, xp);
  const Eigen::Index d = x.size();
  const Eigen::VectorXd u = x - xp;
  const double s2 = kernel.outputscale() * kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double ell2 = ell * ell;
  const double r = u.norm();
  if (kernel.family() == KernelFamily::SquaredExponential) {
    const double k = SeProfile{s2, ell2}.value(r * r);
    const double rho2 = r * r / ell2;
    return (k / (ell2 * ell2)) *
           ((rho2 - 4.0) * (ell2 * Eigen::MatrixXd::Identity(d, d) - u * u.transpose()) +
            2.0 * ell2 * Eigen::MatrixXd::Identity(d, d));
  }
  const auto& cs = kernel.spline();
  if (r == 0.0) {
    return (4.0 * cs.a * s2 / ell2) * Eigen::MatrixXd::Identity(d, d);
  }
  if (!cs.even) {
    return s2 * ((9.0 * r / (ell2 * ell) + 4.0 * cs.a / ell2) *
                     Eigen::MatrixXd::Identity(d, d) +
                 (9.0 / (r * ell2 * ell)) * u * u.transpose());
  }
  const double logrho = std::log(r / ell);
  return (2.0 * s2 / ell2) *
         ((2.0 * logrho + 2.0 + 2.0 * cs.a) * Eigen::MatrixXd::Identity(d, d) +
          (2.0 / (r * r)) * u * u.transpose());
}

Eigen::MatrixXd assemble_dense(const KernelSpec& kernel,
                               const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::MatrixXd>& Xp,
                               const AssemblyOptions& options) {
  if (X.cols() != Xp.cols())
    throw std::invalid_argument("point sets have mismatched dimensions");
  const Eigen::Index n = X.rows(), np = Xp.rows();
  const int d = static_cast<int>(X.cols());
  const Eigen::Index rows = options.with_derivatives ? n * (d + 1) : n;
  const Eigen::Index cols = options.with_derivatives ? np * (d + 1) : np;
  if (rows * cols > options.size_cap) {
    throw std::length_error("dense assembly of " + std::to_string(rows) + " x " +
                            std::to_string(cols) + " exceeds the configured size cap");
  }

  Eigen::MatrixXd K(rows, cols);
  const bool dl = options.dlogell;

#pragma omp parallel for schedule(static) if (n * np > 4096)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.row(i);
    for (Eigen::Index j = 0; j < np; ++j) {
      const Eigen::VectorXd xj = Xp.row(j);
      K(i, j) = dl ? eval_dlogell(kernel, xi, xj) : eval(kernel, xi, xj);
      if (!options.with_derivatives) continue;
      const Eigen::VectorXd g =
          dl ? eval_grad_dlogell(kernel, xi, xj) : eval_grad(kernel, xi, xj);
      const Eigen::MatrixXd h =
          dl ? eval_hess_dlogell(kernel, xi, xj) : eval_hess_block(kernel, xi, xj);
      for (int p = 0; p < d; ++p) {
        K(i, (p + 1) * np + j) = g(p);        // d/dx'_p columns
        K((p + 1) * n + i, j) = -g(p);        // d/dx_p rows (stationary kernel)
        for (int q = 0; q < d; ++q) K((p + 1) * n + i, (q + 1) * np + j) = h(p, q);
      }
    }
  }

  if (options.with_derivatives && options.derivative_scale > 0.0) {
    const double c = options.derivative_scale;
    K.bottomRows(n * d) *= c;
    K.rightCols(np * d) *= c;
  }
  return K;
}

Eigen::MatrixXd assemble_dense(const KernelSpec& kernel,
                               const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::MatrixXd>& Xp,
                               bool with_derivatives) {
  AssemblyOptions options;
  options.with_derivatives = with_derivatives;
  return assemble_dense(kernel, X, Xp, options);
}

std::vector<Eigen::Index> point_major_permutation(Eigen::Index n, int d) {
  std::vector<Eigen::Index> perm(n * (d + 1));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int t = 0; t <= d; ++t) perm[i * (d + 1) + t] = t * n + i;
  return perm;
}

}  // namespace gradkrig
