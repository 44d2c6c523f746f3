#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gradkrig {

enum class KernelFamily { SquaredExponential, Spline };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Constants of the polyharmonic spline kernel
///   d odd:  k(x,y) = s^2 (rho^3 + a rho^2 + b)
///   d even: k(x,y) = s^2 (rho^2 log rho + a rho^2 + b),   rho = |x-y| / ell.
/// a and b are calibrated per domain so the kernel matrix is positive
/// semidefinite on the points of interest; see for_domain().
struct SplineConstants {
  double a = -1.5;
  double b = 1.0;
  bool even = false;  // parity of the input dimension

  /// Calibrates (a, b) for points whose scaled pairwise distances do not
  /// exceed `scaled_diameter` (box diagonal divided by the lengthscale).
  /// a = -1.5 * scaled_diameter; b is grown until a canonical lattice in a
  /// box of that diameter passes an eigenvalue check, then doubled.
  static SplineConstants for_domain(double scaled_diameter, int dim);
};

/// Stationary covariance kernel: family plus hyperparameters.
class KernelSpec {
 public:
  KernelSpec(KernelFamily family, double lengthscale, double outputscale,
             SplineConstants spline = SplineConstants{});

  KernelFamily family() const { return family_; }
  double lengthscale() const { return lengthscale_; }
  double outputscale() const { return outputscale_; }
  const SplineConstants& spline() const { return spline_; }

  /// True for kernels that factor into one-dimensional kernels (SE only).
  bool separable() const { return family_ == KernelFamily::SquaredExponential; }

  KernelSpec with_hyperparameters(double lengthscale, double outputscale) const;

 private:
  KernelFamily family_;
  double lengthscale_;
  double outputscale_;
  SplineConstants spline_;
};

/// k(x, x'). Throws std::invalid_argument on dimension mismatch.
double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& xp);

/// Partial derivatives with respect to the second argument, dk/dx'_p.
/// For SE this is ((x_p - x'_p) / ell^2) k(x, x'). Singular spline terms at
/// x = x' are defined by their analytic limits.
Eigen::VectorXd eval_grad(const KernelSpec& kernel,
                          const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& xp);

/// Mixed second derivatives, entry (p, q) = d^2 k / dx_p dx'_q.
Eigen::MatrixXd eval_hess_block(const KernelSpec& kernel,
                                const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& xp);

/// Derivatives of the above with respect to log(ell), used by the marginal
/// likelihood gradient.
double eval_dlogell(const KernelSpec& kernel,
                    const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& xp);
Eigen::VectorXd eval_grad_dlogell(const KernelSpec& kernel,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& xp);
Eigen::MatrixXd eval_hess_dlogell(const KernelSpec& kernel,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& xp);

struct AssemblyOptions {
  bool with_derivatives = true;
  /// 0 disables scaling; a positive value scales derivative rows and columns
  /// symmetrically (rows of partials by c, second-derivative blocks by c^2).
  double derivative_scale = 0.0;
  /// Refuse dense assembly above this many matrix entries.
  Eigen::Index size_cap = 50'000'000;
  /// Assemble dK/dlog(ell) instead of K.
  bool dlogell = false;
};

/// Dense derivative kernel matrix of size n(d+1) x n'(d+1) in
/// derivative-type-major block layout: [values; d_1; ...; d_d].
/// Row blocks differentiate the first argument, column blocks the second.
/// With with_derivatives = false only the n x n' value block is returned.
Eigen::MatrixXd assemble_dense(const KernelSpec& kernel,
                               const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::MatrixXd>& Xp,
                               const AssemblyOptions& options = AssemblyOptions{});

Eigen::MatrixXd assemble_dense(const KernelSpec& kernel,
                               const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::MatrixXd>& Xp,
                               bool with_derivatives);

/// Permutation mapping type-major output indices to point-major ones.
/// perm[i*(d+1) + t] = t*n + i, so if A is assembled type-major then
/// A(perm, perm) groups [f_i; d_1 f_i; ...; d_d f_i] per point, making the
/// value-only matrix the leading principal block under type-major ordering
/// literally testable against the point-major view.
std::vector<Eigen::Index> point_major_permutation(Eigen::Index n, int d);

}  // namespace gradkrig
