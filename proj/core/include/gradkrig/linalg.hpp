#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "gradkrig/linear_operator.hpp"

namespace gradkrig {

struct CgOptions {
  double tol = 1e-4;  // relative residual
  int max_iterations = 1000;
};

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // relative residual per iteration
};

using PrecondApply = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// (Preconditioned) conjugate gradients for symmetric positive definite
/// operators. Non-convergence is reported through the flag, not thrown.
CgResult cg(const LinearOperator& A, const Eigen::Ref<const Eigen::VectorXd>& b,
            const CgOptions& options = CgOptions{}, const PrecondApply& precond = {});

struct PivotedCholeskyFactor {
  Eigen::MatrixXd L;  // N x k in original row ordering (the product Pi L)
  std::vector<Eigen::Index> pivots;
  double initial_trace = 0.0;
  double residual_trace = 0.0;
};

/// Greedy truncated pivoted Cholesky of a PSD operator given only its
/// diagonal and a row callback. Stops at max_rank or when the residual trace
/// falls below trace_tol * initial trace. Throws std::runtime_error if a
/// residual diagonal entry drops below -1e-10 times the initial largest one.
PivotedCholeskyFactor pivoted_cholesky(
    const Eigen::Ref<const Eigen::VectorXd>& diag,
    const std::function<Eigen::VectorXd(Eigen::Index)>& row_fn, Eigen::Index max_rank,
    double trace_tol = 0.0);

/// Application of M^{-1} for M = D + F F^T with positive diagonal D, via the
/// stable economy-QR route: with G = D^{-1/2} F and [G; I] = [Q1; Q2] R,
///   M^{-1} b = D^{-1/2} (c - Q1 (Q1^T c)),  c = D^{-1/2} b.
/// For scalar D = sigma^2 I this is sigma^{-2}(b - Q1 Q1^T b).
class Preconditioner {
 public:
  Preconditioner(const Eigen::Ref<const Eigen::MatrixXd>& F,
                 const Eigen::Ref<const Eigen::VectorXd>& noise_diag);
  Preconditioner(const Eigen::Ref<const Eigen::MatrixXd>& F, double sigma,
                 Eigen::Index size);

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& b) const;
  PrecondApply as_apply() const;

  Eigen::Index size() const { return inv_sqrt_noise_.size(); }
  Eigen::Index rank() const { return Q1_.cols(); }
  const Eigen::MatrixXd& q1() const { return Q1_; }
  const Eigen::VectorXd& inv_sqrt_noise() const { return inv_sqrt_noise_; }

  /// b^T M^{-1} b without forming intermediates twice; used by the pivoted
  /// Cholesky predictive variance estimate.
  double quadratic(const Eigen::Ref<const Eigen::VectorXd>& b) const;

 private:
  Eigen::VectorXd inv_sqrt_noise_;
  Eigen::MatrixXd Q1_;
};

struct SlqOptions {
  int probes = 10;
  int lanczos_steps = 50;
  std::uint64_t seed = 0;
  /// Ritz values below this floor are clamped to it (and counted).
  double eigen_floor = 1e-12;
};

struct SlqResult {
  double logdet = 0.0;
  int clamped = 0;  // number of Ritz values clamped at the floor
};

/// Stochastic Lanczos quadrature estimate of log|A| for SPD A: Hutchinson
/// average over Rademacher probes of the Lanczos-quadrature estimate of
/// z^T log(A) z.
SlqResult slq_logdet(const LinearOperator& A, const SlqOptions& options = SlqOptions{});

/// Hutchinson estimate of tr(A^{-1} B): E_z[z^T A^{-1} B z] with A solved by
/// (preconditioned) CG. Throws std::runtime_error if a CG solve fails.
double trace_estimate(const LinearOperator& A, const LinearOperator& B, int probes,
                      std::uint64_t seed, const CgOptions& cg_options = CgOptions{},
                      const PrecondApply& precond = {});

/// Lanczos low-rank factor Q T Q^T with orthonormal Q (full
/// reorthogonalization) and symmetric tridiagonal T.
struct LanczosFactor {
  Eigen::MatrixXd Q;       // N x r
  Eigen::VectorXd alpha;   // diagonal of T
  Eigen::VectorXd beta;    // subdiagonal of T (r-1 entries)
  bool breakdown = false;  // stopped early on a zero beta

  Eigen::Index rank() const { return Q.cols(); }
  Eigen::MatrixXd tridiagonal() const;
  /// Ritz values, descending.
  Eigen::VectorXd ritz_values() const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::MatrixXd dense() const;
};

/// r Lanczos steps from a seeded random start vector.
LanczosFactor lanczos_lowrank(const LinearOperator& op, Eigen::Index rank,
                              std::uint64_t seed);

}  // namespace gradkrig
