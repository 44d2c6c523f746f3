#pragma once

#include <Eigen/Dense>

#include "gradkrig/kernels.hpp"

namespace gradkrig {

/// Eigendecomposition of the gradient covariance C = (1/N) sum_i g_i g_i^T.
struct ActiveSubspace {
  Eigen::VectorXd eigenvalues;  // all D, descending, nonnegative
  Eigen::MatrixXd projection;   // D x d orthonormal columns (d <= D)

  int ambient_dim() const { return static_cast<int>(projection.rows()); }
  int subspace_dim() const { return static_cast<int>(projection.cols()); }

  /// Restriction to the leading d directions.
  ActiveSubspace leading(int d) const;
};

/// Full-spectrum estimate from Monte Carlo gradient samples (rows of
/// `gradients`). Throws on non-finite input.
ActiveSubspace estimate_active_subspace(const Eigen::Ref<const Eigen::MatrixXd>& gradients);

/// Smallest d whose cumulative eigenvalue mass reaches `mass` (default 99%).
int select_subspace_dimension(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                              double mass = 0.99);

/// The reduced-kernel view k'(x, x') = k(P^T x, P^T x'): the GP operates on
/// projected inputs u = P^T x and projected gradients (chain rule).
struct ReducedSpace {
  Eigen::MatrixXd P;  // D x d, orthonormal columns

  Eigen::MatrixXd project_points(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    return X * P;
  }
  Eigen::MatrixXd project_gradients(const Eigen::Ref<const Eigen::MatrixXd>& G) const {
    return G * P;
  }
  Eigen::VectorXd lift(const Eigen::Ref<const Eigen::VectorXd>& u) const { return P * u; }
};

/// Validates that P has orthonormal columns and wraps it.
ReducedSpace reduce_kernel(const Eigen::Ref<const Eigen::MatrixXd>& P);

/// || P1 P1^T - P2 P2^T ||_2, the usual distance between column spaces.
double subspace_distance(const Eigen::Ref<const Eigen::MatrixXd>& P1,
                         const Eigen::Ref<const Eigen::MatrixXd>& P2);

}  // namespace gradkrig
