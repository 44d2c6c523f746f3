#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>

#include "gradkrig/interpolation.hpp"
#include "gradkrig/kernels.hpp"
#include "gradkrig/linear_operator.hpp"

namespace gradkrig {

/// Stationary covariance slice: value as a function of the offset x - x'.
using StationaryProfile = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

StationaryProfile kernel_profile(const KernelSpec& kernel);
StationaryProfile kernel_dlogell_profile(const KernelSpec& kernel);

/// Fast multiplication by the kernel matrix K_UU on a regular grid. The
/// multilevel Toeplitz matrix is embedded into a multilevel circulant of size
/// 2(m_j - 1) per dimension with even-symmetric extension; MVMs cost
/// O(m log m) via real-input FFTs. The spectrum is precomputed once.
class GridKernelOperator {
 public:
  GridKernelOperator(Grid grid, const StationaryProfile& profile);
  ~GridKernelOperator();

  GridKernelOperator(GridKernelOperator&&) noexcept;
  GridKernelOperator& operator=(GridKernelOperator&&) noexcept;
  GridKernelOperator(const GridKernelOperator&) = delete;
  GridKernelOperator& operator=(const GridKernelOperator&) = delete;

  Eigen::Index size() const;
  const Grid& grid() const;

  void mvm(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  /// Smallest eigenvalue of the circulant embedding. Negative values are
  /// possible (the embedding need not be PSD); MVMs remain exact either way,
  /// so nothing is clamped — this is a diagnostic.
  double min_embedding_eigenvalue() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct NoiseLevels {
  double value = 0.0;     // sigma_1, added to value outputs
  double gradient = 0.0;  // sigma_2, added to gradient outputs
};

/// The D-SKI operator  [W; dW] K_UU [W; dW]^T + noise  of logical size
/// N = n(d+1), in derivative-type-major output ordering. Symmetric PSD by
/// construction. MVMs never materialize an N x N matrix.
class DskiOperator final : public LinearOperator {
 public:
  /// with_gradients = false gives the plain SKI operator W K_UU W^T + noise
  /// of size n (no derivative rows).
  DskiOperator(const KernelSpec& kernel, Grid grid,
               const Eigen::Ref<const Eigen::MatrixXd>& X, NoiseLevels noise,
               InterpolationOrder order = InterpolationOrder::Quintic,
               bool with_gradients = true);

  Eigen::Index size() const override { return n_ * (groups_ + 1); }
  void mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
           Eigen::Ref<Eigen::VectorXd> out) const override;

  bool has_diagonal() const override { return true; }
  Eigen::VectorXd diagonal() const override;
  bool has_rows() const override { return true; }
  Eigen::VectorXd row(Eigen::Index i) const override;

  Eigen::Index points() const { return n_; }
  int input_dim() const { return d_; }
  int derivative_groups() const { return groups_; }
  const Grid& grid() const { return grid_; }
  const SparseInterpolation& interpolation() const { return interp_; }
  const GridKernelOperator& grid_operator() const { return kuu_; }
  const NoiseLevels& noise() const { return noise_; }
  Eigen::VectorXd noise_diagonal() const;

  /// B^T v over the stacked interpolation [W; dW_1; ...; dW_d].
  Eigen::VectorXd stacked_transpose_apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// B u for a grid vector u.
  Eigen::VectorXd stacked_apply(const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  Eigen::Index n_;
  int d_;
  int groups_;  // d with gradients, 0 without
  Grid grid_;
  KernelSpec kernel_;
  NoiseLevels noise_;
  SparseInterpolation interp_;
  GridKernelOperator kuu_;
  Eigen::VectorXd kernel_offset_table_;  // local stencil-pair kernel values
  Eigen::VectorXi table_dims_;
};

}  // namespace gradkrig
