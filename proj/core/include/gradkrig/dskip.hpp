#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "gradkrig/dski.hpp"
#include "gradkrig/interpolation.hpp"
#include "gradkrig/kernels.hpp"
#include "gradkrig/linalg.hpp"
#include "gradkrig/linear_operator.hpp"

namespace gradkrig {

/// One direction's factor of the Hadamard-product representation of the
/// derivative kernel for separable kernels: logical size N = n(d+1), with
/// block pattern in derivative-type-major ordering where row/column group
/// j+1 uses the differentiated interpolation dW_j and every other group the
/// plain W_j, all wrapped around the one-dimensional grid kernel K_j.
class OneDimFactor final : public LinearOperator {
 public:
  OneDimFactor(KernelSpec kernel_1d, Grid grid_1d,
               const Eigen::Ref<const Eigen::VectorXd>& coords, int direction,
               int total_dims, bool dlogell = false);

  Eigen::Index size() const override { return n_ * (d_ + 1); }
  void mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
           Eigen::Ref<Eigen::VectorXd> out) const override;
  bool has_diagonal() const override { return true; }
  Eigen::VectorXd diagonal() const override;
  bool has_rows() const override { return true; }
  Eigen::VectorXd row(Eigen::Index i) const override;

  int direction() const { return direction_; }
  const Grid& grid() const { return grid_; }

 private:
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& group_matrix(int g) const {
    return (direction_ >= 0 && g == direction_ + 1) ? interp_.dW[0] : interp_.W;
  }

  Eigen::Index n_;
  int d_;
  int direction_;
  Grid grid_;
  SparseInterpolation interp_;
  GridKernelOperator kuu_;
  Eigen::VectorXd offset_table_;  // 1-D kernel values at stencil-pair offsets
};

/// Factor for direction j of the separable kernel (SE only); the kernel's
/// output scale is split evenly across dimensions. Throws
/// std::invalid_argument for non-separable kernels.
OneDimFactor build_factor(const KernelSpec& kernel,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, int direction,
                          double grid_ratio = 0.1, int max_grid_nodes = 512,
                          bool dlogell = false);

/// MVM with the Hadamard product of low-rank factors,
///   (Q_1 T_1 Q_1^T) o (Q_2 T_2 Q_2^T) o ... v,
/// without densification, via (A o B) v = sum_k (QT)_k o B((Q)_k o v).
/// Cost grows with the product of the ranks; lists longer than two are for
/// tests and merge steps.
Eigen::VectorXd hadamard_mvm(const std::vector<LanczosFactor>& factors,
                             const Eigen::Ref<const Eigen::VectorXd>& v);

/// diag(o_j F_j) = o_j diag(F_j); entrywise products of per-factor rows.
Eigen::VectorXd hadamard_diagonal(const std::vector<LanczosFactor>& factors);
Eigen::VectorXd hadamard_row(const std::vector<LanczosFactor>& factors, Eigen::Index i);

enum class RankPolicy { Recompress, Error };

struct DskipConfig {
  Eigen::Index rank = 100;
  double grid_ratio = 0.1;  // 1-D grid spacing as a fraction of ell
  int max_grid_nodes = 512;
  std::uint64_t seed = 0;
  RankPolicy rank_policy = RankPolicy::Recompress;
  /// Also build the log-lengthscale derivative representation (needed for
  /// hyperparameter gradients).
  bool track_dlogell = false;
  /// false builds the plain value-only SKIP operator of size n.
  bool with_gradients = true;
};

/// The D-SKIP operator: Hadamard product of per-dimension factors, each
/// compressed by Lanczos to the configured rank, merged pairwise in a
/// balanced tree and re-compressed after each merge until at most two
/// factors remain; plus diagonal noise outside the product structure.
class DskipOperator final : public LinearOperator {
 public:
  DskipOperator(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& X,
                NoiseLevels noise, const DskipConfig& config = DskipConfig{});

  Eigen::Index size() const override { return n_ * (groups_ + 1); }
  void mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
           Eigen::Ref<Eigen::VectorXd> out) const override;
  bool has_diagonal() const override { return true; }
  Eigen::VectorXd diagonal() const override;
  bool has_rows() const override { return true; }
  Eigen::VectorXd row(Eigen::Index i) const override;

  Eigen::Index points() const { return n_; }
  int input_dim() const { return d_; }
  const NoiseLevels& noise() const { return noise_; }
  Eigen::VectorXd noise_diagonal() const;
  const std::vector<LanczosFactor>& factors() const { return factors_; }

  /// MVM with d(kernel part)/d log(ell); requires track_dlogell.
  Eigen::VectorXd dlogell_apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;

 private:
  Eigen::Index n_;
  int d_;
  int groups_;
  NoiseLevels noise_;
  std::vector<LanczosFactor> factors_;      // at most two after merging
  std::vector<LanczosFactor> dlog_factors_; // same tree, product-rule tracked
  bool track_dlogell_ = false;
};

}  // namespace gradkrig
