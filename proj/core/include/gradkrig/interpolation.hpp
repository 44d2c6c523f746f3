#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradkrig {

/// Regular grid of inducing points. Flattened indices are row-major with the
/// last dimension fastest (FFT layout).
struct Grid {
  Eigen::VectorXi dims;     // nodes per dimension, each >= 6
  Eigen::VectorXd origin;   // coordinate of node 0 per dimension
  Eigen::VectorXd spacing;  // cell width per dimension

  int dim() const { return static_cast<int>(dims.size()); }
  Eigen::Index size() const;
  double node(int axis, Eigen::Index index) const {
    return origin(axis) + spacing(axis) * static_cast<double>(index);
  }

  /// True when the quintic stencil around the point fits inside the grid
  /// (the point is at least 2 cells from every boundary).
  bool interior(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Smallest grid covering the bounding box of X expanded by `margin_cells`
  /// cells per side, with spacing at most `target_spacing` subject to
  /// `max_nodes` per dimension (spacing grows when the cap binds).
  static Grid cover(const Eigen::Ref<const Eigen::MatrixXd>& X, double target_spacing,
                    int margin_cells = 3, int max_nodes = 128);
};

class OutOfGridError : public std::runtime_error {
 public:
  explicit OutOfGridError(const std::string& what) : std::runtime_error(what) {}
};

enum class InterpolationOrder { Quintic, Cubic };

/// Weights of the 6-point quintic convolutional kernel at fractional offset
/// t in [0,1), for nodes at integer offsets {-2,...,3}, plus the analytic
/// derivative coefficients in units of inverse cell width (divide by h to get
/// d/dx). The kernel is C^2 and reproduces polynomials up to degree 4.
std::pair<std::array<double, 6>, std::array<double, 6>> quintic_weights(double t);

/// 4-point Keys cubic convolution weights (a = -1/2) for nodes {-1,...,2}.
std::pair<std::array<double, 4>, std::array<double, 4>> cubic_weights(double t);

/// Sparse interpolation from scattered points onto a grid: W (n x m) and one
/// derivative operator dW_j per input dimension (units 1/h_j).
struct SparseInterpolation {
  Eigen::SparseMatrix<double, Eigen::RowMajor> W;
  std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> dW;

  Eigen::Index points() const { return W.rows(); }
  Eigen::Index grid_size() const { return W.cols(); }
};

/// Tensor-product interpolation weights for all rows of X. Throws
/// OutOfGridError naming the first offending point if any stencil does not
/// fit inside the grid.
SparseInterpolation build_interpolation(const Grid& grid,
                                        const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        InterpolationOrder order = InterpolationOrder::Quintic);

/// Stencil of a single point: flattened node indices with value weights and
/// per-dimension derivative weights. Row i of build_interpolation(...).W
/// equals scatter(indices, value_weights).
struct PointStencil {
  std::vector<Eigen::Index> indices;
  Eigen::VectorXd value;
  Eigen::MatrixXd derivative;  // one column per input dimension
};

PointStencil point_stencil(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x,
                           InterpolationOrder order = InterpolationOrder::Quintic);

}  // namespace gradkrig
