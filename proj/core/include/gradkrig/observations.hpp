#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace gradkrig {

/// Training data: inputs, values, optional per-dimension gradients (all or
/// none per set), and the two noise levels for value and gradient outputs.
struct ObservationSet {
  Eigen::MatrixXd X;   // n x d inputs
  Eigen::VectorXd y;   // n values
  Eigen::MatrixXd dY;  // n x d gradients, or empty
  double noise_value = 1e-2;
  double noise_gradient = 1e-2;

  Eigen::Index points() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }
  bool has_gradients() const { return dY.size() > 0; }

  /// Total output count N = n (1 + d) with gradients, n without.
  Eigen::Index outputs() const {
    return points() * (1 + (has_gradients() ? dim() : 0));
  }

  /// Targets in derivative-type-major order, [y - mean; d_1 y; ...; d_d y];
  /// the gradients' prior mean is zero.
  Eigen::VectorXd stacked_targets(double mean) const {
    Eigen::VectorXd t(outputs());
    t.head(points()) = y.array() - mean;
    if (has_gradients())
      for (int j = 0; j < dim(); ++j) t.segment(points() * (j + 1), points()) = dY.col(j);
    return t;
  }

  void validate() const {
    if (points() < 1) throw std::invalid_argument("observation set is empty");
    if (y.size() != points()) throw std::invalid_argument("y has wrong length");
    if (has_gradients() && (dY.rows() != points() || dY.cols() != dim()))
      throw std::invalid_argument("gradient block must be n x d (all-or-none per set)");
    if (!X.allFinite() || !y.allFinite() || (has_gradients() && !dY.allFinite()))
      throw std::invalid_argument("observations contain non-finite entries");
  }
};

}  // namespace gradkrig
