#include "gradkrig/linear_operator.hpp"

#include <stdexcept>

namespace gradkrig {

Eigen::VectorXd LinearOperator::diagonal() const {
  throw std::logic_error("operator does not expose its diagonal");
}

Eigen::VectorXd LinearOperator::row(Eigen::Index) const {
  throw std::logic_error("operator does not expose rows");
}

Eigen::MatrixXd LinearOperator::dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd col(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    mvm(e, col);
    A.col(j) = col;
    e(j) = 0.0;
  }
  return A;
}

}  // namespace gradkrig
