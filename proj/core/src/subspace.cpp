#include "gradkrig/subspace.hpp"

#include <stdexcept>

namespace gradkrig {

ActiveSubspace ActiveSubspace::leading(int d) const {
  if (d < 1 || d > subspace_dim())
    throw std::invalid_argument("requested subspace dimension out of range");
  ActiveSubspace out;
  out.eigenvalues = eigenvalues;
  out.projection = projection.leftCols(d);
  return out;
}

ActiveSubspace estimate_active_subspace(const Eigen::Ref<const Eigen::MatrixXd>& gradients) {
  if (gradients.rows() < 1) throw std::invalid_argument("no gradient samples");
  if (!gradients.allFinite())
    throw std::invalid_argument("gradient samples contain non-finite entries");
  const Eigen::Index D = gradients.cols();
  Eigen::MatrixXd C = gradients.transpose() * gradients / double(gradients.rows());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  ActiveSubspace out;
  out.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
  out.projection = eig.eigenvectors().rowwise().reverse();
  (void)D;
  return out;
}

int select_subspace_dimension(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                              double mass) {
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 1;
  double acc = 0.0;
  for (int d = 0; d < eigenvalues.size(); ++d) {
    acc += eigenvalues(d);
    if (acc >= mass * total) return d + 1;
  }
  return static_cast<int>(eigenvalues.size());
}

ReducedSpace reduce_kernel(const Eigen::Ref<const Eigen::MatrixXd>& P) {
  Eigen::MatrixXd PtP = P.transpose() * P;
  if ((PtP - Eigen::MatrixXd::Identity(P.cols(), P.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("projection does not have orthonormal columns");
  return ReducedSpace{P};
}

double subspace_distance(const Eigen::Ref<const Eigen::MatrixXd>& P1,
                         const Eigen::Ref<const Eigen::MatrixXd>& P2) {
  if (P1.rows() != P2.rows()) throw std::invalid_argument("ambient dimensions differ");
  Eigen::MatrixXd diff = P1 * P1.transpose() - P2 * P2.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace gradkrig
