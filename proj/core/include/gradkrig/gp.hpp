#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gradkrig/dski.hpp"
#include "gradkrig/dskip.hpp"
#include "gradkrig/kernels.hpp"
#include "gradkrig/linalg.hpp"
#include "gradkrig/observations.hpp"

namespace gradkrig {

enum class GpBackend { Exact, Dski, Dskip };

std::string to_string(GpBackend backend);
GpBackend backend_from_string(const std::string& name);

struct GpConfig {
  GpBackend backend = GpBackend::Exact;

  // D-SKI grid controls: spacing h = grid_ratio * ell, capped per dimension.
  double grid_ratio = 0.2;
  int max_grid_nodes = 128;

  // D-SKIP controls
  Eigen::Index dskip_rank = 100;
  double dskip_grid_ratio = 0.1;
  int dskip_max_grid_nodes = 512;

  // iterative solves
  CgOptions cg{1e-4, 1000};
  bool use_preconditioner = true;
  Eigen::Index precond_rank = 100;

  // stochastic log-determinant and gradient traces
  int slq_probes = 10;
  int slq_steps = 50;
  int gradient_probes = 8;

  std::uint64_t seed = 0;
  InterpolationOrder interpolation = InterpolationOrder::Quintic;
  Eigen::Index dense_size_cap = 50'000'000;
};

struct FitOptions {
  int max_iterations = 40;
  int restarts = 3;
  double initial_step = 0.3;  // log-parameter space
  double min_step = 1e-4;
  bool optimize_noise = true;
  std::uint64_t seed = 0;
};

struct FitRestartReport {
  bool succeeded = false;
  std::string error;
  double log_marginal = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  int accepted_steps = 0;
};

struct FitResult {
  KernelSpec kernel{KernelFamily::SquaredExponential, 1.0, 1.0};
  double noise_value = 0.0;
  double noise_gradient = 0.0;
  double log_marginal = 0.0;
  std::vector<FitRestartReport> restarts;
};

/// GP regression model over an observation set with one of three backends
/// behind a common contract: exact dense, D-SKI, or D-SKIP.
class GpModel {
 public:
  GpModel(KernelSpec kernel, ObservationSet data, GpConfig config = GpConfig{});

  const KernelSpec& kernel() const { return kernel_; }
  const ObservationSet& data() const { return data_; }
  const GpConfig& config() const { return config_; }
  double mean() const { return mean_; }
  double noise_value() const { return noise_value_; }
  double noise_gradient() const { return noise_gradient_; }
  Eigen::Index outputs() const { return data_.outputs(); }

  /// Replaces hyperparameters and invalidates all cached state.
  void set_hyperparameters(const KernelSpec& kernel, double noise_value,
                           double noise_gradient);

  const LinearOperator& op();
  const Preconditioner* preconditioner();
  const Eigen::VectorXd& alpha();

  double log_marginal_likelihood();

  /// Gradient over (log ell, log s, log sigma1[, log sigma2]); the last
  /// component is present only when the data has gradients.
  Eigen::VectorXd lml_gradient();

  FitResult fit(const FitOptions& options = FitOptions{});

  Eigen::VectorXd predict_mean(const Eigen::Ref<const Eigen::MatrixXd>& Xtest);
  /// Values plus predicted gradients (row i holds the gradient at point i).
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict_mean_grad(
      const Eigen::Ref<const Eigen::MatrixXd>& Xtest);

  double predict_variance_exact(const Eigen::Ref<const Eigen::VectorXd>& x);
  double predict_variance_pivchol(const Eigen::Ref<const Eigen::VectorXd>& x);
  Eigen::VectorXd predict_variance_randomized(const Eigen::Ref<const Eigen::MatrixXd>& Xtest,
                                              int probes, std::uint64_t seed);

  /// Cross-covariance q(x) between f(x) and all training outputs, and its
  /// Jacobian dq/dx (N x d). For the D-SKI backend these go through the grid.
  Eigen::VectorXd cross_covariance(const Eigen::Ref<const Eigen::VectorXd>& x);
  Eigen::MatrixXd cross_covariance_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x);

  double prior_variance(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  void invalidate();
  void build_operator();
  Eigen::VectorXd kernel_part_apply(const Eigen::Ref<const Eigen::VectorXd>& v);
  Eigen::VectorXd dlogell_apply(const Eigen::Ref<const Eigen::VectorXd>& v);
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& b, double tol_scale = 1.0);
  double logdet();

  KernelSpec kernel_;
  ObservationSet data_;
  GpConfig config_;
  double mean_ = 0.0;
  double noise_value_;
  double noise_gradient_;

  std::shared_ptr<LinearOperator> op_;
  std::shared_ptr<DskiOperator> dski_;    // set when backend == Dski
  std::shared_ptr<DskipOperator> dskip_;  // set when backend == Dskip
  std::optional<Eigen::LLT<Eigen::MatrixXd>> llt_;  // exact backend factor
  std::optional<GridKernelOperator> kuu_dlogell_;   // D-SKI dK_UU/dlog(ell)
  std::optional<Preconditioner> precond_;
  std::optional<Eigen::VectorXd> alpha_;
  std::optional<Eigen::VectorXd> dski_mean_grid_;  // K_UU (B^T alpha), O(1) mean path
};

}  // namespace gradkrig
