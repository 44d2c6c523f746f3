#pragma once

#include <CLI11.hpp>
#include <Eigen/Dense>

#include <string>

#include "gradkrig/gp.hpp"
#include "gradkrig/io.hpp"
#include "gradkrig/kernels.hpp"

namespace gradkrig::cli {

// exit codes: 0 success, 2 config error, 3 solver non-convergence, 4 data error
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitData = 4;

/// Options shared by most subcommands, mapped one-to-one onto flags.
struct CommonOptions {
  std::string kernel = "se";
  std::string backend = "exact";
  double lengthscale = 0.0;  // 0: heuristic from the data
  double outputscale = 0.0;
  double noise = 1e-2;
  double noise_gradient = 1e-2;
  double grid_ratio = 0.2;
  int grid_size = 128;  // node cap per dimension
  int rank = 100;       // preconditioner and D-SKIP rank
  double tol = 1e-4;
  int maxit = 1000;
  int probes = 10;
  std::uint64_t seed = 0;
  bool precond = true;
  std::string variance = "pivchol";
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts);

GpConfig make_gp_config(const CommonOptions& opts);

/// Kernel from the options; spline constants are calibrated on the data
/// bounding box (scaled diameter).
KernelSpec make_kernel(const CommonOptions& opts,
                       const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Caps worker parallelism from GRADKRIG_THREADS when set.
void apply_thread_cap();

/// Maps an escaped exception onto the documented exit codes.
int classify_exception(const std::exception& e);

double relative_rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);
/// Standardized MAE: mean absolute error divided by the mean absolute
/// deviation of the truth.
double smae(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

// subcommand registration, one per translation unit
void register_fit(CLI::App& app);
void register_predict(CLI::App& app);
void register_terrain(CLI::App& app);
void register_precond_study(CLI::App& app);
void register_benchmark_mvm(CLI::App& app);
void register_active_subspace(CLI::App& app);
void register_bo(CLI::App& app);

}  // namespace gradkrig::cli
