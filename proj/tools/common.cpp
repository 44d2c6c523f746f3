#include "common.hpp"

#include <cstdlib>
#include <stdexcept>

#include "gradkrig/interpolation.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gradkrig::cli {

void add_common_flags(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--kernel", opts.kernel, "kernel family (se, spline)")
      ->check(CLI::IsMember({"se", "spline"}));
  cmd->add_option("--backend", opts.backend, "kernel operator backend (exact, dski, dskip)")
      ->check(CLI::IsMember({"exact", "dski", "dskip"}));
  cmd->add_option("--ell", opts.lengthscale, "initial lengthscale (0: heuristic)");
  cmd->add_option("--outputscale", opts.outputscale, "initial output scale (0: heuristic)");
  cmd->add_option("--noise", opts.noise, "value noise sigma1");
  cmd->add_option("--noise-grad", opts.noise_gradient, "gradient noise sigma2");
  cmd->add_option("--grid-ratio", opts.grid_ratio, "grid spacing as a fraction of ell");
  cmd->add_option("--grid-size", opts.grid_size, "grid node cap per dimension");
  cmd->add_option("--rank", opts.rank, "preconditioner / D-SKIP rank");
  cmd->add_option("--tol", opts.tol, "CG relative residual tolerance");
  cmd->add_option("--maxit", opts.maxit, "CG iteration cap");
  cmd->add_option("--probes", opts.probes, "probe vectors for stochastic estimators");
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--precond", opts.precond, "preconditioning on/off")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, bool>{{"on", true}, {"off", false}, {"1", true}, {"0", false}},
          CLI::ignore_case));
  cmd->add_option("--variance", opts.variance,
                  "predictive variance estimator (exact, pivchol, randomized)")
      ->check(CLI::IsMember({"exact", "pivchol", "randomized"}));
}

GpConfig make_gp_config(const CommonOptions& opts) {
  GpConfig cfg;
  cfg.backend = backend_from_string(opts.backend);
  cfg.grid_ratio = opts.grid_ratio;
  cfg.max_grid_nodes = opts.grid_size;
  cfg.dskip_rank = opts.rank;
  cfg.cg.tol = opts.tol;
  cfg.cg.max_iterations = opts.maxit;
  cfg.use_preconditioner = opts.precond;
  cfg.precond_rank = opts.rank;
  cfg.slq_probes = opts.probes;
  cfg.gradient_probes = std::max(4, opts.probes / 2);
  cfg.seed = opts.seed;
  return cfg;
}

KernelSpec make_kernel(const CommonOptions& opts,
                       const Eigen::Ref<const Eigen::MatrixXd>& X) {
  double span2 = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double s = X.col(j).maxCoeff() - X.col(j).minCoeff();
    span2 += s * s;
  }
  const double diag = std::sqrt(std::max(span2, 1e-12));
  const double ell = opts.lengthscale > 0 ? opts.lengthscale : 0.2 * diag;
  const double s = opts.outputscale > 0 ? opts.outputscale : 1.0;

  const auto family = kernel_family_from_string(opts.kernel);
  if (family == KernelFamily::Spline) {
    auto cs = SplineConstants::for_domain(diag / ell, static_cast<int>(X.cols()));
    return KernelSpec(family, ell, s, cs);
  }
  return KernelSpec(family, ell, s);
}

void apply_thread_cap() {
  const char* env = std::getenv("GRADKRIG_THREADS");
  if (!env) return;
  const int threads = std::atoi(env);
  if (threads <= 0) return;
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
  Eigen::setNbThreads(threads);
}

int classify_exception(const std::exception& e) {
  const std::string what = e.what();
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitConfig;
  if (dynamic_cast<const OutOfGridError*>(&e)) return kExitData;
  if (dynamic_cast<const std::domain_error*>(&e)) return kExitData;
  if (what.find("did not converge") != std::string::npos ||
      what.find("restarts failed") != std::string::npos)
    return kExitSolver;
  if (what.find("malformed") != std::string::npos ||
      what.find("cannot open") != std::string::npos ||
      what.find("row") != std::string::npos)
    return kExitData;
  return kExitSolver;
}

double relative_rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  const double rmse = std::sqrt((predicted - truth).squaredNorm() / truth.size());
  const double mean = truth.mean();
  const double sd = std::sqrt((truth.array() - mean).square().sum() / truth.size());
  return rmse / std::max(sd, 1e-300);
}

double smae(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  const double mae = (predicted - truth).cwiseAbs().mean();
  const double mad = (truth.array() - truth.mean()).abs().mean();
  return mae / std::max(mad, 1e-300);
}

}  // namespace gradkrig::cli
