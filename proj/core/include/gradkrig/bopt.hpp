#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradkrig/gp.hpp"
#include "gradkrig/subspace.hpp"

namespace gradkrig {

/// Expected improvement under minimization:
///   EI = (best - mean) Phi(z) + sqrt(v) phi(z),  z = (best - mean)/sqrt(v),
/// and max(best - mean, 0) at zero variance.
double expected_improvement(double mean, double variance, double best);

/// EI plus its partial derivatives with respect to mean and variance.
struct EiDerivatives {
  double value = 0.0;
  double d_mean = 0.0;
  double d_variance = 0.0;
};
EiDerivatives expected_improvement_gradient(double mean, double variance, double best);

/// Objective returning f(x) and, when `grad` is non-null, filling the
/// gradient.
using GradObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd* grad)>;

GradObjective objective_from(const struct TestFunction& fn);

struct BoTracePoint {
  int iteration = 0;  // 1-based evaluation counter
  Eigen::VectorXd x;
  double value = 0.0;
  double best = 0.0;  // running minimum
  double wall_time_s = 0.0;
};
using BoTrace = std::vector<BoTracePoint>;

enum class BoVariance { Exact, PivotedCholesky, Randomized };

struct BoConfig {
  int initial_design = 0;  // 0 means 2 (d + 1)
  int ei_starts = 32;
  int ei_iterations = 60;
  BoVariance variance = BoVariance::PivotedCholesky;
  int randomized_probes = 32;  // when variance == Randomized (selection only)
  GpConfig gp;                 // backend for the reduced-space GP
  FitOptions fit;
  int fit_every = 1;  // refit cadence in iterations
};

/// Aborted run with a resumable snapshot of everything sampled so far.
class BoAbortError : public std::runtime_error {
 public:
  BoAbortError(const std::string& what, Eigen::MatrixXd X, Eigen::VectorXd y,
               Eigen::MatrixXd G, int iteration)
      : std::runtime_error(what), X(std::move(X)), y(std::move(y)), G(std::move(G)),
        iteration(iteration) {}
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::MatrixXd G;
  int iteration;
};

/// Bayesian optimization with derivatives and active-subspace learning: per
/// iteration the subspace is re-estimated from all sampled gradients, the
/// projection picks `subspace_dim` directions at random among the leading
/// ones (eigenvalue-mass weighted), EI is maximized over the reduced box,
/// and the GP with gradients is refit on the projected data.
BoTrace bo_run(const GradObjective& objective,
               const Eigen::Ref<const Eigen::MatrixXd>& bounds /* D x 2 */, int budget,
               int subspace_dim, std::uint64_t seed, const BoConfig& config = BoConfig{});

BoTrace baseline_random(const GradObjective& objective,
                        const Eigen::Ref<const Eigen::MatrixXd>& bounds, int budget,
                        std::uint64_t seed);

/// Multi-restart quasi-Newton local search with box projection; every
/// objective evaluation (line search included) counts against the budget.
BoTrace baseline_local(const GradObjective& objective,
                       const Eigen::Ref<const Eigen::MatrixXd>& bounds, int budget,
                       std::uint64_t seed, int restarts = 5);

}  // namespace gradkrig
