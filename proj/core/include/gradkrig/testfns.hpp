#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "gradkrig/observations.hpp"

namespace gradkrig {

/// Analytic test objective with gradient, standard domain box, and known
/// minimum when available. `value` and `gradient` are total on R^dim; domain
/// checks happen in evaluate().
struct TestFunction {
  std::string name;
  int dim = 0;
  Eigen::MatrixXd domain;  // dim x 2, columns are lower/upper bounds
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<double> min_value;
  std::optional<Eigen::VectorXd> min_location;

  bool in_domain(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 1e-12) const;
};

/// Value and gradient with a domain check; throws std::domain_error outside.
std::pair<double, Eigen::VectorXd> evaluate(const TestFunction& fn,
                                            const Eigen::Ref<const Eigen::VectorXd>& x);

TestFunction branin();
TestFunction franke();
/// f(x) = sin(|x|^2) on [-2, 2]^d.
TestFunction sine_norm(int dim = 2);
TestFunction sixhump();
TestFunction styblinski_tang(int dim = 2);
TestFunction hartmann3();
TestFunction ackley(int dim);
TestFunction rastrigin(int dim);
/// The 20-dimensional Welch et al. (1992) screening function on [-0.5, 0.5]^20.
TestFunction welch20();
/// The 5-dimensional Friedman function on [0, 1]^5.
TestFunction friedman5();

/// Lookup by name ("branin", "ackley", ...); `dim` applies to the
/// dimension-parametric families.
TestFunction test_function_by_name(const std::string& name, int dim = 0);

/// Embeds a d-dimensional function into R^D via a seeded random orthonormal
/// Q (D x d): f_D(x) = f(Q^T x), gradient Q grad f(Q^T x). When D == d the
/// embedding is the identity. `ambient_lo/hi` set the new domain box.
TestFunction embed(const TestFunction& fn, int D, std::uint64_t seed,
                   double ambient_lo = -1.0, double ambient_hi = 1.0);

/// The embedding matrix used by embed() for a given seed (for oracles).
Eigen::MatrixXd embedding_matrix(int D, int d, std::uint64_t seed);

enum class SamplingScheme { Uniform, Grid };

/// n samples over the function's domain with optional Gaussian noise on
/// values and gradients. Grid sampling rounds n down to a lattice.
ObservationSet sample_dataset(const TestFunction& fn, Eigen::Index n,
                              SamplingScheme scheme, std::uint64_t seed,
                              double noise_value = 0.0, double noise_gradient = 0.0,
                              bool with_gradients = true);

}  // namespace gradkrig
