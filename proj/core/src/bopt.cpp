#include "gradkrig/bopt.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "gradkrig/rng.hpp"
#include "gradkrig/testfns.hpp"

namespace gradkrig {

namespace {

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

Eigen::VectorXd clip_to_box(Eigen::VectorXd x, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i) = std::min(std::max(x(i), b(i, 0)), b(i, 1));
  return x;
}

Eigen::VectorXd uniform_in_box(const Eigen::Ref<const Eigen::MatrixXd>& b,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(b.rows());
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    x(i) = b(i, 0) + (b(i, 1) - b(i, 0)) * unif(rng);
  return x;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// max over the box of |p^T x| per reduced coordinate, evaluated without
// enumerating corners: max_x p^T x = sum_i max(p_i lo_i, p_i hi_i).
double reduced_box_radius(const Eigen::Ref<const Eigen::MatrixXd>& P,
                          const Eigen::Ref<const Eigen::MatrixXd>& bounds) {
  double R = 0.0;
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    double hi = 0.0, lo = 0.0;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      hi += std::max(P(i, j) * bounds(i, 0), P(i, j) * bounds(i, 1));
      lo += std::min(P(i, j) * bounds(i, 0), P(i, j) * bounds(i, 1));
    }
    R = std::max({R, std::abs(hi), std::abs(lo)});
  }
  return R;
}

// sample `count` distinct directions among the leading 2*count, weighted by
// eigenvalue mass
Eigen::MatrixXd pick_projection(const ActiveSubspace& as, int count,
                                std::mt19937_64& rng) {
  const int pool = std::min<int>(2 * count, as.projection.cols());
  std::vector<int> chosen;
  std::vector<double> weights(pool);
  for (int i = 0; i < pool; ++i) weights[i] = std::max(as.eigenvalues(i), 1e-300);
  std::vector<bool> used(pool, false);
  for (int pick = 0; pick < count; ++pick) {
    double total = 0.0;
    for (int i = 0; i < pool; ++i)
      if (!used[i]) total += weights[i];
    std::uniform_real_distribution<double> unif(0.0, total);
    double mark = unif(rng);
    int sel = -1;
    for (int i = 0; i < pool; ++i) {
      if (used[i]) continue;
      mark -= weights[i];
      if (mark <= 0.0) {
        sel = i;
        break;
      }
    }
    if (sel < 0)
      for (int i = pool - 1; i >= 0; --i)
        if (!used[i]) {
          sel = i;
          break;
        }
    used[sel] = true;
    chosen.push_back(sel);
  }
  std::sort(chosen.begin(), chosen.end());
  Eigen::MatrixXd P(as.projection.rows(), count);
  for (int i = 0; i < count; ++i) P.col(i) = as.projection.col(chosen[i]);
  return P;
}

}  // namespace

double expected_improvement(double mean, double variance, double best) {
  return expected_improvement_gradient(mean, variance, best).value;
}

EiDerivatives expected_improvement_gradient(double mean, double variance, double best) {
  EiDerivatives out;
  if (variance < 0.0) variance = 0.0;
  const double diff = best - mean;
  if (variance == 0.0) {
    out.value = std::max(diff, 0.0);
    out.d_mean = diff > 0.0 ? -1.0 : 0.0;
    out.d_variance = 0.0;
    return out;
  }
  const double sigma = std::sqrt(variance);
  const double z = diff / sigma;
  const double Phi = normal_cdf(z), phi = normal_pdf(z);
  out.value = diff * Phi + sigma * phi;
  out.d_mean = -Phi;
  out.d_variance = phi / (2.0 * sigma);
  return out;
}

GradObjective objective_from(const TestFunction& fn) {
  return [fn](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) *grad = fn.gradient(x);
    return fn.value(x);
  };
}

BoTrace baseline_random(const GradObjective& objective,
                        const Eigen::Ref<const Eigen::MatrixXd>& bounds, int budget,
                        std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = seeded_rng(seed, 1);
  BoTrace trace;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < budget; ++i) {
    Eigen::VectorXd x = uniform_in_box(bounds, rng);
    const double f = objective(x, nullptr);
    best = std::min(best, f);
    trace.push_back({i + 1, x, f, best, seconds_since(t0)});
  }
  return trace;
}

BoTrace baseline_local(const GradObjective& objective,
                       const Eigen::Ref<const Eigen::MatrixXd>& bounds, int budget,
                       std::uint64_t seed, int restarts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index D = bounds.rows();
  auto rng = seeded_rng(seed, 2);
  BoTrace trace;
  double best = std::numeric_limits<double>::infinity();
  int evals = 0;

  auto record = [&](const Eigen::VectorXd& x, double f) {
    best = std::min(best, f);
    trace.push_back({++evals, x, f, best, seconds_since(t0)});
  };

  for (int r = 0; r < restarts && evals < budget; ++r) {
    Eigen::VectorXd x = uniform_in_box(bounds, rng);
    Eigen::VectorXd g(D);
    double f = objective(x, &g);
    record(x, f);

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(D, D);  // inverse Hessian
    for (int it = 0; it < 200 && evals < budget; ++it) {
      if (g.norm() <= 1e-8) break;
      Eigen::VectorXd dir = -H * g;
      if (dir.dot(g) >= 0.0) {  // safeguard: fall back to steepest descent
        H.setIdentity();
        dir = -g;
      }
      // backtracking line search with box projection
      double t = 1.0;
      bool moved = false;
      Eigen::VectorXd x_new, g_new;
      double f_new = f;
      while (t > 1e-12 && evals < budget) {
        x_new = clip_to_box(x + t * dir, bounds);
        g_new.resize(D);
        f_new = objective(x_new, &g_new);
        record(x_new, f_new);
        if (f_new <= f + 1e-4 * g.dot(x_new - x)) {
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;

      Eigen::VectorXd s = x_new - x;
      Eigen::VectorXd dg = g_new - g;
      const double sy = s.dot(dg);
      if (sy > 1e-12 * s.norm() * dg.norm()) {
        // BFGS update of the inverse Hessian
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(D, D);
        Eigen::MatrixXd V = I - (s * dg.transpose()) / sy;
        H = V * H * V.transpose() + (s * s.transpose()) / sy;
      }
      x = x_new;
      f = f_new;
      g = g_new;
    }
  }
  return trace;
}

BoTrace bo_run(const GradObjective& objective,
               const Eigen::Ref<const Eigen::MatrixXd>& bounds, int budget,
               int subspace_dim, std::uint64_t seed, const BoConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index D = bounds.rows();
  if (subspace_dim < 1 || subspace_dim > D)
    throw std::invalid_argument("subspace dimension out of range");
  const int init = config.initial_design > 0 ? config.initial_design
                                             : 2 * (subspace_dim + 1);
  if (budget < init)
    throw std::invalid_argument("budget smaller than the initial design");

  auto rng = seeded_rng(seed, 3);
  Eigen::MatrixXd X(budget, D);
  Eigen::VectorXd y(budget);
  Eigen::MatrixXd G(budget, D);
  int n = 0;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x_best;
  BoTrace trace;

  auto sample_point = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(D);
    double f;
    try {
      f = objective(x, &g);
      if (!std::isfinite(f) || !g.allFinite())
        throw std::runtime_error("objective returned a non-finite value");
    } catch (const std::exception& e) {
      throw BoAbortError(std::string("objective evaluation failed: ") + e.what(),
                         X.topRows(n), y.head(n), G.topRows(n), n);
    }
    X.row(n) = x.transpose();
    y(n) = f;
    G.row(n) = g.transpose();
    ++n;
    if (f < best) {
      best = f;
      x_best = x;
    }
    trace.push_back({n, x, f, best, seconds_since(t0)});
  };

  for (int i = 0; i < init; ++i) sample_point(uniform_in_box(bounds, rng));

  KernelSpec kernel(KernelFamily::SquaredExponential, 1.0, 1.0);
  double noise_v = 1e-2, noise_g = 1e-2;
  bool have_fit = false;

  while (n < budget) {
    // Algorithm step: subspace from all sampled gradients, random choice of
    // directions among the leading ones
    auto as = estimate_active_subspace(G.topRows(n));
    Eigen::MatrixXd P = pick_projection(as, subspace_dim, rng);
    const double R = std::max(reduced_box_radius(P, bounds), 1e-8);
    Eigen::MatrixXd ubox(subspace_dim, 2);
    ubox.col(0).setConstant(-R);
    ubox.col(1).setConstant(R);

    // reduced-space data
    ObservationSet data;
    data.X = X.topRows(n) * P;
    data.y = y.head(n);
    data.dY = G.topRows(n) * P;
    const double yscale = std::max(1e-8, std::sqrt((data.y.array() - data.y.mean())
                                                       .square()
                                                       .sum() /
                                                   std::max<Eigen::Index>(n - 1, 1)));
    if (!have_fit) {
      kernel = KernelSpec(KernelFamily::SquaredExponential, 0.3 * R, yscale);
      noise_v = std::max(1e-3 * yscale, 1e-6);
      noise_g = std::max(1e-3 * data.dY.cwiseAbs().maxCoeff(), 1e-6);
    }
    data.noise_value = noise_v;
    data.noise_gradient = noise_g;

    GpConfig gcfg = config.gp;
    gcfg.seed = mix_seed(seed, 100 + n);
    GpModel model(kernel, data, gcfg);
    if ((n - init) % std::max(config.fit_every, 1) == 0) {
      try {
        FitOptions fopts = config.fit;
        fopts.seed = mix_seed(seed, n);
        auto res = model.fit(fopts);
        kernel = res.kernel;
        // deterministic objectives drive the fitted noise to zero; a floor
        // keeps the Gram matrix factorable
        noise_v = std::max(res.noise_value, 1e-5 * yscale);
        noise_g = std::max(res.noise_gradient, 1e-5 * yscale / std::max(R, 1e-8));
        have_fit = true;
      } catch (const std::exception&) {
        // keep the previous hyperparameters; the GP is still usable
      }
    }
    model.set_hyperparameters(kernel, noise_v, noise_g);

    Eigen::VectorXd x_new;
    try {
    auto variance_at = [&](const Eigen::VectorXd& u) {
      switch (config.variance) {
        case BoVariance::Exact: return model.predict_variance_exact(u);
        case BoVariance::Randomized: {
          Eigen::MatrixXd one(1, u.size());
          one.row(0) = u.transpose();
          return model.predict_variance_randomized(one, config.randomized_probes,
                                                   mix_seed(seed, 500 + n))(0);
        }
        default: return model.predict_variance_pivchol(u);
      }
    };

    // EI ascent gradient through mean and the pivoted Cholesky variance
    const Preconditioner* M = model.preconditioner();
    auto ei_and_grad = [&](const Eigen::VectorXd& u, double& ei, Eigen::VectorXd& grad) {
      Eigen::MatrixXd one(1, u.size());
      one.row(0) = u.transpose();
      auto [mv, mg] = model.predict_mean_grad(one);
      const double v = variance_at(u);
      auto d = expected_improvement_gradient(mv(0), v, best);
      ei = d.value;
      // dv/du via the quadratic form through M^{-1}
      Eigen::VectorXd q = model.cross_covariance(u);
      Eigen::MatrixXd J = model.cross_covariance_jacobian(u);
      Eigen::VectorXd Minv_q = M ? M->apply(q) : q;
      Eigen::VectorXd dv = -2.0 * (J.transpose() * Minv_q);
      grad = d.d_mean * mg.row(0).transpose() + d.d_variance * dv;
    };

    // multi-start projected gradient ascent on EI
    Eigen::VectorXd u_star = Eigen::VectorXd::Zero(subspace_dim);
    double ei_star = -1.0;
    for (int s = 0; s < config.ei_starts; ++s) {
      Eigen::VectorXd u;
      if (s == 0)
        u = Eigen::VectorXd::Zero(subspace_dim);
      else if (s == 1 && x_best.size() == D)
        u = P.transpose() * x_best;
      else
        u = uniform_in_box(ubox, rng);
      u = clip_to_box(u, ubox);

      double ei;
      Eigen::VectorXd grad(subspace_dim);
      ei_and_grad(u, ei, grad);
      double step = 0.1 * R;
      for (int it = 0; it < config.ei_iterations && step > 1e-10 * R; ++it) {
        const double gn = grad.norm();
        if (gn < 1e-14) break;
        Eigen::VectorXd u_try = clip_to_box(u + (step / gn) * grad, ubox);
        double ei_try;
        Eigen::VectorXd grad_try(subspace_dim);
        ei_and_grad(u_try, ei_try, grad_try);
        if (ei_try > ei) {
          u = u_try;
          ei = ei_try;
          grad = grad_try;
          step *= 1.5;
        } else {
          step *= 0.5;
        }
      }
      if (ei > ei_star) {
        ei_star = ei;
        u_star = u;
      }
    }

    x_new = clip_to_box(P * u_star, bounds);
    // avoid exact duplicates, which would make the Gram matrix singular
    for (int i = 0; i < n; ++i) {
      if ((X.row(i).transpose() - x_new).norm() < 1e-10) {
        Eigen::VectorXd jitterv = uniform_in_box(bounds, rng);
        x_new = clip_to_box(x_new + 1e-6 * (jitterv - x_new), bounds);
        break;
      }
    }
    } catch (const std::exception&) {
      // degenerate posterior (e.g. vanishing noise made the solve fail):
      // inflate the noise for the next round and fall back to exploration
      noise_v = std::max(10.0 * noise_v, 1e-4 * yscale);
      noise_g = std::max(10.0 * noise_g, 1e-4 * yscale / std::max(R, 1e-8));
      x_new = uniform_in_box(bounds, rng);
    }
    sample_point(x_new);
  }
  return trace;
}

}  // namespace gradkrig
