#include "gradkrig/gp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gradkrig/rng.hpp"

namespace gradkrig {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::string to_string(GpBackend backend) {
  switch (backend) {
    case GpBackend::Exact: return "exact";
    case GpBackend::Dski: return "dski";
    case GpBackend::Dskip: return "dskip";
  }
  return "?";
}

GpBackend backend_from_string(const std::string& name) {
  if (name == "exact" || name == "dense") return GpBackend::Exact;
  if (name == "dski" || name == "ski") return GpBackend::Dski;
  if (name == "dskip" || name == "skip") return GpBackend::Dskip;
  throw std::invalid_argument("unknown backend '" + name + "'");
}

GpModel::GpModel(KernelSpec kernel, ObservationSet data, GpConfig config)
    : kernel_(std::move(kernel)),
      data_(std::move(data)),
      config_(std::move(config)),
      noise_value_(data_.noise_value),
      noise_gradient_(data_.noise_gradient) {
  data_.validate();
  if (noise_value_ <= 0.0) throw std::invalid_argument("value noise must be positive");
  if (data_.has_gradients() && noise_gradient_ <= 0.0)
    throw std::invalid_argument("gradient noise must be positive");
  mean_ = data_.y.mean();
}

void GpModel::set_hyperparameters(const KernelSpec& kernel, double noise_value,
                                  double noise_gradient) {
  if (noise_value <= 0.0) throw std::invalid_argument("value noise must be positive");
  kernel_ = kernel;
  noise_value_ = noise_value;
  noise_gradient_ = noise_gradient;
  invalidate();
}

void GpModel::invalidate() {
  op_.reset();
  dski_.reset();
  dskip_.reset();
  llt_.reset();
  kuu_dlogell_.reset();
  precond_.reset();
  alpha_.reset();
  dski_mean_grid_.reset();
}

void GpModel::build_operator() {
  if (op_) return;
  const bool grads = data_.has_gradients();
  NoiseLevels noise{noise_value_, noise_gradient_};
  switch (config_.backend) {
    case GpBackend::Exact: {
      AssemblyOptions opts;
      opts.with_derivatives = grads;
      opts.size_cap = config_.dense_size_cap;
      Eigen::MatrixXd K = assemble_dense(kernel_, data_.X, data_.X, opts);
      Eigen::VectorXd nd(K.rows());
      nd.head(data_.points()).setConstant(noise_value_ * noise_value_);
      if (grads)
        nd.tail(K.rows() - data_.points())
            .setConstant(noise_gradient_ * noise_gradient_);
      K += Eigen::MatrixXd(nd.asDiagonal());
      llt_.emplace(K);
      if (llt_->info() != Eigen::Success)
        throw std::runtime_error("dense kernel matrix is not positive definite");
      op_ = std::make_shared<DenseOperator>(std::move(K));
      break;
    }
    case GpBackend::Dski: {
      Grid grid = Grid::cover(data_.X, config_.grid_ratio * kernel_.lengthscale(), 3,
                              config_.max_grid_nodes);
      dski_ = std::make_shared<DskiOperator>(kernel_, grid, data_.X, noise,
                                             config_.interpolation, grads);
      kuu_dlogell_.emplace(grid, kernel_dlogell_profile(kernel_));
      op_ = dski_;
      break;
    }
    case GpBackend::Dskip: {
      DskipConfig cfg;
      cfg.rank = config_.dskip_rank;
      cfg.grid_ratio = config_.dskip_grid_ratio;
      cfg.max_grid_nodes = config_.dskip_max_grid_nodes;
      cfg.seed = config_.seed;
      cfg.track_dlogell = true;
      cfg.with_gradients = grads;
      dskip_ = std::make_shared<DskipOperator>(kernel_, data_.X, noise, cfg);
      op_ = dskip_;
      break;
    }
  }
}

const LinearOperator& GpModel::op() {
  build_operator();
  return *op_;
}

const Preconditioner* GpModel::preconditioner() {
  if (!config_.use_preconditioner) return nullptr;
  if (precond_) return &*precond_;
  build_operator();

  Eigen::VectorXd nd(op_->size());
  nd.head(data_.points()).setConstant(noise_value_ * noise_value_);
  if (op_->size() > data_.points())
    nd.tail(op_->size() - data_.points())
        .setConstant(noise_gradient_ * noise_gradient_);

  // pivoted Cholesky of the kernel part only; the noise goes into M directly
  Eigen::VectorXd diag = op_->diagonal() - nd;
  auto row_fn = [this, &nd](Eigen::Index i) -> Eigen::VectorXd {
    Eigen::VectorXd r = op_->row(i);
    r(i) -= nd(i);
    return r;
  };
  auto factor = pivoted_cholesky(diag.cwiseMax(0.0), row_fn,
                                 std::min(config_.precond_rank, op_->size()), 0.0);
  if (factor.L.cols() == 0)
    throw std::runtime_error("pivoted Cholesky produced an empty preconditioner factor");
  precond_.emplace(factor.L, nd);
  return &*precond_;
}

Eigen::VectorXd GpModel::solve(const Eigen::Ref<const Eigen::VectorXd>& b,
                               double tol_scale) {
  build_operator();
  if (config_.backend == GpBackend::Exact) return llt_->solve(b);
  CgOptions opts = config_.cg;
  opts.tol *= tol_scale;
  const Preconditioner* M = preconditioner();
  CgResult res = cg(*op_, b, opts, M ? M->as_apply() : PrecondApply{});
  if (!res.converged)
    throw std::runtime_error(
        "CG did not converge: relative residual " +
        std::to_string(res.residual_history.back()) + " after " +
        std::to_string(res.iterations) + " iterations (tol " + std::to_string(opts.tol) +
        ")");
  return res.x;
}

const Eigen::VectorXd& GpModel::alpha() {
  if (!alpha_) alpha_ = solve(data_.stacked_targets(mean_));
  return *alpha_;
}

double GpModel::logdet() {
  build_operator();
  if (config_.backend == GpBackend::Exact) {
    return 2.0 * Eigen::MatrixXd(llt_->matrixL()).diagonal().array().log().sum();
  }
  SlqOptions opts;
  opts.probes = config_.slq_probes;
  opts.lanczos_steps = config_.slq_steps;
  opts.seed = config_.seed;
  const double floor2 = data_.has_gradients()
                            ? std::min(noise_value_, noise_gradient_)
                            : noise_value_;
  opts.eigen_floor = 0.5 * floor2 * floor2;
  return slq_logdet(*op_, opts).logdet;
}

double GpModel::log_marginal_likelihood() {
  const Eigen::VectorXd t = data_.stacked_targets(mean_);
  const double fit_term = t.dot(alpha());
  const double complexity = logdet();
  const double N = static_cast<double>(data_.outputs());
  return -0.5 * (fit_term + complexity + N * std::log(2.0 * std::numbers::pi));
}

Eigen::VectorXd GpModel::kernel_part_apply(const Eigen::Ref<const Eigen::VectorXd>& v) {
  build_operator();
  Eigen::VectorXd out = op_->apply(v);
  out.head(data_.points()) -= (noise_value_ * noise_value_) * v.head(data_.points());
  if (op_->size() > data_.points()) {
    const Eigen::Index tail = op_->size() - data_.points();
    out.tail(tail) -= (noise_gradient_ * noise_gradient_) * v.tail(tail);
  }
  return out;
}

Eigen::VectorXd GpModel::dlogell_apply(const Eigen::Ref<const Eigen::VectorXd>& v) {
  build_operator();
  switch (config_.backend) {
    case GpBackend::Exact: {
      AssemblyOptions opts;
      opts.with_derivatives = data_.has_gradients();
      opts.dlogell = true;
      opts.size_cap = config_.dense_size_cap;
      // assembled on demand; callers at exact scale tolerate the O(N^2) cost
      Eigen::MatrixXd M = assemble_dense(kernel_, data_.X, data_.X, opts);
      return M * v;
    }
    case GpBackend::Dski:
      return dski_->stacked_apply(kuu_dlogell_->apply(dski_->stacked_transpose_apply(v)));
    case GpBackend::Dskip:
      return dskip_->dlogell_apply(v);
  }
  throw std::logic_error("unreachable");
}

Eigen::VectorXd GpModel::lml_gradient() {
  build_operator();
  const Eigen::Index n = data_.points();
  const Eigen::Index N = op_->size();
  const bool grads = data_.has_gradients();
  const int nparams = grads ? 4 : 3;
  const Eigen::VectorXd& a = alpha();

  // dK/dtheta as MVM closures over (log ell, log s, log sigma1[, log sigma2])
  auto apply_param = [&](int p, const Eigen::Ref<const Eigen::VectorXd>& v) {
    Eigen::VectorXd out;
    switch (p) {
      case 0: return dlogell_apply(v);
      case 1: return Eigen::VectorXd(2.0 * kernel_part_apply(v));
      case 2:
        out = Eigen::VectorXd::Zero(N);
        out.head(n) = (2.0 * noise_value_ * noise_value_) * v.head(n);
        return out;
      default:
        out = Eigen::VectorXd::Zero(N);
        out.tail(N - n) = (2.0 * noise_gradient_ * noise_gradient_) * v.tail(N - n);
        return out;
    }
  };

  Eigen::VectorXd grad(nparams);
  if (config_.backend == GpBackend::Exact) {
    // exact traces through the dense factorization
    Eigen::MatrixXd Kinv = llt_->solve(Eigen::MatrixXd::Identity(N, N));
    AssemblyOptions opts;
    opts.with_derivatives = grads;
    opts.dlogell = true;
    opts.size_cap = config_.dense_size_cap;
    Eigen::MatrixXd Mell = assemble_dense(kernel_, data_.X, data_.X, opts);

    const double data_ell = a.dot(Mell * a);
    const double tr_ell = (Kinv.cwiseProduct(Mell)).sum();
    grad(0) = 0.5 * (data_ell - tr_ell);

    Eigen::VectorXd Ka = kernel_part_apply(a);
    Eigen::VectorXd nd(N);
    nd.head(n).setConstant(noise_value_ * noise_value_);
    if (N > n) nd.tail(N - n).setConstant(noise_gradient_ * noise_gradient_);
    const double tr_s = 2.0 * (N - Kinv.diagonal().dot(nd));
    grad(1) = 0.5 * (2.0 * a.dot(Ka) - tr_s);

    const double sv2 = noise_value_ * noise_value_;
    grad(2) = 0.5 * (2.0 * sv2 * a.head(n).squaredNorm() -
                     2.0 * sv2 * Kinv.diagonal().head(n).sum());
    if (grads) {
      const double sg2 = noise_gradient_ * noise_gradient_;
      grad(3) = 0.5 * (2.0 * sg2 * a.tail(N - n).squaredNorm() -
                       2.0 * sg2 * Kinv.diagonal().tail(N - n).sum());
    }
    return grad;
  }

  const Preconditioner* M = preconditioner();
  const PrecondApply precond = M ? M->as_apply() : PrecondApply{};
  // trace probes feed a stochastic ascent direction; they tolerate a much
  // looser residual than the alpha solve
  CgOptions trace_cg = config_.cg;
  trace_cg.tol = std::max(config_.cg.tol, 1e-2);
  for (int p = 0; p < nparams; ++p) {
    Eigen::VectorXd Ma = apply_param(p, a);
    CallbackOperator Mop(N, [&](const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> y) { y = apply_param(p, x); });
    const double tr = trace_estimate(*op_, Mop, config_.gradient_probes, config_.seed,
                                     trace_cg, precond);
    grad(p) = 0.5 * (a.dot(Ma) - tr);
  }
  return grad;
}

FitResult GpModel::fit(const FitOptions& options) {
  const bool grads = data_.has_gradients();
  const int nparams = grads ? 4 : 3;

  auto encode = [&]() {
    Eigen::VectorXd p(nparams);
    p(0) = std::log(kernel_.lengthscale());
    p(1) = std::log(kernel_.outputscale());
    p(2) = std::log(noise_value_);
    if (grads) p(3) = std::log(noise_gradient_);
    return p;
  };
  auto decode = [&](const Eigen::VectorXd& p) {
    KernelSpec k = kernel_.with_hyperparameters(std::exp(p(0)), std::exp(p(1)));
    set_hyperparameters(k, std::exp(p(2)), grads ? std::exp(p(3)) : noise_gradient_);
  };
  auto clamp_params = [&](Eigen::VectorXd p) {
    p(0) = clamp(p(0), std::log(1e-4), std::log(1e4));
    p(1) = clamp(p(1), std::log(1e-6), std::log(1e6));
    for (int i = 2; i < nparams; ++i) p(i) = clamp(p(i), std::log(1e-6), std::log(1e3));
    return p;
  };

  const Eigen::VectorXd p_start = encode();
  const int restarts = options.max_iterations > 0 ? std::max(options.restarts, 1) : 1;

  FitResult best;
  best.log_marginal = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_p = p_start;
  bool any_ok = false;

  for (int r = 0; r < restarts; ++r) {
    FitRestartReport rep;
    Eigen::VectorXd p = p_start;
    if (r > 0) {
      auto rng = seeded_rng(options.seed, 31 + r);
      std::uniform_real_distribution<double> jitter(-0.7, 0.7);
      for (int i = 0; i < nparams; ++i) p(i) += jitter(rng);
      p = clamp_params(p);
    }
    try {
      decode(p);
      double L = log_marginal_likelihood();
      double step = options.initial_step;
      int it = 0;
      for (; it < options.max_iterations; ++it) {
        Eigen::VectorXd g;
        try {
          g = lml_gradient();
        } catch (const std::exception&) {
          break;  // keep the progress made so far in this restart
        }
        if (!options.optimize_noise) {
          g(2) = 0.0;
          if (nparams == 4) g(3) = 0.0;
        }
        if (!g.allFinite()) throw std::runtime_error("non-finite likelihood gradient");
        if (g.norm() < 1e-10) break;

        bool accepted = false;
        while (step >= options.min_step) {
          Eigen::VectorXd delta = step * g;
          for (int i = 0; i < nparams; ++i) delta(i) = clamp(delta(i), -0.5, 0.5);
          Eigen::VectorXd p_try = clamp_params(p + delta);
          decode(p_try);
          double L_try;
          try {
            L_try = log_marginal_likelihood();
          } catch (const std::exception&) {
            L_try = -std::numeric_limits<double>::infinity();
          }
          if (std::isfinite(L_try) && L_try > L) {
            p = p_try;
            L = L_try;
            step = std::min(step * 1.4, 2.0);
            ++rep.accepted_steps;
            accepted = true;
            break;
          }
          step *= 0.4;
        }
        if (!accepted) break;
      }
      decode(p);  // leave the model at this restart's parameters
      rep.succeeded = true;
      rep.iterations = it;
      rep.log_marginal = L;
      if (L > best.log_marginal) {
        best.log_marginal = L;
        best_p = p;
      }
      any_ok = true;
    } catch (const std::exception& e) {
      rep.succeeded = false;
      rep.error = e.what();
    }
    best.restarts.push_back(rep);
  }

  if (!any_ok) {
    std::string msg = "all fit restarts failed:";
    for (const auto& r : best.restarts) msg += " [" + r.error + "]";
    throw std::runtime_error(msg);
  }

  decode(best_p);
  best.kernel = kernel_;
  best.noise_value = noise_value_;
  best.noise_gradient = noise_gradient_;
  return best;
}

Eigen::VectorXd GpModel::cross_covariance(const Eigen::Ref<const Eigen::VectorXd>& x) {
  build_operator();
  const Eigen::Index n = data_.points();
  const int d = data_.dim();
  const bool grads = data_.has_gradients();

  if (config_.backend == GpBackend::Dski) {
    auto st = point_stencil(dski_->grid(), x, config_.interpolation);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dski_->grid().size());
    for (size_t c = 0; c < st.indices.size(); ++c) w(st.indices[c]) = st.value(c);
    return dski_->stacked_apply(dski_->grid_operator().apply(w));
  }

  Eigen::VectorXd q(data_.outputs());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = data_.X.row(i);
    q(i) = eval(kernel_, xi, x);
    if (grads) {
      Eigen::VectorXd g = eval_grad(kernel_, xi, x);  // d/dx
      for (int p = 0; p < d; ++p) q((p + 1) * n + i) = -g(p);  // d/dx_i
    }
  }
  return q;
}

Eigen::MatrixXd GpModel::cross_covariance_jacobian(
    const Eigen::Ref<const Eigen::VectorXd>& x) {
  build_operator();
  const Eigen::Index n = data_.points();
  const int d = data_.dim();
  const bool grads = data_.has_gradients();

  if (config_.backend == GpBackend::Dski) {
    auto st = point_stencil(dski_->grid(), x, config_.interpolation);
    Eigen::MatrixXd J(dski_->size(), d);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dski_->grid().size());
    for (int p = 0; p < d; ++p) {
      w.setZero();
      for (size_t c = 0; c < st.indices.size(); ++c) w(st.indices[c]) = st.derivative(c, p);
      J.col(p) = dski_->stacked_apply(dski_->grid_operator().apply(w));
    }
    return J;
  }

  Eigen::MatrixXd J(data_.outputs(), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = data_.X.row(i);
    Eigen::VectorXd g = eval_grad(kernel_, xi, x);  // dq_i/dx = dk(x_i, x)/dx
    J.row(i) = g.transpose();
    if (grads) {
      Eigen::MatrixXd H = eval_hess_block(kernel_, xi, x);  // d^2 k / dx_i dx
      for (int p = 0; p < d; ++p) J.row((p + 1) * n + i) = H.row(p);
    }
  }
  return J;
}

double GpModel::prior_variance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return eval(kernel_, x, x);
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::Ref<const Eigen::MatrixXd>& Xtest) {
  return predict_mean_grad(Xtest).first;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> GpModel::predict_mean_grad(
    const Eigen::Ref<const Eigen::MatrixXd>& Xtest) {
  build_operator();
  const Eigen::Index T = Xtest.rows();
  const int d = data_.dim();
  const Eigen::VectorXd& a = alpha();
  Eigen::VectorXd values(T);
  Eigen::MatrixXd gradients(T, d);

  if (config_.backend == GpBackend::Dski) {
    if (!dski_mean_grid_)
      dski_mean_grid_ = dski_->grid_operator().apply(dski_->stacked_transpose_apply(a));
    const Eigen::VectorXd& g = *dski_mean_grid_;
    for (Eigen::Index t = 0; t < T; ++t) {
      auto st = point_stencil(dski_->grid(), Xtest.row(t), config_.interpolation);
      double acc = 0.0;
      Eigen::VectorXd gr = Eigen::VectorXd::Zero(d);
      for (size_t c = 0; c < st.indices.size(); ++c) {
        acc += st.value(c) * g(st.indices[c]);
        for (int p = 0; p < d; ++p) gr(p) += st.derivative(c, p) * g(st.indices[c]);
      }
      values(t) = mean_ + acc;
      gradients.row(t) = gr.transpose();
    }
    return {values, gradients};
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::VectorXd x = Xtest.row(t);
    values(t) = mean_ + cross_covariance(x).dot(a);
    gradients.row(t) = (cross_covariance_jacobian(x).transpose() * a).transpose();
  }
  return {values, gradients};
}

double GpModel::predict_variance_exact(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd q = cross_covariance(x);
  return prior_variance(x) - q.dot(solve(q));
}

double GpModel::predict_variance_pivchol(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Preconditioner* M = preconditioner();
  if (!M)
    throw std::logic_error("pivoted Cholesky variance needs the preconditioner enabled");
  Eigen::VectorXd q = cross_covariance(x);
  return prior_variance(x) - M->quadratic(q);
}

Eigen::VectorXd GpModel::predict_variance_randomized(
    const Eigen::Ref<const Eigen::MatrixXd>& Xtest, int probes, std::uint64_t seed) {
  build_operator();
  const Preconditioner* M = preconditioner();
  if (!M)
    throw std::logic_error("randomized variance needs the preconditioner enabled");
  const Eigen::Index T = Xtest.rows();
  const Eigen::Index N = op_->size();

  Eigen::MatrixXd Kcross(N, T);
  Eigen::VectorXd base(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    Kcross.col(t) = cross_covariance(Xtest.row(t));
    base(t) = prior_variance(Xtest.row(t)) - M->quadratic(Kcross.col(t));
  }
  if (probes <= 0) return base;

  // unbiased control-variate correction:
  //   v = vhat - E_z[ z o (K' (Ktilde^{-1} - M^{-1}) K z) ]
  Eigen::VectorXd corr = Eigen::VectorXd::Zero(T);
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd z = rademacher_vector(T, seed, 9000 + p);
    Eigen::VectorXd w = Kcross * z;
    Eigen::VectorXd exact = solve(w);
    Eigen::VectorXd approx = M->apply(w);
    corr += z.cwiseProduct(Kcross.transpose() * (exact - approx));
  }
  return base - corr / double(probes);
}

}  // namespace gradkrig
