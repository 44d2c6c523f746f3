#include "gradkrig/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "gradkrig/rng.hpp"

namespace gradkrig {

namespace detail {

// Lanczos iteration with full (two-pass) reorthogonalization from a given
// unit start vector. On breakdown (invariant subspace exhausted) the
// iteration deflates: it restarts from a fresh random direction orthogonal
// to the collected basis with a zero coupling in T, so repeated eigenvalues
// are still captured and a full-rank run reconstructs the operator exactly.
LanczosFactor lanczos_from_start(const LinearOperator& op, const Eigen::VectorXd& start,
                                 Eigen::Index steps, std::uint64_t restart_seed) {
  const Eigen::Index n = op.size();
  steps = std::min(steps, n);
  LanczosFactor fac;
  fac.Q.resize(n, steps);
  fac.alpha.resize(steps);
  fac.beta.resize(steps > 0 ? steps - 1 : 0);

  Eigen::VectorXd q = start;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
  double beta_prev = 0.0;
  double scale = 0.0;
  std::uint64_t restart_count = 0;
  Eigen::VectorXd w(n);
  Eigen::Index k = 0;
  for (; k < steps; ++k) {
    fac.Q.col(k) = q;
    op.mvm(q, w);
    w -= beta_prev * prev;
    const double a = q.dot(w);
    fac.alpha(k) = a;
    w -= a * q;
    for (int pass = 0; pass < 2; ++pass)
      w.noalias() -= fac.Q.leftCols(k + 1) * (fac.Q.leftCols(k + 1).transpose() * w);
    const double beta = w.norm();
    scale = std::max({scale, std::abs(a), beta});
    if (k + 1 >= steps) continue;  // final column; loop exits naturally

    if (beta <= 1e-12 * std::max(scale, 1e-300)) {
      fac.breakdown = true;
      // deflate: fresh direction orthogonal to everything collected so far
      bool found = false;
      for (int attempt = 0; attempt < 8 && !found; ++attempt) {
        Eigen::VectorXd r =
            gaussian_vector(n, mix_seed(restart_seed, 7777 + restart_count++), attempt);
        for (int pass = 0; pass < 2; ++pass)
          r.noalias() -= fac.Q.leftCols(k + 1) * (fac.Q.leftCols(k + 1).transpose() * r);
        const double rn = r.norm();
        if (rn > 1e-8 * std::sqrt(double(n))) {
          q = r / rn;
          found = true;
        }
      }
      if (!found) {
        ++k;
        break;  // space exhausted
      }
      fac.beta(k) = 0.0;
      prev.setZero();
      beta_prev = 0.0;
      continue;
    }
    fac.beta(k) = beta;
    prev = q;
    q = w / beta;
    beta_prev = beta;
  }
  if (k < steps) {
    fac.Q.conservativeResize(n, k);
    fac.alpha.conservativeResize(k);
    fac.beta.conservativeResize(k > 0 ? k - 1 : 0);
  }
  return fac;
}

}  // namespace detail

CgResult cg(const LinearOperator& A, const Eigen::Ref<const Eigen::VectorXd>& b,
            const CgOptions& options, const PrecondApply& precond) {
  const Eigen::Index n = A.size();
  if (b.size() != n) throw std::invalid_argument("cg: rhs size mismatch");

  CgResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precond ? precond(r) : r;
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  Eigen::VectorXd Ap(n);

  double relres = r.norm() / bnorm;
  res.residual_history.push_back(relres);
  if (relres <= options.tol) {
    res.converged = true;
    return res;
  }

  for (int it = 0; it < options.max_iterations; ++it) {
    A.mvm(p, Ap);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0) break;  // loss of positive definiteness; report as stalled
    const double alpha = rz / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    res.iterations = it + 1;
    relres = r.norm() / bnorm;
    res.residual_history.push_back(relres);
    if (relres <= options.tol) {
      res.converged = true;
      return res;
    }
    z = precond ? precond(r) : r;
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return res;
}

PivotedCholeskyFactor pivoted_cholesky(
    const Eigen::Ref<const Eigen::VectorXd>& diag,
    const std::function<Eigen::VectorXd(Eigen::Index)>& row_fn, Eigen::Index max_rank,
    double trace_tol) {
  const Eigen::Index n = diag.size();
  PivotedCholeskyFactor out;
  if (diag.minCoeff() < 0.0)
    throw std::runtime_error("pivoted Cholesky requires a nonnegative diagonal");

  Eigen::VectorXd d = diag;
  out.initial_trace = d.sum();
  out.residual_trace = out.initial_trace;
  const double scale = std::max(diag.maxCoeff(), 1e-300);
  max_rank = std::min(max_rank, n);
  out.L.resize(n, max_rank);
  out.pivots.reserve(max_rank);

  Eigen::Index k = 0;
  for (; k < max_rank; ++k) {
    Eigen::Index piv;
    const double dmax = d.maxCoeff(&piv);
    if (dmax <= 0.0 || out.residual_trace <= trace_tol * out.initial_trace) break;

    Eigen::VectorXd col = row_fn(piv);
    if (col.size() != n) throw std::invalid_argument("pivoted Cholesky row size mismatch");
    if (k > 0)
      col.noalias() -= out.L.leftCols(k) * out.L.row(piv).head(k).transpose();
    col /= std::sqrt(dmax);
    out.L.col(k) = col;
    out.pivots.push_back(piv);

    d -= col.cwiseAbs2();
    if (d.minCoeff() < -1e-10 * scale)
      throw std::runtime_error("pivoted Cholesky: operator is not positive semidefinite "
                               "(residual diagonal " + std::to_string(d.minCoeff()) + ")");
    d = d.cwiseMax(0.0);
    d(piv) = 0.0;
    out.residual_trace = d.sum();
  }
  out.L.conservativeResize(n, k);
  return out;
}

Preconditioner::Preconditioner(const Eigen::Ref<const Eigen::MatrixXd>& F,
                               const Eigen::Ref<const Eigen::VectorXd>& noise_diag) {
  if (F.rows() != noise_diag.size())
    throw std::invalid_argument("preconditioner factor and noise sizes differ");
  if (noise_diag.size() == 0 || noise_diag.minCoeff() <= 0.0)
    throw std::invalid_argument("preconditioner needs strictly positive noise");
  inv_sqrt_noise_ = noise_diag.cwiseSqrt().cwiseInverse();

  const Eigen::Index n = F.rows(), k = F.cols();
  if (k == 0)
    throw std::invalid_argument("preconditioner needs a factor of rank at least 1");
  Eigen::MatrixXd stacked(n + k, k);
  stacked.topRows(n) = inv_sqrt_noise_.asDiagonal() * F;
  stacked.bottomRows(k) = Eigen::MatrixXd::Identity(k, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  Eigen::MatrixXd thinQ =
      qr.householderQ() * Eigen::MatrixXd::Identity(n + k, k);
  Q1_ = thinQ.topRows(n);
}

Preconditioner::Preconditioner(const Eigen::Ref<const Eigen::MatrixXd>& F, double sigma,
                               Eigen::Index size)
    : Preconditioner(F, Eigen::VectorXd::Constant(size, sigma * sigma)) {}

Eigen::VectorXd Preconditioner::apply(const Eigen::Ref<const Eigen::VectorXd>& b) const {
  Eigen::VectorXd c = inv_sqrt_noise_.asDiagonal() * b;
  c.noalias() -= Q1_ * (Q1_.transpose() * c);
  return inv_sqrt_noise_.asDiagonal() * c;
}

PrecondApply Preconditioner::as_apply() const {
  return [this](const Eigen::Ref<const Eigen::VectorXd>& b) { return apply(b); };
}

double Preconditioner::quadratic(const Eigen::Ref<const Eigen::VectorXd>& b) const {
  const Eigen::VectorXd c = inv_sqrt_noise_.asDiagonal() * b;
  return c.squaredNorm() - (Q1_.transpose() * c).squaredNorm();
}

SlqResult slq_logdet(const LinearOperator& A, const SlqOptions& options) {
  const Eigen::Index n = A.size();
  SlqResult out;
  if (options.probes <= 0) return out;

  std::vector<double> estimates(options.probes, 0.0);
  std::vector<int> clamps(options.probes, 0);
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < options.probes; ++p) {
    Eigen::VectorXd z = rademacher_vector(n, options.seed, static_cast<std::uint64_t>(p));
    const double znorm2 = z.squaredNorm();

    // Lanczos from this probe; quadrature nodes/weights from the tridiagonal.
    const Eigen::Index steps = std::min<Eigen::Index>(options.lanczos_steps, n);
    LanczosFactor f = detail::lanczos_from_start(A, z / z.norm(), steps, mix_seed(options.seed, 50000 + p));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(f.alpha, f.beta);
    double est = 0.0;
    for (Eigen::Index i = 0; i < f.alpha.size(); ++i) {
      double lambda = eig.eigenvalues()(i);
      if (lambda < options.eigen_floor) {
        lambda = options.eigen_floor;
        ++clamps[p];
      }
      const double w0 = eig.eigenvectors()(0, i);
      est += w0 * w0 * std::log(lambda);
    }
    estimates[p] = znorm2 * est;
  }

  double sum = 0.0;
  for (int p = 0; p < options.probes; ++p) {
    sum += estimates[p];
    out.clamped += clamps[p];
  }
  out.logdet = sum / options.probes;
  return out;
}

double trace_estimate(const LinearOperator& A, const LinearOperator& B, int probes,
                      std::uint64_t seed, const CgOptions& cg_options,
                      const PrecondApply& precond) {
  if (A.size() != B.size()) throw std::invalid_argument("trace_estimate: size mismatch");
  const Eigen::Index n = A.size();
  if (probes <= 0) return 0.0;

  std::vector<double> estimates(probes, 0.0);
  bool failed = false;
#pragma omp parallel for schedule(dynamic) shared(failed)
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd z = rademacher_vector(n, seed, 1000 + static_cast<std::uint64_t>(p));
    Eigen::VectorXd Bz(n);
    B.mvm(z, Bz);
    CgResult solve = cg(A, z, cg_options, precond);
    if (!solve.converged) failed = true;
    estimates[p] = solve.x.dot(Bz);
  }
  if (failed)
    throw std::runtime_error("trace_estimate: CG did not converge within " +
                             std::to_string(cg_options.max_iterations) + " iterations");
  double sum = 0.0;
  for (int p = 0; p < probes; ++p) sum += estimates[p];
  return sum / probes;
}

Eigen::MatrixXd LanczosFactor::tridiagonal() const {
  const Eigen::Index r = alpha.size();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r, r);
  T.diagonal() = alpha;
  for (Eigen::Index i = 0; i + 1 < r; ++i) {
    T(i, i + 1) = beta(i);
    T(i + 1, i) = beta(i);
  }
  return T;
}

Eigen::VectorXd LanczosFactor::ritz_values() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(alpha, beta, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

Eigen::VectorXd LanczosFactor::apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  Eigen::VectorXd t = Q.transpose() * v;
  Eigen::VectorXd Tt = tridiagonal() * t;
  return Q * Tt;
}

Eigen::MatrixXd LanczosFactor::dense() const { return Q * tridiagonal() * Q.transpose(); }

LanczosFactor lanczos_lowrank(const LinearOperator& op, Eigen::Index rank,
                              std::uint64_t seed) {
  const Eigen::Index n = op.size();
  if (rank <= 0 || rank > n)
    throw std::invalid_argument("Lanczos rank must lie in [1, N]");
  Eigen::VectorXd q = gaussian_vector(n, seed);
  q.normalize();
  return detail::lanczos_from_start(op, q, rank, mix_seed(seed, 1));
}

}  // namespace gradkrig
