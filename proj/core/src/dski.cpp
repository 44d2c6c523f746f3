#include "gradkrig/dski.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace gradkrig {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  ~FftwBuffer() {
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
  }
};

}  // namespace

StationaryProfile kernel_profile(const KernelSpec& kernel) {
  return [kernel](const Eigen::Ref<const Eigen::VectorXd>& offset) {
    return eval(kernel, offset, Eigen::VectorXd::Zero(offset.size()));
  };
}

StationaryProfile kernel_dlogell_profile(const KernelSpec& kernel) {
  return [kernel](const Eigen::Ref<const Eigen::VectorXd>& offset) {
    return eval_dlogell(kernel, offset, Eigen::VectorXd::Zero(offset.size()));
  };
}

struct GridKernelOperator::Impl {
  Grid grid;
  int d = 0;
  std::vector<int> edims;        // embedding size per dimension
  Eigen::Index embed_total = 0;  // prod(edims)
  Eigen::Index cplx_total = 0;   // prod with last dimension halved
  Eigen::VectorXd spectrum;      // real eigenvalues of the circulant embedding
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  double* plan_real = nullptr;
  fftw_complex* plan_cplx = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (plan_real) fftw_free(plan_real);
    if (plan_cplx) fftw_free(plan_cplx);
  }

  // Row-major iteration helpers over the m-grid corner of the embedding.
  template <typename F>
  void for_each_corner(F&& f) const {
    const int dd = d;
    std::vector<Eigen::Index> idx(dd, 0);
    const Eigen::Index m = grid.size();
    for (Eigen::Index flat_m = 0; flat_m < m; ++flat_m) {
      Eigen::Index flat_e = 0;
      for (int j = 0; j < dd; ++j) flat_e = flat_e * edims[j] + idx[j];
      f(flat_m, flat_e);
      for (int j = dd - 1; j >= 0; --j) {
        if (++idx[j] < grid.dims(j)) break;
        idx[j] = 0;
      }
    }
  }
};

GridKernelOperator::GridKernelOperator(Grid grid, const StationaryProfile& profile)
    : impl_(std::make_unique<Impl>()) {
  impl_->grid = std::move(grid);
  impl_->d = impl_->grid.dim();
  const int d = impl_->d;

  impl_->edims.resize(d);
  impl_->embed_total = 1;
  for (int j = 0; j < d; ++j) {
    const int m = impl_->grid.dims(j);
    if (m < 2) throw std::invalid_argument("grid needs at least 2 nodes per dimension");
    impl_->edims[j] = 2 * (m - 1);
    impl_->embed_total *= impl_->edims[j];
  }
  impl_->cplx_total = impl_->embed_total / impl_->edims[d - 1] * (impl_->edims[d - 1] / 2 + 1);

  // Kernel slice on the embedded torus: entry t holds k at the wrapped offset.
  impl_->plan_real = fftw_alloc_real(impl_->embed_total);
  impl_->plan_cplx = fftw_alloc_complex(impl_->cplx_total);
  {
    std::vector<Eigen::Index> idx(d, 0);
    Eigen::VectorXd offset(d);
    for (Eigen::Index t = 0; t < impl_->embed_total; ++t) {
      for (int j = 0; j < d; ++j) {
        const Eigen::Index e = impl_->edims[j];
        const Eigen::Index w = idx[j] <= e / 2 ? idx[j] : idx[j] - e;
        offset(j) = static_cast<double>(w) * impl_->grid.spacing(j);
      }
      impl_->plan_real[t] = profile(offset);
      for (int j = d - 1; j >= 0; --j) {
        if (++idx[j] < impl_->edims[j]) break;
        idx[j] = 0;
      }
    }
  }

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<int> n(impl_->edims.begin(), impl_->edims.end());
    impl_->forward = fftw_plan_dft_r2c(d, n.data(), impl_->plan_real, impl_->plan_cplx,
                                       FFTW_ESTIMATE);
    impl_->backward = fftw_plan_dft_c2r(d, n.data(), impl_->plan_cplx, impl_->plan_real,
                                        FFTW_ESTIMATE);
  }
  if (!impl_->forward || !impl_->backward)
    throw std::runtime_error("FFTW plan creation failed");

  fftw_execute(impl_->forward);
  // Even symmetry of the slice makes the spectrum real; the imaginary parts
  // are roundoff and dropping them keeps the operator exactly symmetric.
  impl_->spectrum.resize(impl_->cplx_total);
  for (Eigen::Index t = 0; t < impl_->cplx_total; ++t)
    impl_->spectrum(t) = impl_->plan_cplx[t][0];
}

GridKernelOperator::~GridKernelOperator() = default;
GridKernelOperator::GridKernelOperator(GridKernelOperator&&) noexcept = default;
GridKernelOperator& GridKernelOperator::operator=(GridKernelOperator&&) noexcept = default;

Eigen::Index GridKernelOperator::size() const { return impl_->grid.size(); }
const Grid& GridKernelOperator::grid() const { return impl_->grid; }

double GridKernelOperator::min_embedding_eigenvalue() const {
  return impl_->spectrum.minCoeff();
}

void GridKernelOperator::mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
                             Eigen::Ref<Eigen::VectorXd> out) const {
  if (v.size() != size() || out.size() != size())
    throw std::invalid_argument("grid kernel MVM size mismatch");

  FftwBuffer buf;
  buf.real = fftw_alloc_real(impl_->embed_total);
  buf.cplx = fftw_alloc_complex(impl_->cplx_total);
  std::fill(buf.real, buf.real + impl_->embed_total, 0.0);
  impl_->for_each_corner([&](Eigen::Index fm, Eigen::Index fe) { buf.real[fe] = v(fm); });

  fftw_execute_dft_r2c(impl_->forward, buf.real, buf.cplx);
  for (Eigen::Index t = 0; t < impl_->cplx_total; ++t) {
    buf.cplx[t][0] *= impl_->spectrum(t);
    buf.cplx[t][1] *= impl_->spectrum(t);
  }
  fftw_execute_dft_c2r(impl_->backward, buf.cplx, buf.real);

  const double scale = 1.0 / static_cast<double>(impl_->embed_total);
  impl_->for_each_corner([&](Eigen::Index fm, Eigen::Index fe) { out(fm) = buf.real[fe] * scale; });
}

Eigen::VectorXd GridKernelOperator::apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  Eigen::VectorXd out(size());
  mvm(v, out);
  return out;
}

DskiOperator::DskiOperator(const KernelSpec& kernel, Grid grid,
                           const Eigen::Ref<const Eigen::MatrixXd>& X, NoiseLevels noise,
                           InterpolationOrder order, bool with_gradients)
    : n_(X.rows()),
      d_(static_cast<int>(X.cols())),
      groups_(with_gradients ? static_cast<int>(X.cols()) : 0),
      grid_(std::move(grid)),
      kernel_(kernel),
      noise_(noise),
      interp_(build_interpolation(grid_, X, order)),
      kuu_(grid_, kernel_profile(kernel)) {
  // Kernel values at all node-pair offsets that can occur inside one stencil.
  const int count = order == InterpolationOrder::Quintic ? 6 : 4;
  const int width = 2 * count - 1;
  table_dims_ = Eigen::VectorXi::Constant(d_, width);
  Eigen::Index total = 1;
  for (int j = 0; j < d_; ++j) total *= width;
  kernel_offset_table_.resize(total);
  std::vector<int> idx(d_, 0);
  Eigen::VectorXd offset(d_);
  auto profile = kernel_profile(kernel_);
  for (Eigen::Index t = 0; t < total; ++t) {
    for (int j = 0; j < d_; ++j)
      offset(j) = static_cast<double>(idx[j] - (count - 1)) * grid_.spacing(j);
    kernel_offset_table_(t) = profile(offset);
    for (int j = d_ - 1; j >= 0; --j) {
      if (++idx[j] < width) break;
      idx[j] = 0;
    }
  }
}

Eigen::VectorXd DskiOperator::noise_diagonal() const {
  Eigen::VectorXd nd(size());
  nd.head(n_).setConstant(noise_.value * noise_.value);
  if (groups_ > 0) nd.tail(n_ * groups_).setConstant(noise_.gradient * noise_.gradient);
  return nd;
}

Eigen::VectorXd DskiOperator::stacked_transpose_apply(
    const Eigen::Ref<const Eigen::VectorXd>& v) const {
  Eigen::VectorXd u = interp_.W.transpose() * v.head(n_);
  for (int j = 0; j < groups_; ++j)
    u += interp_.dW[j].transpose() * v.segment(n_ * (j + 1), n_);
  return u;
}

Eigen::VectorXd DskiOperator::stacked_apply(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  Eigen::VectorXd out(size());
  out.head(n_) = interp_.W * u;
  for (int j = 0; j < groups_; ++j) out.segment(n_ * (j + 1), n_) = interp_.dW[j] * u;
  return out;
}

void DskiOperator::mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
                       Eigen::Ref<Eigen::VectorXd> out) const {
  if (v.size() != size()) throw std::invalid_argument("D-SKI MVM size mismatch");
  Eigen::VectorXd u = stacked_transpose_apply(v);
  Eigen::VectorXd w = kuu_.apply(u);
  out = stacked_apply(w);
  const double nv = noise_.value * noise_.value;
  const double ng = noise_.gradient * noise_.gradient;
  out.head(n_) += nv * v.head(n_);
  if (groups_ > 0) out.tail(n_ * groups_) += ng * v.tail(n_ * groups_);
}

Eigen::VectorXd DskiOperator::diagonal() const {
  Eigen::VectorXd diag(size());
  const int count = table_dims_(0) / 2 + 1;

  // Per point: unflatten the stencil columns once, then accumulate
  // sum_{a,b} w_a w_b k(u_a - u_b) from the offset table for every group.
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n_; ++i) {
    std::vector<std::array<int, 16>> coords;
    std::vector<double> wv;

    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(interp_.W, i); it;
         ++it) {
      wv.push_back(it.value());
      std::array<int, 16> c{};
      Eigen::Index rem = it.col();
      for (int j = d_ - 1; j >= 0; --j) {
        c[j] = static_cast<int>(rem % grid_.dims(j));
        rem /= grid_.dims(j);
      }
      coords.push_back(c);
    }
    const auto nnz = static_cast<Eigen::Index>(coords.size());
    Eigen::MatrixXd wmat(nnz, groups_ + 1);
    for (Eigen::Index a = 0; a < nnz; ++a) wmat(a, 0) = wv[a];
    for (int j = 0; j < groups_; ++j) {
      Eigen::Index a = 0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(interp_.dW[j], i);
           it; ++it, ++a)
        wmat(a, j + 1) = it.value();
    }

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(groups_ + 1);
    for (Eigen::Index a = 0; a < nnz; ++a) {
      for (Eigen::Index b = 0; b < nnz; ++b) {
        Eigen::Index t = 0;
        for (int j = 0; j < d_; ++j)
          t = t * table_dims_(j) + (coords[a][j] - coords[b][j] + count - 1);
        const double kab = kernel_offset_table_(t);
        for (int g = 0; g <= groups_; ++g) acc(g) += wmat(a, g) * wmat(b, g) * kab;
      }
    }
    for (int g = 0; g <= groups_; ++g) diag(g * n_ + i) = acc(g);
  }

  const double nv = noise_.value * noise_.value;
  const double ng = noise_.gradient * noise_.gradient;
  diag.head(n_).array() += nv;
  if (groups_ > 0) diag.tail(n_ * groups_).array() += ng;
  return diag;
}

Eigen::VectorXd DskiOperator::row(Eigen::Index r) const {
  if (r < 0 || r >= size()) throw std::out_of_range("D-SKI row index out of range");
  const Eigen::Index i = r % n_;
  const int g = static_cast<int>(r / n_);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(grid_.size());
  const auto& mat = g == 0 ? interp_.W : interp_.dW[g - 1];
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(mat, i); it; ++it)
    b(it.col()) = it.value();
  Eigen::VectorXd w = kuu_.apply(b);
  Eigen::VectorXd out = stacked_apply(w);
  out(r) += (g == 0 ? noise_.value * noise_.value : noise_.gradient * noise_.gradient);
  return out;
}

}  // namespace gradkrig
