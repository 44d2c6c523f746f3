#include "gradkrig/dskip.hpp"

#include <cmath>
#include <stdexcept>

#include "gradkrig/rng.hpp"

namespace gradkrig {

namespace {

// QT for a tridiagonal T, by banded combination of Q's columns.
Eigen::MatrixXd times_tridiagonal(const LanczosFactor& f) {
  const Eigen::Index r = f.rank();
  Eigen::MatrixXd QT(f.Q.rows(), r);
  for (Eigen::Index k = 0; k < r; ++k) {
    QT.col(k) = f.alpha(k) * f.Q.col(k);
    if (k > 0) QT.col(k) += f.beta(k - 1) * f.Q.col(k - 1);
    if (k + 1 < r) QT.col(k) += f.beta(k) * f.Q.col(k + 1);
  }
  return QT;
}

Eigen::VectorXd hadamard_mvm_impl(const std::vector<LanczosFactor>& factors, size_t at,
                                  const Eigen::Ref<const Eigen::VectorXd>& v) {
  const LanczosFactor& A = factors[at];
  if (at + 1 == factors.size()) return A.apply(v);
  Eigen::MatrixXd QT = times_tridiagonal(A);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (Eigen::Index k = 0; k < A.rank(); ++k) {
    Eigen::VectorXd t = A.Q.col(k).cwiseProduct(v);
    Eigen::VectorXd u = hadamard_mvm_impl(factors, at + 1, t);
    out += QT.col(k).cwiseProduct(u);
  }
  return out;
}

}  // namespace

OneDimFactor::OneDimFactor(KernelSpec kernel_1d, Grid grid_1d,
                           const Eigen::Ref<const Eigen::VectorXd>& coords, int direction,
                           int total_dims, bool dlogell)
    : n_(coords.size()),
      d_(total_dims),
      direction_(direction),
      grid_(std::move(grid_1d)),
      interp_(build_interpolation(grid_, coords)),
      kuu_(grid_, dlogell ? kernel_dlogell_profile(kernel_1d) : kernel_profile(kernel_1d)) {
  if (grid_.dim() != 1) throw std::invalid_argument("one-dimensional factor needs a 1-D grid");
  if (direction < -1 || direction >= total_dims)
    throw std::invalid_argument("factor direction out of range");

  const int width = 11;  // quintic stencil pair offsets
  offset_table_.resize(width);
  auto profile = dlogell ? kernel_dlogell_profile(kernel_1d) : kernel_profile(kernel_1d);
  Eigen::VectorXd off(1);
  for (int t = 0; t < width; ++t) {
    off(0) = static_cast<double>(t - 5) * grid_.spacing(0);
    offset_table_(t) = profile(off);
  }
}

void OneDimFactor::mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
                       Eigen::Ref<Eigen::VectorXd> out) const {
  if (v.size() != size()) throw std::invalid_argument("factor MVM size mismatch");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(grid_.size());
  for (int g = 0; g <= d_; ++g)
    u += group_matrix(g).transpose() * v.segment(g * n_, n_);
  Eigen::VectorXd w = kuu_.apply(u);
  for (int g = 0; g <= d_; ++g) out.segment(g * n_, n_) = group_matrix(g) * w;
}

Eigen::VectorXd OneDimFactor::diagonal() const {
  Eigen::VectorXd diag(size());
  for (Eigen::Index i = 0; i < n_; ++i) {
    // W and dW share the sparsity pattern of the 1-D stencil
    std::vector<Eigen::Index> cols;
    std::vector<double> w, dw;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(interp_.W, i); it;
         ++it) {
      cols.push_back(it.col());
      w.push_back(it.value());
    }
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(interp_.dW[0], i);
         it; ++it)
      dw.push_back(it.value());

    double acc_w = 0.0, acc_dw = 0.0;
    for (size_t a = 0; a < cols.size(); ++a)
      for (size_t b = 0; b < cols.size(); ++b) {
        const double k = offset_table_(cols[a] - cols[b] + 5);
        acc_w += w[a] * w[b] * k;
        acc_dw += dw[a] * dw[b] * k;
      }
    for (int g = 0; g <= d_; ++g)
      diag(g * n_ + i) = (direction_ >= 0 && g == direction_ + 1) ? acc_dw : acc_w;
  }
  return diag;
}

Eigen::VectorXd OneDimFactor::row(Eigen::Index r) const {
  if (r < 0 || r >= size()) throw std::out_of_range("factor row index out of range");
  const Eigen::Index i = r % n_;
  const int g = static_cast<int>(r / n_);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(grid_.size());
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(group_matrix(g), i);
       it; ++it)
    b(it.col()) = it.value();
  Eigen::VectorXd w = kuu_.apply(b);
  Eigen::VectorXd out(size());
  for (int gg = 0; gg <= d_; ++gg) out.segment(gg * n_, n_) = group_matrix(gg) * w;
  return out;
}

OneDimFactor build_factor(const KernelSpec& kernel,
                          const Eigen::Ref<const Eigen::MatrixXd>& X, int direction,
                          double grid_ratio, int max_grid_nodes, bool dlogell) {
  if (!kernel.separable())
    throw std::invalid_argument("kernel family '" + to_string(kernel.family()) +
                                "' is not separable; the Hadamard factorization needs a "
                                "product kernel");
  const int d = static_cast<int>(X.cols());
  if (direction < 0 || direction >= d)
    throw std::invalid_argument("factor direction out of range");
  const double s1d = std::pow(kernel.outputscale(), 1.0 / d);
  KernelSpec k1(KernelFamily::SquaredExponential, kernel.lengthscale(), s1d);
  Grid g = Grid::cover(X.col(direction), kernel.lengthscale() * grid_ratio, 3,
                       max_grid_nodes);
  return OneDimFactor(k1, g, X.col(direction), direction, d, dlogell);
}

Eigen::VectorXd hadamard_mvm(const std::vector<LanczosFactor>& factors,
                             const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (factors.empty()) throw std::invalid_argument("hadamard_mvm needs at least one factor");
  for (const auto& f : factors)
    if (f.Q.rows() != v.size())
      throw std::invalid_argument("hadamard_mvm factor size mismatch");
  return hadamard_mvm_impl(factors, 0, v);
}

Eigen::VectorXd hadamard_diagonal(const std::vector<LanczosFactor>& factors) {
  if (factors.empty()) throw std::invalid_argument("no factors");
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(factors[0].Q.rows());
  for (const auto& f : factors) {
    Eigen::MatrixXd QT = times_tridiagonal(f);
    diag.array() *= (QT.array() * f.Q.array()).rowwise().sum();
  }
  return diag;
}

Eigen::VectorXd hadamard_row(const std::vector<LanczosFactor>& factors, Eigen::Index i) {
  if (factors.empty()) throw std::invalid_argument("no factors");
  if (i < 0 || i >= factors[0].Q.rows()) throw std::out_of_range("row index out of range");
  Eigen::VectorXd row = Eigen::VectorXd::Ones(factors[0].Q.rows());
  for (const auto& f : factors) {
    Eigen::VectorXd ti = f.tridiagonal() * f.Q.row(i).transpose();
    row.array() *= (f.Q * ti).array();
  }
  return row;
}

DskipOperator::DskipOperator(const KernelSpec& kernel,
                             const Eigen::Ref<const Eigen::MatrixXd>& X,
                             NoiseLevels noise, const DskipConfig& config)
    : n_(X.rows()),
      d_(static_cast<int>(X.cols())),
      groups_(config.with_gradients ? static_cast<int>(X.cols()) : 0),
      noise_(noise),
      track_dlogell_(config.track_dlogell) {
  const Eigen::Index N = n_ * (groups_ + 1);
  const Eigen::Index rank = std::min(config.rank, N);
  if (rank < 1) throw std::invalid_argument("D-SKIP rank must be positive");

  // Leaves: one factor per dimension, Lanczos-compressed. Without gradient
  // observations the factors carry only the value group (plain SKIP).
  if (!kernel.separable())
    throw std::invalid_argument("kernel family '" + to_string(kernel.family()) +
                                "' is not separable; the Hadamard factorization needs a "
                                "product kernel");
  const double s1d = std::pow(kernel.outputscale(), 1.0 / d_);
  KernelSpec k1(KernelFamily::SquaredExponential, kernel.lengthscale(), s1d);
  for (int j = 0; j < d_; ++j) {
    Grid g1 = Grid::cover(X.col(j), kernel.lengthscale() * config.grid_ratio, 3,
                          config.max_grid_nodes);
    const int dir = config.with_gradients ? j : -1;
    const int groups = config.with_gradients ? d_ : 0;
    OneDimFactor leaf(k1, g1, X.col(j), dir, groups);
    factors_.push_back(lanczos_lowrank(leaf, rank, mix_seed(config.seed, j)));
    if (track_dlogell_) {
      OneDimFactor dleaf(k1, g1, X.col(j), dir, groups, true);
      dlog_factors_.push_back(lanczos_lowrank(dleaf, rank, mix_seed(config.seed, 100 + j)));
    }
  }

  // Balanced pairwise merges down to at most two factors, re-compressing the
  // value and (when tracked) the product-rule derivative after each merge.
  std::uint64_t merge_id = 1000;
  while (factors_.size() > 2) {
    std::vector<LanczosFactor> next, dnext;
    for (size_t a = 0; a + 1 < factors_.size(); a += 2) {
      const LanczosFactor& A = factors_[a];
      const LanczosFactor& B = factors_[a + 1];
      const Eigen::Index product_rank = std::min(A.rank() * B.rank(), N);
      if (config.rank_policy == RankPolicy::Error && product_rank > rank)
        throw std::runtime_error("intermediate Hadamard rank " +
                                 std::to_string(product_rank) + " exceeds the cap " +
                                 std::to_string(rank));
      std::vector<LanczosFactor> pair = {A, B};
      CallbackOperator pair_op(N, [&pair](const Eigen::Ref<const Eigen::VectorXd>& x,
                                          Eigen::Ref<Eigen::VectorXd> y) {
        y = hadamard_mvm(pair, x);
      });
      next.push_back(lanczos_lowrank(pair_op, rank, mix_seed(config.seed, ++merge_id)));

      if (track_dlogell_) {
        std::vector<LanczosFactor> dab = {dlog_factors_[a], B};
        std::vector<LanczosFactor> adb = {A, dlog_factors_[a + 1]};
        CallbackOperator dpair_op(
            N, [&dab, &adb](const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> y) {
              y = hadamard_mvm(dab, x) + hadamard_mvm(adb, x);
            });
        dnext.push_back(
            lanczos_lowrank(dpair_op, rank, mix_seed(config.seed, ++merge_id)));
      }
    }
    if (factors_.size() % 2 == 1) {
      next.push_back(factors_.back());
      if (track_dlogell_) dnext.push_back(dlog_factors_.back());
    }
    factors_ = std::move(next);
    dlog_factors_ = std::move(dnext);
  }
}

Eigen::VectorXd DskipOperator::noise_diagonal() const {
  Eigen::VectorXd nd(size());
  nd.head(n_).setConstant(noise_.value * noise_.value);
  if (groups_ > 0) nd.tail(n_ * groups_).setConstant(noise_.gradient * noise_.gradient);
  return nd;
}

void DskipOperator::mvm(const Eigen::Ref<const Eigen::VectorXd>& v,
                        Eigen::Ref<Eigen::VectorXd> out) const {
  if (v.size() != size()) throw std::invalid_argument("D-SKIP MVM size mismatch");
  out = hadamard_mvm(factors_, v);
  out.head(n_) += (noise_.value * noise_.value) * v.head(n_);
  if (groups_ > 0)
    out.tail(n_ * groups_) += (noise_.gradient * noise_.gradient) * v.tail(n_ * groups_);
}

Eigen::VectorXd DskipOperator::diagonal() const {
  Eigen::VectorXd diag = hadamard_diagonal(factors_);
  diag.head(n_).array() += noise_.value * noise_.value;
  if (groups_ > 0) diag.tail(n_ * groups_).array() += noise_.gradient * noise_.gradient;
  return diag;
}

Eigen::VectorXd DskipOperator::row(Eigen::Index i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("D-SKIP row index out of range");
  Eigen::VectorXd row = hadamard_row(factors_, i);
  row(i) += (i < n_) ? noise_.value * noise_.value : noise_.gradient * noise_.gradient;
  return row;
}

Eigen::VectorXd DskipOperator::dlogell_apply(
    const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (!track_dlogell_)
    throw std::logic_error("D-SKIP operator was built without derivative tracking");
  if (factors_.size() == 1) return dlog_factors_[0].apply(v);
  std::vector<LanczosFactor> dab = {dlog_factors_[0], factors_[1]};
  std::vector<LanczosFactor> adb = {factors_[0], dlog_factors_[1]};
  return hadamard_mvm(dab, v) + hadamard_mvm(adb, v);
}

}  // namespace gradkrig
