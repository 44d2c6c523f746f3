#include "gradkrig/interpolation.hpp"

#include <cmath>
#include <sstream>

namespace gradkrig {

namespace {

// Piecewise quintic convolution kernel on [0,3], the unique C^2 member of the
// 6-point family that reproduces polynomials up to degree 4:
//   [0,1]: (-25 s^5 + 63 s^4 - 35 s^3 - 15 s^2 + 12) / 12
//   [1,2]: (s-2)(s-1)(25 s^3 - 114 s^2 + 153 s - 48) / 24
//   [2,3]: -(s-3)^3 (s-2)(5 s - 8) / 24
double quintic_piece(double s) {
  if (s < 1.0)
    return (((-25.0 * s + 63.0) * s - 35.0) * s * s * s - 15.0 * s * s + 12.0) / 12.0;
  if (s < 2.0)
    return (s - 2.0) * (s - 1.0) * ((25.0 * s - 114.0) * s * s + 153.0 * s - 48.0) / 24.0;
  if (s < 3.0) {
    const double t = s - 3.0;
    return -t * t * t * (s - 2.0) * (5.0 * s - 8.0) / 24.0;
  }
  return 0.0;
}

double quintic_piece_deriv(double s) {
  if (s < 1.0) return ((((-125.0 * s + 252.0) * s - 105.0) * s - 30.0) * s) / 12.0;
  if (s < 2.0)
    return ((((125.0 * s - 756.0) * s + 1635.0) * s - 1470.0) * s + 450.0) / 24.0;
  if (s < 3.0)
    return ((((-25.0 * s + 252.0) * s - 939.0) * s + 1530.0) * s - 918.0) / 24.0;
  return 0.0;
}

double quintic_kernel(double s) { return quintic_piece(std::abs(s)); }
double quintic_kernel_deriv(double s) {
  return s < 0.0 ? -quintic_piece_deriv(-s) : quintic_piece_deriv(s);
}

// Keys cubic convolution kernel, a = -1/2.
double cubic_kernel(double s) {
  const double a = std::abs(s);
  if (a < 1.0) return ((1.5 * a - 2.5) * a) * a + 1.0;
  if (a < 2.0) return ((-0.5 * a + 2.5) * a - 4.0) * a + 2.0;
  return 0.0;
}
double cubic_kernel_deriv(double s) {
  const double sg = s < 0.0 ? -1.0 : 1.0;
  const double a = std::abs(s);
  double v = 0.0;
  if (a < 1.0)
    v = (4.5 * a - 5.0) * a;
  else if (a < 2.0)
    v = (-1.5 * a + 5.0) * a - 4.0;
  return sg * v;
}

struct Axis1D {
  Eigen::Index base;           // lowest node index of the stencil
  std::array<double, 6> w{};   // value weights (first `count` entries used)
  std::array<double, 6> dw{};  // derivative weights, already divided by h
  int count = 6;
};

Axis1D axis_stencil(const Grid& grid, int axis, double x, InterpolationOrder order,
                    Eigen::Index point_index) {
  const double h = grid.spacing(axis);
  const double s = (x - grid.origin(axis)) / h;
  Eigen::Index cell = static_cast<Eigen::Index>(std::floor(s));
  double t = s - static_cast<double>(cell);
  Axis1D out;
  if (order == InterpolationOrder::Quintic) {
    const auto [w, dw] = quintic_weights(t);
    out.count = 6;
    out.base = cell - 2;
    for (int k = 0; k < 6; ++k) {
      out.w[k] = w[k];
      out.dw[k] = dw[k] / h;
    }
  } else {
    const auto [w, dw] = cubic_weights(t);
    out.count = 4;
    out.base = cell - 1;
    for (int k = 0; k < 4; ++k) {
      out.w[k] = w[k];
      out.dw[k] = dw[k] / h;
    }
  }
  if (out.base < 0 || out.base + out.count > grid.dims(axis)) {
    std::ostringstream msg;
    msg << "point " << point_index << " (coordinate " << x << " on axis " << axis
        << ") lies outside the interior of the grid";
    throw OutOfGridError(msg.str());
  }
  return out;
}

}  // namespace

Eigen::Index Grid::size() const {
  Eigen::Index m = 1;
  for (int j = 0; j < dim(); ++j) m *= dims(j);
  return m;
}

bool Grid::interior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) return false;
  for (int j = 0; j < dim(); ++j) {
    const double s = (x(j) - origin(j)) / spacing(j);
    const auto cell = static_cast<Eigen::Index>(std::floor(s));
    if (cell - 2 < 0 || cell + 3 >= dims(j)) return false;
  }
  return true;
}

Grid Grid::cover(const Eigen::Ref<const Eigen::MatrixXd>& X, double target_spacing,
                 int margin_cells, int max_nodes) {
  if (X.rows() == 0) throw std::invalid_argument("cannot build a grid over no points");
  if (!(target_spacing > 0.0))
    throw std::invalid_argument("grid spacing must be positive");
  const int d = static_cast<int>(X.cols());
  margin_cells = std::max(margin_cells, 3);

  Grid g;
  g.dims.resize(d);
  g.origin.resize(d);
  g.spacing.resize(d);
  for (int j = 0; j < d; ++j) {
    const double lo = X.col(j).minCoeff();
    const double hi = X.col(j).maxCoeff();
    const double span = std::max(hi - lo, 1e-12);
    double h = target_spacing;
    int interior = static_cast<int>(std::ceil(span / h)) + 1;
    int m = interior + 2 * margin_cells;
    if (m > max_nodes) {
      m = max_nodes;
      h = span / static_cast<double>(m - 1 - 2 * margin_cells);
    }
    if (m < 6 + 2 * margin_cells) m = 6 + 2 * margin_cells;
    g.dims(j) = m;
    g.spacing(j) = h;
    g.origin(j) = lo - margin_cells * h;
  }
  return g;
}

std::pair<std::array<double, 6>, std::array<double, 6>> quintic_weights(double t) {
  if (t < 0.0 || t >= 1.0)
    throw std::invalid_argument("fractional offset must lie in [0, 1)");
  std::array<double, 6> w, dw;
  for (int k = 0; k < 6; ++k) {
    const double arg = t - static_cast<double>(k - 2);  // nodes at {-2,...,3}
    w[k] = quintic_kernel(arg);
    dw[k] = quintic_kernel_deriv(arg);
  }
  return {w, dw};
}

std::pair<std::array<double, 4>, std::array<double, 4>> cubic_weights(double t) {
  if (t < 0.0 || t >= 1.0)
    throw std::invalid_argument("fractional offset must lie in [0, 1)");
  std::array<double, 4> w, dw;
  for (int k = 0; k < 4; ++k) {
    const double arg = t - static_cast<double>(k - 1);  // nodes at {-1,...,2}
    w[k] = cubic_kernel(arg);
    dw[k] = cubic_kernel_deriv(arg);
  }
  return {w, dw};
}

PointStencil point_stencil(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x,
                           InterpolationOrder order) {
  const int d = grid.dim();
  if (x.size() != d) throw std::invalid_argument("point dimension does not match grid");
  std::vector<Axis1D> axes;
  axes.reserve(d);
  for (int j = 0; j < d; ++j) axes.push_back(axis_stencil(grid, j, x(j), order, 0));

  Eigen::Index nnz = 1;
  for (const auto& a : axes) nnz *= a.count;

  PointStencil st;
  st.indices.resize(nnz);
  st.value.resize(nnz);
  st.derivative.resize(nnz, d);

  std::vector<int> idx(d, 0);
  for (Eigen::Index c = 0; c < nnz; ++c) {
    Eigen::Index flat = 0;
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      flat = flat * grid.dims(j) + (axes[j].base + idx[j]);
      w *= axes[j].w[idx[j]];
    }
    st.indices[c] = flat;
    st.value(c) = w;
    for (int p = 0; p < d; ++p) {
      double dw = 1.0;
      for (int j = 0; j < d; ++j)
        dw *= (j == p) ? axes[j].dw[idx[j]] : axes[j].w[idx[j]];
      st.derivative(c, p) = dw;
    }
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[j] < axes[j].count) break;
      idx[j] = 0;
    }
  }
  return st;
}

SparseInterpolation build_interpolation(const Grid& grid,
                                        const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        InterpolationOrder order) {
  const int d = grid.dim();
  if (X.cols() != d)
    throw std::invalid_argument("interpolation points do not match grid dimension");
  const Eigen::Index n = X.rows();
  const Eigen::Index m = grid.size();

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> tw;
  std::vector<std::vector<Triplet>> td(d);
  const Eigen::Index per_row =
      static_cast<Eigen::Index>(std::pow(order == InterpolationOrder::Quintic ? 6 : 4, d));
  tw.reserve(n * per_row);
  for (auto& t : td) t.reserve(n * per_row);

  std::vector<Axis1D> axes(d);
  std::vector<int> idx(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) axes[j] = axis_stencil(grid, j, X(i, j), order, i);
    std::fill(idx.begin(), idx.end(), 0);
    Eigen::Index nnz = 1;
    for (const auto& a : axes) nnz *= a.count;
    for (Eigen::Index c = 0; c < nnz; ++c) {
      Eigen::Index flat = 0;
      double w = 1.0;
      for (int j = 0; j < d; ++j) {
        flat = flat * grid.dims(j) + (axes[j].base + idx[j]);
        w *= axes[j].w[idx[j]];
      }
      tw.emplace_back(i, flat, w);
      for (int p = 0; p < d; ++p) {
        double dw = 1.0;
        for (int j = 0; j < d; ++j)
          dw *= (j == p) ? axes[j].dw[idx[j]] : axes[j].w[idx[j]];
        td[p].emplace_back(i, flat, dw);
      }
      for (int j = d - 1; j >= 0; --j) {
        if (++idx[j] < axes[j].count) break;
        idx[j] = 0;
      }
    }
  }

  SparseInterpolation out;
  out.W.resize(n, m);
  out.W.setFromTriplets(tw.begin(), tw.end());
  out.dW.resize(d);
  for (int p = 0; p < d; ++p) {
    out.dW[p].resize(n, m);
    out.dW[p].setFromTriplets(td[p].begin(), td[p].end());
  }
  return out;
}

}  // namespace gradkrig
