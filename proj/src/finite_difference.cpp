#include "biharm/finite_difference.hpp"

#include <cmath>

#include "biharm/error.hpp"

namespace biharm {

std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> nodes,
                                                  int max_order) {
  const int n = static_cast<int>(nodes.size());
  if (n <= max_order) throw ConstraintError("not enough nodes for derivative order");
  std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order + 1),
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  double c1 = 1.0, c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

DerivativeTable::DerivativeTable(int nodes, double spacing) : nodes_(nodes) {
  if (nodes < 5) throw ConstraintError("derivative table needs at least 5 nodes");
  for (int k = 0; k <= 3; ++k) {
    auto& row = table_[static_cast<std::size_t>(k)];
    row.resize(static_cast<std::size_t>(nodes));
    const int w = k <= 2 ? 1 : 2;
    for (int p = 0; p < nodes; ++p) {
      Stencil1D st;
      int count;
      if (k == 0) {
        st.start = p;
        st.weights = {1.0};
        row[static_cast<std::size_t>(p)] = st;
        continue;
      }
      if (p - w >= 0 && p + w <= nodes - 1) {
        st.start = p - w;
        count = 2 * w + 1;
      } else if (p - w < 0) {
        st.start = 0;
        count = k + 2;
      } else {
        st.start = nodes - (k + 2);
        count = k + 2;
      }
      std::vector<double> xs(static_cast<std::size_t>(count));
      for (int q = 0; q < count; ++q) xs[static_cast<std::size_t>(q)] = st.start + q;
      auto wts = fornberg_weights(p, xs, k)[static_cast<std::size_t>(k)];
      const double scale = std::pow(spacing, -k);
      for (auto& v : wts) v *= scale;
      st.weights = std::move(wts);
      row[static_cast<std::size_t>(p)] = std::move(st);
    }
  }
}

int FieldDerivatives::slot(int px, int py) {
  static constexpr int base[4] = {0, 1, 3, 6};
  const int o = px + py;
  if (px < 0 || py < 0 || o > 3) throw InternalError("derivative order out of range");
  return base[o] + py;
}

FieldDerivatives::FieldDerivatives(const GridDomain& grid, const ScalarField& u, int max_order)
    : m_(grid.nodes_per_axis()), max_order_(max_order) {
  if (u.N() != grid.N()) throw DimensionMismatch("field does not match grid");
  if (max_order < 0 || max_order > 3) throw UnsupportedRank("derivative order above 3");
  const DerivativeTable tab(m_, grid.spacing());
  const auto mm = static_cast<std::size_t>(m_ * m_);
  // x-derivatives first, then y-derivatives of those
  std::array<std::vector<cplx>, 4> dx;
  for (int px = 0; px <= max_order; ++px) {
    auto& out = dx[static_cast<std::size_t>(px)];
    out.assign(mm, 0.0);
    for (int j = 0; j < m_; ++j)
      for (int i = 0; i < m_; ++i) {
        const auto& st = tab.at(px, i);
        cplx s{};
        for (std::size_t q = 0; q < st.weights.size(); ++q)
          s += st.weights[q] * u(st.start + static_cast<int>(q), j);
        out[static_cast<std::size_t>(j * m_ + i)] = s;
      }
  }
  for (int px = 0; px <= max_order; ++px)
    for (int py = 0; px + py <= max_order; ++py) {
      auto& out = d_[static_cast<std::size_t>(slot(px, py))];
      const auto& src = dx[static_cast<std::size_t>(px)];
      out.assign(mm, 0.0);
      for (int j = 0; j < m_; ++j) {
        const auto& st = tab.at(py, j);
        for (int i = 0; i < m_; ++i) {
          cplx s{};
          for (std::size_t q = 0; q < st.weights.size(); ++q)
            s += st.weights[q] * src[static_cast<std::size_t>((st.start + static_cast<int>(q)) * m_ + i)];
          out[static_cast<std::size_t>(j * m_ + i)] = s;
        }
      }
    }
}

cplx FieldDerivatives::partial(std::span<const int> alpha, int i, int j) const {
  int px = 0, py = 0;
  for (int a : alpha) {
    if (a == 0) ++px;
    else if (a == 1) ++py;
    else throw DimensionMismatch("grid fields are two-dimensional");
  }
  if (px + py > max_order_) throw UnsupportedRank("derivative order not computed");
  return (*this)(px, py, i, j);
}

cplx normal_derivative(const GridDomain& grid, const ScalarField& u, const BoundaryNode& b, int k) {
  if (k < 0 || k > 3) throw UnsupportedRank("normal derivative order must be 0..3");
  if (k + 1 > grid.N() + 1) throw ConstraintError("normal stencil exits the grid");
  std::vector<double> xs(static_cast<std::size_t>(k + 2));
  for (int q = 0; q < k + 2; ++q) xs[static_cast<std::size_t>(q)] = q;
  const auto w = fornberg_weights(0.0, xs, k)[static_cast<std::size_t>(k)];
  auto [di, dj] = grid.inward_step(b.edge);
  cplx s{};
  for (int q = 0; q < k + 2; ++q) s += w[static_cast<std::size_t>(q)] * u(b.i + q * di, b.j + q * dj);
  // d/dnu = -d/ds along the inward direction
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * s / std::pow(grid.spacing(), k);
}

cplx normal_derivative_with_ghost(const GridDomain& grid, const ScalarField& u, const BoundaryNode& b,
                                  int k) {
  if (k < 0 || k > 3) throw UnsupportedRank("normal derivative order must be 0..3");
  if (grid.N() < 5) throw ConstraintError("normal stencil exits the grid");
  static const auto w = [] {
    std::vector<double> xs = {-1, 0, 1, 2, 3, 4, 5};
    return fornberg_weights(0.0, xs, 3);
  }();
  auto [di, dj] = grid.inward_step(b.edge);
  cplx s{};
  for (int q = -1; q <= 5; ++q)
    s += w[static_cast<std::size_t>(k)][static_cast<std::size_t>(q + 1)] * u(b.i + q * di, b.j + q * dj);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * s / std::pow(grid.spacing(), k);
}

}  // namespace biharm
