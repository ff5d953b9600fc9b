#include "biharm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biharm/error.hpp"

namespace biharm {

const char* edge_name(Edge e) {
  switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
  }
  return "?";
}

Edge edge_from_name(const std::string& name) {
  for (Edge e : kEdges)
    if (name == edge_name(e)) return e;
  throw ConfigError("unknown edge '" + name + "'");
}

std::array<double, 2> outward_normal(Edge e) {
  switch (e) {
    case Edge::left: return {-1.0, 0.0};
    case Edge::right: return {1.0, 0.0};
    case Edge::bottom: return {0.0, -1.0};
    case Edge::top: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

GridDomain::GridDomain(int n_interior, std::vector<GammaSegment> gamma)
    : n_(n_interior), h_(1.0 / (n_interior + 1)), gamma_(std::move(gamma)) {
  if (n_ < 3) throw ConstraintError("grid needs at least 3 interior nodes per axis");
  for (const auto& g : gamma_)
    if (!(g.from >= 0.0 && g.to <= 1.0 && g.from <= g.to))
      throw ConstraintError("Gamma segment outside [0, 1]");
}

std::array<int, 2> GridDomain::edge_node(Edge e, int k) const {
  switch (e) {
    case Edge::left: return {0, k};
    case Edge::right: return {n_ + 1, k};
    case Edge::bottom: return {k, 0};
    case Edge::top: return {k, n_ + 1};
  }
  return {0, 0};
}

std::array<int, 2> GridDomain::inward_step(Edge e) const {
  switch (e) {
    case Edge::left: return {1, 0};
    case Edge::right: return {-1, 0};
    case Edge::bottom: return {0, 1};
    case Edge::top: return {0, -1};
  }
  return {0, 0};
}

bool GridDomain::is_corner(int i, int j) const {
  return (i == 0 || i == n_ + 1) && (j == 0 || j == n_ + 1);
}

bool GridDomain::in_gamma(Edge e, int k) const {
  auto [i, j] = edge_node(e, k);
  return distance_to_gamma(coord(i), coord(j)) < 1e-12;
}

std::array<double, 2> GridDomain::closest_gamma_point(double x, double y) const {
  if (gamma_.empty()) throw ConstraintError("Gamma is empty");
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 2> out{};
  for (const auto& g : gamma_) {
    double px, py, qx, qy;
    switch (g.edge) {
      case Edge::left: px = 0; qx = 0; py = g.from; qy = g.to; break;
      case Edge::right: px = 1; qx = 1; py = g.from; qy = g.to; break;
      case Edge::bottom: py = 0; qy = 0; px = g.from; qx = g.to; break;
      default: py = 1; qy = 1; px = g.from; qx = g.to; break;
    }
    const double cx = std::clamp(x, std::min(px, qx), std::max(px, qx));
    const double cy = std::clamp(y, std::min(py, qy), std::max(py, qy));
    const double d = std::hypot(x - cx, y - cy);
    if (d < best) {
      best = d;
      out = {cx, cy};
    }
  }
  return out;
}

double GridDomain::distance_to_gamma(double x, double y) const {
  if (gamma_.empty()) return std::numeric_limits<double>::infinity();
  auto c = closest_gamma_point(x, y);
  return std::hypot(x - c[0], y - c[1]);
}

std::vector<BoundaryNode> GridDomain::boundary_nodes() const {
  std::vector<BoundaryNode> out;
  for (Edge e : kEdges)
    for (int k = 1; k <= n_; ++k) {
      auto [i, j] = edge_node(e, k);
      out.push_back({e, k, i, j, coord(k)});
    }
  return out;
}

std::vector<BoundaryNode> GridDomain::sigma_nodes() const {
  std::vector<BoundaryNode> out;
  for (const auto& b : boundary_nodes())
    if (!in_gamma(b.edge, b.k)) out.push_back(b);
  return out;
}

std::vector<BoundaryNode> GridDomain::gamma_nodes() const {
  std::vector<BoundaryNode> out;
  for (Edge e : kEdges)
    for (int k = 0; k <= n_ + 1; ++k) {
      auto [i, j] = edge_node(e, k);
      if (in_gamma(e, k)) out.push_back({e, k, i, j, coord(k)});
    }
  return out;
}

ScalarField::ScalarField(const GridDomain& grid)
    : n_(grid.N()), data_(static_cast<std::size_t>((grid.N() + 4) * (grid.N() + 4))) {}

ScalarField ScalarField::sample(const GridDomain& grid,
                                const std::function<cplx(double, double)>& f) {
  ScalarField u(grid);
  for (int j = -1; j <= grid.N() + 2; ++j)
    for (int i = -1; i <= grid.N() + 2; ++i) u(i, j) = f(grid.coord(i), grid.coord(j));
  return u;
}

double ScalarField::max_abs() const {
  double m = 0;
  for (int j = 0; j <= n_ + 1; ++j)
    for (int i = 0; i <= n_ + 1; ++i) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

double ScalarField::max_abs_interior() const {
  double m = 0;
  for (int j = 1; j <= n_; ++j)
    for (int i = 1; i <= n_; ++i) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (o.n_ != n_) throw DimensionMismatch("field grids differ");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  if (o.n_ != n_) throw DimensionMismatch("field grids differ");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

BoundaryData::BoundaryData(const GridDomain& grid) : n_(grid.N()) {
  for (auto& v : f_) v.assign(static_cast<std::size_t>(n_ + 2), 0.0);
  for (auto& v : g_) v.assign(static_cast<std::size_t>(n_ + 2), 0.0);
}

BoundaryData BoundaryData::from_functions(
    const GridDomain& grid, const std::function<cplx(double, double)>& value,
    const std::function<cplx(double, double, Edge)>& normal_derivative) {
  BoundaryData d(grid);
  for (Edge e : kEdges)
    for (int k = 0; k <= grid.N() + 1; ++k) {
      auto [i, j] = grid.edge_node(e, k);
      const double x = grid.coord(i), y = grid.coord(j);
      d.f(e, k) = value(x, y);
      d.g(e, k) = normal_derivative(x, y, e);
    }
  return d;
}

BoundaryData BoundaryData::traces_of(
    const GridDomain& grid, const std::function<cplx(double, double)>& phi,
    const std::function<std::array<cplx, 2>(double, double)>& grad) {
  return from_functions(grid, phi, [&](double x, double y, Edge e) {
    auto nu = outward_normal(e);
    auto g = grad(x, y);
    return nu[0] * g[0] + nu[1] * g[1];
  });
}

cplx BoundaryData::value_at(const GridDomain& grid, int i, int j) const {
  const int last = grid.N() + 1;
  if (j == 0) return f(Edge::bottom, i);
  if (j == last) return f(Edge::top, i);
  if (i == 0) return f(Edge::left, j);
  if (i == last) return f(Edge::right, j);
  throw InternalError("value_at called on an interior node");
}

double BoundaryData::max_abs() const {
  double m = 0;
  for (int e = 0; e < 4; ++e) {
    for (auto v : f_[e]) m = std::max(m, std::abs(v));
    for (auto v : g_[e]) m = std::max(m, std::abs(v));
  }
  return m;
}

double BoundaryData::max_abs_on_gamma(const GridDomain& grid) const {
  double m = 0;
  for (const auto& b : grid.gamma_nodes())
    m = std::max({m, std::abs(f(b.edge, b.k)), std::abs(g(b.edge, b.k))});
  return m;
}

BoundaryData& BoundaryData::operator+=(const BoundaryData& o) {
  if (o.n_ != n_) throw DimensionMismatch("boundary data grids differ");
  for (int e = 0; e < 4; ++e)
    for (std::size_t k = 0; k < f_[e].size(); ++k) {
      f_[e][k] += o.f_[e][k];
      g_[e][k] += o.g_[e][k];
    }
  return *this;
}

BoundaryData& BoundaryData::operator*=(cplx s) {
  for (int e = 0; e < 4; ++e)
    for (std::size_t k = 0; k < f_[e].size(); ++k) {
      f_[e][k] *= s;
      g_[e][k] *= s;
    }
  return *this;
}

}  // namespace biharm
