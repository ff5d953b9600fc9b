#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace biharm {

using cplx = std::complex<double>;

enum class Edge { left = 0, right = 1, bottom = 2, top = 3 };

inline constexpr std::array<Edge, 4> kEdges = {Edge::left, Edge::right, Edge::bottom, Edge::top};

const char* edge_name(Edge e);
Edge edge_from_name(const std::string& name);

/// Outward unit normal of an edge of the unit square.
std::array<double, 2> outward_normal(Edge e);

/// Closed piece {s in [from, to]} of an edge, s the arclength coordinate (x on bottom/top,
/// y on left/right).
struct GammaSegment {
  Edge edge = Edge::left;
  double from = 0.0;
  double to = 1.0;
};

struct BoundaryNode {
  Edge edge;
  int k;       ///< index along the edge, 0..N+1
  int i, j;    ///< grid indices
  double s;    ///< arclength coordinate
};

/// Uniform grid on the unit square: nodes i, j in 0..N+1 with spacing 1/(N+1), plus one
/// ghost layer (indices -1 and N+2). Boundary split into the inaccessible part Gamma
/// (union of closed segments) and the accessible part Sigma.
class GridDomain {
public:
  explicit GridDomain(int n_interior, std::vector<GammaSegment> gamma = {{Edge::left, 0.0, 1.0}});

  int N() const { return n_; }
  int nodes_per_axis() const { return n_ + 2; }
  double spacing() const { return h_; }
  double coord(int i) const { return i * h_; }
  const std::vector<GammaSegment>& gamma() const { return gamma_; }

  std::array<int, 2> edge_node(Edge e, int k) const;
  /// One grid step from the boundary into the domain.
  std::array<int, 2> inward_step(Edge e) const;

  bool is_corner(int i, int j) const;
  bool in_gamma(Edge e, int k) const;
  /// Distance from (x, y) to Gamma.
  double distance_to_gamma(double x, double y) const;
  /// Point of Gamma nearest to (x, y).
  std::array<double, 2> closest_gamma_point(double x, double y) const;

  /// Non-corner boundary nodes outside Gamma.
  std::vector<BoundaryNode> sigma_nodes() const;
  /// Boundary nodes inside Gamma, corners included.
  std::vector<BoundaryNode> gamma_nodes() const;
  /// All non-corner boundary nodes.
  std::vector<BoundaryNode> boundary_nodes() const;

  friend bool operator==(const GridDomain& a, const GridDomain& b) { return a.n_ == b.n_; }

private:
  int n_;
  double h_;
  std::vector<GammaSegment> gamma_;
};

/// Complex node values on the full grid including the ghost layer.
class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(const GridDomain& grid);

  /// f(x, y) sampled at every node, ghosts included.
  static ScalarField sample(const GridDomain& grid, const std::function<cplx(double, double)>& f);

  int N() const { return n_; }
  int stride() const { return n_ + 4; }
  cplx& operator()(int i, int j) { return data_[index(i, j)]; }
  cplx operator()(int i, int j) const { return data_[index(i, j)]; }
  std::span<cplx> raw() { return data_; }
  std::span<const cplx> raw() const { return data_; }

  /// Max over physical nodes (boundary included, ghosts excluded).
  double max_abs() const;
  /// Max over interior nodes.
  double max_abs_interior() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(cplx s);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, cplx s) { return a *= s; }
  friend ScalarField operator*(cplx s, ScalarField a) { return a *= s; }

private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>((j + 1) * (n_ + 4) + (i + 1));
  }
  int n_ = 0;
  std::vector<cplx> data_;
};

/// Clamped boundary data (u, d_nu u) = (f, g) per edge, sampled at along-edge indices
/// 0..N+1. Corner values of f are read from the edge with the larger index.
class BoundaryData {
public:
  BoundaryData() = default;
  explicit BoundaryData(const GridDomain& grid);

  /// f = value(x, y); g = normal(x, y, edge).
  static BoundaryData from_functions(
      const GridDomain& grid, const std::function<cplx(double, double)>& value,
      const std::function<cplx(double, double, Edge)>& normal_derivative);
  /// Cauchy traces of a smooth function given with its gradient.
  static BoundaryData traces_of(const GridDomain& grid,
                                const std::function<cplx(double, double)>& phi,
                                const std::function<std::array<cplx, 2>(double, double)>& grad);

  int N() const { return n_; }
  cplx& f(Edge e, int k) { return f_[static_cast<int>(e)][static_cast<std::size_t>(k)]; }
  cplx f(Edge e, int k) const { return f_[static_cast<int>(e)][static_cast<std::size_t>(k)]; }
  cplx& g(Edge e, int k) { return g_[static_cast<int>(e)][static_cast<std::size_t>(k)]; }
  cplx g(Edge e, int k) const { return g_[static_cast<int>(e)][static_cast<std::size_t>(k)]; }
  /// Dirichlet value at boundary node (i, j).
  cplx value_at(const GridDomain& grid, int i, int j) const;

  double max_abs() const;
  /// max(|f|, |g|) over Gamma nodes.
  double max_abs_on_gamma(const GridDomain& grid) const;

  BoundaryData& operator+=(const BoundaryData& o);
  BoundaryData& operator*=(cplx s);
  friend BoundaryData operator+(BoundaryData a, const BoundaryData& b) { return a += b; }
  friend BoundaryData operator*(BoundaryData a, cplx s) { return a *= s; }
  friend BoundaryData operator*(cplx s, BoundaryData a) { return a *= s; }

private:
  int n_ = 0;
  std::array<std::vector<cplx>, 4> f_;
  std::array<std::vector<cplx>, 4> g_;
};

}  // namespace biharm
