#pragma once

#include <array>
#include <span>
#include <vector>

#include "biharm/grid.hpp"

namespace biharm {

/// Fornberg weights: w[k][j] approximates d^k/dx^k at x0 from samples at nodes[j],
/// for k = 0..max_order.
std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> nodes,
                                                  int max_order);

/// 1D stencil on nodes 0..M-1 (unit spacing): centered where it fits, one-sided with
/// k+2 points otherwise. Second-order accurate for k = 1, 2, 3.
struct Stencil1D {
  int start = 0;
  std::vector<double> weights;
};

class DerivativeTable {
public:
  DerivativeTable(int nodes, double spacing);
  const Stencil1D& at(int order, int node) const { return table_[order][node]; }
  int nodes() const { return nodes_; }

private:
  int nodes_;
  std::array<std::vector<Stencil1D>, 4> table_;
};

/// Partial derivatives d_x^px d_y^py, px + py <= 3, of a field at every physical node.
/// Index order: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) (3,0) (2,1) (1,2) (0,3).
class FieldDerivatives {
public:
  FieldDerivatives(const GridDomain& grid, const ScalarField& u, int max_order = 3);

  static int slot(int px, int py);
  cplx operator()(int px, int py, int i, int j) const {
    return d_[static_cast<std::size_t>(slot(px, py))][static_cast<std::size_t>(j * m_ + i)];
  }
  /// d^{alpha} where alpha is a sorted multi-index over {0, 1} (its 0s count x-derivatives).
  cplx partial(std::span<const int> alpha, int i, int j) const;

private:
  int m_;
  int max_order_;
  std::array<std::vector<cplx>, 10> d_;
};

/// d_nu^k u at a boundary node, one-sided along the inward normal with k+2 points.
cplx normal_derivative(const GridDomain& grid, const ScalarField& u, const BoundaryNode& b, int k);

/// d_nu^k u from the ghost value, the boundary node and five interior nodes (7 points).
cplx normal_derivative_with_ghost(const GridDomain& grid, const ScalarField& u, const BoundaryNode& b,
                                  int k);

}  // namespace biharm
