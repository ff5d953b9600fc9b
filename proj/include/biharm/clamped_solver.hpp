#pragma once

#include <memory>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "biharm/grid.hpp"

namespace biharm {

/// 13-point discrete (-Delta)^2 at every interior node, read from the stored node and ghost
/// values of u. Boundary and ghost entries of the result are zero.
ScalarField apply_bilaplacian(const GridDomain& grid, const ScalarField& u);

/// (-Delta)^2 u = s in the square, (u, d_nu u) = (f, g) on the boundary. The normal
/// derivative enters through ghost elimination with the five-point one-sided relation
/// ghost = 4 h g - 10/3 u_0 + 6 u_1 - 2 u_2 + 1/3 u_3 along the inward normal (g outward).
/// Factored once (sparse LU); solve() is safe to call concurrently.
/// Outward normal derivative encoded by the ghost value next to a boundary node.
cplx ghost_normal_derivative(const GridDomain& grid, const ScalarField& u, const BoundaryNode& b);

class ClampedSolver {
public:
  explicit ClampedSolver(GridDomain grid);

  const GridDomain& grid() const { return grid_; }
  /// Interior system matrix after elimination, scaled to approximate (-Delta)^2.
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

  /// Solution with boundary nodes set to f and ghost nodes reconstructed from g.
  ScalarField solve(const ScalarField& source, const BoundaryData& data) const;
  ScalarField solve(const BoundaryData& data) const;

  /// Normwise backward error of u against the discrete system.
  double relative_residual(const ScalarField& u, const ScalarField& source) const;

private:
  int unknown(int i, int j) const { return (j - 1) * grid_.N() + (i - 1); }
  void fill_ghosts(ScalarField& u, const BoundaryData& data) const;

  GridDomain grid_;
  int n_unknowns_;
  Eigen::SparseMatrix<double> matrix_;
  std::shared_ptr<const Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

}  // namespace biharm
