#include "biharm/clamped_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "biharm/error.hpp"

namespace biharm {

namespace {

struct Tap {
  int di, dj;
  double c;
};

constexpr std::array<Tap, 13> kStencil = {{
    {0, 0, 20.0},
    {1, 0, -8.0}, {-1, 0, -8.0}, {0, 1, -8.0}, {0, -1, -8.0},
    {1, 1, 2.0}, {1, -1, 2.0}, {-1, 1, 2.0}, {-1, -1, 2.0},
    {2, 0, 1.0}, {-2, 0, 1.0}, {0, 2, 1.0}, {0, -2, 1.0},
}};

constexpr double kStencilAbsSum = 64.0;

// ghost = 4 h g + sum_m kGhost[m] u_m along the inward normal, m = 0..3; exact for quartics
constexpr std::array<double, 4> kGhost = {-10.0 / 3.0, 6.0, -2.0, 1.0 / 3.0};
constexpr double kGhostG = 4.0;

enum class NodeKind { interior, boundary, ghost };

NodeKind classify(int i, int j, int n) {
  if (i >= 1 && i <= n && j >= 1 && j <= n) return NodeKind::interior;
  if (i >= 0 && i <= n + 1 && j >= 0 && j <= n + 1) return NodeKind::boundary;
  return NodeKind::ghost;
}

// Ghost (gi, gj) next to a non-corner boundary node: the edge it hangs off, the
// along-edge index, the boundary node and the inward step.
struct GhostInfo {
  Edge edge;
  int k;
  int bi, bj;
  int di, dj;
};

GhostInfo ghost_info(int gi, int gj, int n) {
  if (gi == -1) return {Edge::left, gj, 0, gj, 1, 0};
  if (gi == n + 2) return {Edge::right, gj, n + 1, gj, -1, 0};
  if (gj == -1) return {Edge::bottom, gi, gi, 0, 0, 1};
  return {Edge::top, gi, gi, n + 1, 0, -1};
}

}  // namespace

ScalarField apply_bilaplacian(const GridDomain& grid, const ScalarField& u) {
  if (u.N() != grid.N()) throw DimensionMismatch("field does not match grid");
  ScalarField out(grid);
  const double h4 = std::pow(grid.spacing(), 4);
  for (int j = 1; j <= grid.N(); ++j)
    for (int i = 1; i <= grid.N(); ++i) {
      cplx s{};
      for (const auto& t : kStencil) s += t.c * u(i + t.di, j + t.dj);
      out(i, j) = s / h4;
    }
  return out;
}

cplx ghost_normal_derivative(const GridDomain& grid, const ScalarField& u, const BoundaryNode& b) {
  auto [di, dj] = grid.inward_step(b.edge);
  cplx v = u(b.i - di, b.j - dj);
  for (int m = 0; m <= 3; ++m) v -= kGhost[static_cast<std::size_t>(m)] * u(b.i + m * di, b.j + m * dj);
  return v / (kGhostG * grid.spacing());
}

ClampedSolver::ClampedSolver(GridDomain grid) : grid_(std::move(grid)) {
  const int n = grid_.N();
  if (n < 5) throw ConstraintError("clamped solver needs N >= 5");
  n_unknowns_ = n * n;

  const double h4 = std::pow(grid_.spacing(), 4);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(13 * n_unknowns_));
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      const int row = unknown(i, j);
      for (const auto& t : kStencil) {
        const int ti = i + t.di, tj = j + t.dj;
        switch (classify(ti, tj, n)) {
          case NodeKind::interior: trips.emplace_back(row, unknown(ti, tj), t.c / h4); break;
          case NodeKind::ghost: {
            auto g = ghost_info(ti, tj, n);
            for (int m = 1; m <= 3; ++m)
              trips.emplace_back(row, unknown(g.bi + m * g.di, g.bj + m * g.dj),
                                 t.c * kGhost[static_cast<std::size_t>(m)] / h4);
            break;
          }
          case NodeKind::boundary: break;
        }
      }
    }
  matrix_.resize(n_unknowns_, n_unknowns_);
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();

  auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu->compute(matrix_);
  if (lu->info() != Eigen::Success) throw SingularSystem("sparse LU failed: " + lu->lastErrorMessage());
  lu_ = std::move(lu);
}

void ClampedSolver::fill_ghosts(ScalarField& u, const BoundaryData& data) const {
  const int n = grid_.N();
  const double h = grid_.spacing();
  auto ghost = [&](int bi, int bj, int di, int dj, cplx g) {
    cplx v = kGhostG * h * g;
    for (int m = 0; m <= 3; ++m) v += kGhost[static_cast<std::size_t>(m)] * u(bi + m * di, bj + m * dj);
    return v;
  };
  for (Edge e : kEdges) {
    auto [di, dj] = grid_.inward_step(e);
    for (int k = 0; k <= n + 1; ++k) {
      auto [bi, bj] = grid_.edge_node(e, k);
      u(bi - di, bj - dj) = ghost(bi, bj, di, dj, data.g(e, k));
    }
  }
  // diagonal corner ghosts continue the side ghost columns
  for (int ci : {0, n + 1})
    for (int cj : {0, n + 1}) {
      const int gi = ci == 0 ? -1 : n + 2;
      const int dj = cj == 0 ? 1 : -1;
      const Edge e = cj == 0 ? Edge::bottom : Edge::top;
      u(gi, cj - dj) = ghost(gi, cj, 0, dj, data.g(e, ci));
    }
}

ScalarField ClampedSolver::solve(const ScalarField& source, const BoundaryData& data) const {
  const int n = grid_.N();
  if (source.N() != n || data.N() != n) throw DimensionMismatch("data does not match grid");
  const double h = grid_.spacing();
  const double h4 = std::pow(h, 4);
  const auto nu = static_cast<std::size_t>(n_unknowns_);
  std::vector<double> rhs(2 * nu);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      cplx b = h4 * source(i, j);
      for (const auto& t : kStencil) {
        const int ti = i + t.di, tj = j + t.dj;
        switch (classify(ti, tj, n)) {
          case NodeKind::interior: break;
          case NodeKind::boundary: b -= t.c * data.value_at(grid_, ti, tj); break;
          case NodeKind::ghost: {
            auto g = ghost_info(ti, tj, n);
            b -= t.c * (kGhostG * h * data.g(g.edge, g.k) + kGhost[0] * data.value_at(grid_, g.bi, g.bj));
            break;
          }
        }
      }
      const auto r = static_cast<std::size_t>(unknown(i, j));
      rhs[r] = b.real() / h4;
      rhs[nu + r] = b.imag() / h4;
    }
  const Eigen::MatrixXd sol = lu_->solve(Eigen::Map<const Eigen::MatrixXd>(rhs.data(), n_unknowns_, 2));
  if (lu_->info() != Eigen::Success) throw SingularSystem("sparse LU solve failed");
  rhs.assign(sol.data(), sol.data() + sol.size());

  ScalarField u(grid_);
  for (int j = 0; j <= n + 1; ++j)
    for (int i = 0; i <= n + 1; ++i) {
      if (classify(i, j, n) == NodeKind::interior) {
        const auto r = static_cast<std::size_t>(unknown(i, j));
        u(i, j) = {rhs[r], rhs[nu + r]};
      } else {
        u(i, j) = data.value_at(grid_, i, j);
      }
    }
  fill_ghosts(u, data);
  if (!u.all_finite()) throw SingularSystem("non-finite solution");
  const double res = relative_residual(u, source);
  if (!(res < 1e-10)) throw SingularSystem("clamped solve residual " + std::to_string(res));
  return u;
}

ScalarField ClampedSolver::solve(const BoundaryData& data) const {
  return solve(ScalarField(grid_), data);
}

double ClampedSolver::relative_residual(const ScalarField& u, const ScalarField& source) const {
  const auto lu = apply_bilaplacian(grid_, u);
  const double h4 = std::pow(grid_.spacing(), 4);
  double num = 0, den_u = 0, den_s = 0;
  for (int j = -1; j <= grid_.N() + 2; ++j)
    for (int i = -1; i <= grid_.N() + 2; ++i) den_u = std::max(den_u, std::abs(u(i, j)));
  for (int j = 1; j <= grid_.N(); ++j)
    for (int i = 1; i <= grid_.N(); ++i) {
      num = std::max(num, h4 * std::abs(lu(i, j) - source(i, j)));
      den_s = std::max(den_s, h4 * std::abs(source(i, j)));
    }
  const double den = kStencilAbsSum * den_u + den_s;
  return den == 0.0 ? 0.0 : num / den;
}

}  // namespace biharm
