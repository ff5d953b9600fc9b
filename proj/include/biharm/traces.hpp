#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "biharm/grid.hpp"

namespace biharm {

enum class TraceRegion { sigma, boundary };

struct TraceSamples {
  std::vector<BoundaryNode> nodes;
  std::vector<cplx> values;
};

/// d_nu^order u at the requested non-corner boundary nodes, one-sided into the interior.
TraceSamples boundary_normal_traces(const GridDomain& grid, const ScalarField& u, int order,
                                    TraceRegion where = TraceRegion::sigma);

/// (d_nu^2 u, d_nu^3 u) on Sigma.
struct DnData {
  std::vector<BoundaryNode> nodes;
  std::vector<cplx> d2;
  std::vector<cplx> d3;

  double max_abs() const;
  DnData& operator+=(const DnData& o);
  DnData& operator-=(const DnData& o);
  DnData& operator*=(cplx s);
  friend DnData operator+(DnData a, const DnData& b) { return a += b; }
  friend DnData operator-(DnData a, const DnData& b) { return a -= b; }
  friend DnData operator*(DnData a, cplx s) { return a *= s; }
  friend DnData operator*(cplx s, DnData a) { return a *= s; }
};

/// Ghost-inclusive 7-point normal stencils.
DnData dn_traces(const GridDomain& grid, const ScalarField& u);

/// Columns edge,s,order,re,im; one row per node and order.
void write_dn_csv(std::ostream& os, const DnData& d);
DnData read_dn_csv(std::istream& is, const GridDomain& grid);

/// First line a JSON header {"N", "domain", "complex"}, then i,j,re,im per physical node.
void write_field_csv(std::ostream& os, const GridDomain& grid, const ScalarField& u);
ScalarField read_field_csv(std::istream& is, const GridDomain& grid);

}  // namespace biharm
