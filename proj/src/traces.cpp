#include "biharm/traces.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "biharm/error.hpp"
#include "biharm/finite_difference.hpp"

namespace biharm {

TraceSamples boundary_normal_traces(const GridDomain& grid, const ScalarField& u, int order,
                                    TraceRegion where) {
  if (order < 1 || order > 3) throw UnsupportedRank("trace order must be 1, 2 or 3");
  if (u.N() != grid.N()) throw DimensionMismatch("field does not match grid");
  TraceSamples out;
  out.nodes = where == TraceRegion::sigma ? grid.sigma_nodes() : grid.boundary_nodes();
  out.values.reserve(out.nodes.size());
  for (const auto& b : out.nodes) out.values.push_back(normal_derivative(grid, u, b, order));
  return out;
}

DnData dn_traces(const GridDomain& grid, const ScalarField& u) {
  DnData d;
  d.nodes = grid.sigma_nodes();
  for (const auto& b : d.nodes) {
    d.d2.push_back(normal_derivative_with_ghost(grid, u, b, 2));
    d.d3.push_back(normal_derivative_with_ghost(grid, u, b, 3));
  }
  return d;
}

double DnData::max_abs() const {
  double m = 0;
  for (auto v : d2) m = std::max(m, std::abs(v));
  for (auto v : d3) m = std::max(m, std::abs(v));
  return m;
}

namespace {

void check_same(const DnData& a, const DnData& b) {
  if (a.nodes.size() != b.nodes.size()) throw DimensionMismatch("DnData sample sets differ");
}

}  // namespace

DnData& DnData::operator+=(const DnData& o) {
  check_same(*this, o);
  for (std::size_t k = 0; k < d2.size(); ++k) {
    d2[k] += o.d2[k];
    d3[k] += o.d3[k];
  }
  return *this;
}

DnData& DnData::operator-=(const DnData& o) {
  check_same(*this, o);
  for (std::size_t k = 0; k < d2.size(); ++k) {
    d2[k] -= o.d2[k];
    d3[k] -= o.d3[k];
  }
  return *this;
}

DnData& DnData::operator*=(cplx s) {
  for (auto& v : d2) v *= s;
  for (auto& v : d3) v *= s;
  return *this;
}

void write_dn_csv(std::ostream& os, const DnData& d) {
  os << "edge,s,order,re,im\n";
  os.precision(17);
  for (std::size_t k = 0; k < d.nodes.size(); ++k) {
    const auto& b = d.nodes[k];
    os << edge_name(b.edge) << ',' << b.s << ",2," << d.d2[k].real() << ',' << d.d2[k].imag() << '\n';
    os << edge_name(b.edge) << ',' << b.s << ",3," << d.d3[k].real() << ',' << d.d3[k].imag() << '\n';
  }
}

DnData read_dn_csv(std::istream& is, const GridDomain& grid) {
  DnData d;
  d.nodes = grid.sigma_nodes();
  d.d2.assign(d.nodes.size(), 0.0);
  d.d3.assign(d.nodes.size(), 0.0);
  std::vector<int> seen(d.nodes.size(), 0);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty DnData CSV");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string edge, s, order, re, im;
    if (!std::getline(ss, edge, ',') || !std::getline(ss, s, ',') || !std::getline(ss, order, ',') ||
        !std::getline(ss, re, ',') || !std::getline(ss, im, ','))
      throw ConfigError("malformed DnData row: " + line);
    const Edge e = edge_from_name(edge);
    const double sv = std::stod(s);
    const int k = static_cast<int>(std::lround(sv / grid.spacing()));
    auto it = std::find_if(d.nodes.begin(), d.nodes.end(),
                           [&](const BoundaryNode& b) { return b.edge == e && b.k == k; });
    if (it == d.nodes.end()) throw ConfigError("DnData row outside Sigma: " + line);
    const auto idx = static_cast<std::size_t>(it - d.nodes.begin());
    const cplx v{std::stod(re), std::stod(im)};
    if (order == "2") d.d2[idx] = v, seen[idx] |= 1;
    else if (order == "3") d.d3[idx] = v, seen[idx] |= 2;
    else throw ConfigError("DnData order must be 2 or 3");
  }
  if (std::any_of(seen.begin(), seen.end(), [](int f) { return f != 3; }))
    throw ConfigError("DnData CSV does not cover every Sigma node");
  return d;
}

void write_field_csv(std::ostream& os, const GridDomain& grid, const ScalarField& u) {
  nlohmann::json header = {{"N", grid.N()}, {"domain", "unit_square"}, {"complex", true}};
  os << header.dump() << '\n';
  os.precision(17);
  for (int j = 0; j <= grid.N() + 1; ++j)
    for (int i = 0; i <= grid.N() + 1; ++i)
      os << i << ',' << j << ',' << u(i, j).real() << ',' << u(i, j).imag() << '\n';
}

ScalarField read_field_csv(std::istream& is, const GridDomain& grid) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty field CSV");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad field header: ") + e.what());
  }
  if (header.value("N", -1) != grid.N()) throw DimensionMismatch("field CSV grid size differs");
  ScalarField u(grid);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    int i, j;
    double re, im;
    char c1, c2, c3;
    std::stringstream ss(line);
    if (!(ss >> i >> c1 >> j >> c2 >> re >> c3 >> im)) throw ConfigError("malformed field row");
    if (i < 0 || j < 0 || i > grid.N() + 1 || j > grid.N() + 1) throw ConfigError("node out of range");
    u(i, j) = {re, im};
  }
  return u;
}

}  // namespace biharm
