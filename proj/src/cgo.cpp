#include "biharm/cgo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "biharm/error.hpp"
#include "biharm/finite_difference.hpp"
#include "biharm/parallel.hpp"

namespace biharm {

namespace {

constexpr cplx kI{0.0, 1.0};

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6 * t - 15) + 10);
}

double smoothstep_prime(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 30 * t * t * (t - 1) * (t - 1);
}

void require_plane(const NullVector& xi) {
  if (xi.dim() != 2) throw DimensionMismatch("grid computations need xi in C^2");
}

// Calls fn(alpha) for every full multi-index in [0, n)^rank.
template <class Fn>
void for_each_index(int n, int rank, Fn&& fn) {
  std::array<int, 4> idx{};
  const int total = static_cast<int>(std::pow(n, rank));
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    for (int p = rank - 1; p >= 0; --p) {
      idx[static_cast<std::size_t>(p)] = rem % n;
      rem /= n;
    }
    fn(std::span<const int>(idx.data(), static_cast<std::size_t>(rank)));
  }
}

// <A, e_l (.) xi^{k-1}> = sum A_{l i2..ik} xi_i2 .. xi_ik
cplx pair_with_direction(const SymTensor& a, int l, std::span<const cplx> xi) {
  const int k = a.rank();
  cplx s{};
  for_each_index(a.dim(), k - 1, [&](std::span<const int> rest) {
    std::array<int, 4> idx{};
    idx[0] = l;
    cplx w = 1.0;
    for (std::size_t q = 0; q < rest.size(); ++q) {
      idx[q + 1] = rest[q];
      w *= xi[static_cast<std::size_t>(rest[q])];
    }
    s += a.at(std::span<const int>(idx.data(), static_cast<std::size_t>(k))) * w;
  });
  return s;
}

std::vector<std::pair<double, double>> key_of(const NullVector& xi) {
  std::vector<std::pair<double, double>> k;
  for (auto v : xi.xi()) k.emplace_back(v.real(), v.imag());
  return k;
}

}  // namespace

Cutoff::Cutoff(const GridDomain& grid, double margin) : grid_(grid), margin_(margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw ConstraintError("cutoff margin must lie in (0, 1)");
  if (grid.gamma().empty()) throw ConstraintError("cutoff needs a nonempty Gamma");
}

Cutoff Cutoff::zero(const GridDomain& grid) {
  Cutoff c(grid, 0.5);
  c.zero_ = true;
  return c;
}

double Cutoff::value(double x, double y) const {
  if (zero_) return 0.0;
  const double d = grid_.distance_to_gamma(x, y);
  return smoothstep((margin_ - d) / (0.5 * margin_));
}

std::array<double, 2> Cutoff::gradient(double x, double y) const {
  if (zero_) return {0.0, 0.0};
  const auto c = grid_.closest_gamma_point(x, y);
  const double d = std::hypot(x - c[0], y - c[1]);
  const double dchi = smoothstep_prime((margin_ - d) / (0.5 * margin_)) * (-2.0 / margin_);
  if (dchi == 0.0 || d == 0.0) return {0.0, 0.0};
  return {dchi * (x - c[0]) / d, dchi * (y - c[1]) / d};
}

ScalarField Cutoff::field(const GridDomain& grid) const {
  return ScalarField::sample(grid, [this](double x, double y) { return cplx(value(x, y)); });
}

std::vector<BoundaryNode> Cutoff::support_on_boundary(const GridDomain& grid) const {
  std::vector<BoundaryNode> out;
  for (Edge e : kEdges)
    for (int k = 0; k <= grid.N() + 1; ++k) {
      auto [i, j] = grid.edge_node(e, k);
      if (value(grid.coord(i), grid.coord(j)) > 0.0) out.push_back({e, k, i, j, grid.coord(k)});
    }
  return out;
}

double Amplitude::value(double x, double y) const {
  if (kind == Kind::one) return 1.0;
  return l == 0 ? x : y;
}

std::array<double, 2> Amplitude::gradient() const {
  if (kind == Kind::one) return {0.0, 0.0};
  return l == 0 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
}

std::string Amplitude::tag() const {
  return kind == Kind::one ? "one" : "x" + std::to_string(l + 1);
}

cplx cgo_phase(const NullVector& xi, double h, double x, double y) {
  return std::exp(-kI * (x * xi.xi()[0] + y * xi.xi()[1]) / h);
}

CgoSolution build_cgo(const ClampedSolver& solver, const NullVector& xi, double h,
                      const Amplitude& amplitude, const Cutoff& chi) {
  require_plane(xi);
  if (!(h > 0.0)) throw ConstraintError("h must be positive");
  if (amplitude.kind == Amplitude::Kind::coordinate && (amplitude.l < 0 || amplitude.l > 1))
    throw ConstraintError("coordinate amplitude index out of range");
  const auto& grid = solver.grid();
  auto ae = [&](double x, double y) { return amplitude.value(x, y) * cgo_phase(xi, h, x, y); };
  auto grad_ae = [&](double x, double y) {
    const cplx e = cgo_phase(xi, h, x, y);
    const auto ga = amplitude.gradient();
    const double a = amplitude.value(x, y);
    return std::array<cplx, 2>{e * (ga[0] - kI * a * xi.xi()[0] / h),
                               e * (ga[1] - kI * a * xi.xi()[1] / h)};
  };
  BoundaryData data(grid);
  if (!chi.is_zero()) {
    data = BoundaryData::traces_of(
        grid, [&](double x, double y) { return -ae(x, y) * chi.value(x, y); },
        [&](double x, double y) {
          const auto g = grad_ae(x, y);
          const auto gc = chi.gradient(x, y);
          const double c = chi.value(x, y);
          const cplx v = ae(x, y);
          return std::array<cplx, 2>{-(g[0] * c + v * gc[0]), -(g[1] * c + v * gc[1])};
        });
  }
  ScalarField r = solver.solve(data);
  ScalarField u = ScalarField::sample(grid, ae) + r;
  return {xi, h, amplitude, std::move(r), std::move(u)};
}

GammaTraces gamma_traces(const GridDomain& grid, const CgoSolution& sol) {
  GammaTraces t;
  for (const auto& b : grid.gamma_nodes()) {
    const double x = grid.coord(b.i), y = grid.coord(b.j);
    const cplx e = cgo_phase(sol.xi, sol.h, x, y);
    const auto ga = sol.amplitude.gradient();
    const double a = sol.amplitude.value(x, y);
    const auto nu = outward_normal(b.edge);
    cplx dnu_ae{};
    for (int c = 0; c < 2; ++c)
      dnu_ae += nu[static_cast<std::size_t>(c)] *
                e * (ga[static_cast<std::size_t>(c)] - kI * a * sol.xi.xi()[static_cast<std::size_t>(c)] / sol.h);
    const cplx dnu_r = ghost_normal_derivative(grid, sol.r, b);
    t.max_u = std::max(t.max_u, std::abs(sol.u(b.i, b.j)));
    t.max_dnu = std::max(t.max_dnu, std::abs(dnu_ae + dnu_r));
  }
  return t;
}

GammaTraces gamma_traces_one_sided(const GridDomain& grid, const CgoSolution& sol) {
  GammaTraces t;
  for (const auto& b : grid.gamma_nodes()) {
    t.max_u = std::max(t.max_u, std::abs(sol.u(b.i, b.j)));
    t.max_dnu = std::max(t.max_dnu, std::abs(normal_derivative(grid, sol.u, b, 1)));
  }
  return t;
}

std::vector<double> default_h_list(const GridDomain& grid, const NullVector& xi) {
  const double floor = 4.0 * grid.spacing() * xi.norm();
  std::vector<double> out;
  for (int k = 0; k < 8; ++k) {
    const double h = 0.4 * std::pow(0.8, k);
    if (h >= floor) out.push_back(h);
  }
  return out;
}

DecayProfile remainder_decay_profile(const ClampedSolver& solver, const NullVector& xi,
                                     const Amplitude& amplitude, const Cutoff& chi,
                                     std::span<const double> h_list, double region_x1,
                                     int workers) {
  for (std::size_t k = 0; k + 1 < h_list.size(); ++k)
    if (!(h_list[k + 1] < h_list[k])) throw ConstraintError("h-list must be strictly decreasing");
  const auto& grid = solver.grid();
  DecayProfile p;
  p.rows.resize(h_list.size());
  parallel_for(h_list.size(), workers, [&](std::size_t k) {
    const double h = h_list[k];
    auto sol = build_cgo(solver, xi, h, amplitude, chi);
    double sup = 0;
    for (int j = 1; j <= grid.N(); ++j)
      for (int i = 1; i <= grid.N(); ++i) {
        const double x = grid.coord(i), y = grid.coord(j);
        if (x <= region_x1) continue;
        sup = std::max(sup, std::abs(sol.r(i, j) / cgo_phase(xi, h, x, y)));
      }
    p.rows[k] = {h, sup};
  });
  p.strictly_decreasing = true;
  for (std::size_t k = 0; k + 1 < p.rows.size(); ++k)
    if (!(p.rows[k + 1].sup < p.rows[k].sup)) p.strictly_decreasing = false;

  std::vector<double> xs, ys;
  for (const auto& r : p.rows)
    if (r.sup > 0.0) {
      xs.push_back(1.0 / r.h);
      ys.push_back(std::log(r.sup));
    }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxx += (xs[k] - mx) * (xs[k] - mx);
      sxy += (xs[k] - mx) * (ys[k] - my);
      syy += (ys[k] - my) * (ys[k] - my);
    }
    p.slope = sxy / sxx;
    p.intercept = my - p.slope * mx;
    p.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  }
  return p;
}

void certify_decay(const DecayProfile& p, double noise) {
  for (std::size_t k = 0; k + 1 < p.rows.size(); ++k)
    if (p.rows[k + 1].sup > p.rows[k].sup * (1.0 + noise))
      throw DecayViolation("remainder grows from h = " + std::to_string(p.rows[k].h) + " to h = " +
                           std::to_string(p.rows[k + 1].h) + "; grid too coarse for this h");
  if (p.rows.size() >= 2 && !(p.slope < 0.0))
    throw DecayViolation("fitted log-decay slope is not negative");
}

SymbolFit leading_symbol_fit(std::span<const double> h_list, std::span<const cplx> values,
                             int degree) {
  if (degree < 0 || degree > 3) throw ConstraintError("fit degree must be 0..3");
  if (h_list.size() != values.size()) throw DimensionMismatch("h-list and values differ in length");
  std::vector<double> distinct(h_list.begin(), h_list.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < degree + 1)
    throw ConstraintError("need at least degree + 1 distinct h values");
  const auto rows = static_cast<Eigen::Index>(h_list.size());
  const Eigen::Index cols = degree + 1;
  Eigen::MatrixXd v(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      v(r, c) = std::pow(1.0 / h_list[static_cast<std::size_t>(r)], static_cast<double>(c));
  Eigen::VectorXd scale = v.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < cols; ++c) v.col(c) /= scale(c);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  SymbolFit fit;
  fit.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(fit.condition <= 1e12))
    throw IllConditionedFit("Vandermonde condition " + std::to_string(fit.condition) +
                            " exceeds 1e12; widen the h spread");
  Eigen::VectorXcd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) b(r) = values[static_cast<std::size_t>(r)];
  Eigen::VectorXcd c = svd.solve(b.real()).cast<cplx>() + kI * svd.solve(b.imag()).cast<cplx>();
  fit.coeffs.resize(static_cast<std::size_t>(cols));
  for (Eigen::Index k = 0; k < cols; ++k) fit.coeffs[static_cast<std::size_t>(k)] = c(k) / scale(k);
  const Eigen::VectorXcd res = v.cast<cplx>() * c - b;
  const double bmax = b.cwiseAbs().maxCoeff();
  fit.residual = bmax > 0 ? res.cwiseAbs().maxCoeff() / bmax : res.cwiseAbs().maxCoeff();
  return fit;
}

cplx sharp_on_oscillation(const PointCoefficients& a, const NullVector& xi, double h,
                          const Amplitude& amplitude, double x, double y) {
  require_plane(xi);
  const auto z = xi.xi();
  const double av = amplitude.value(x, y);
  const auto ga = amplitude.gradient();
  cplx total = a[0][0] * av;
  for (int l = 1; l <= 3; ++l) {
    if (a[static_cast<std::size_t>(l)].rank() != l || a[static_cast<std::size_t>(l)].dim() != 2)
      throw DimensionMismatch("point coefficient slot l must hold a rank-l tensor in n = 2");
    for_each_index(2, l, [&](std::span<const int> alpha) {
      // D^alpha (a E) / E for affine a
      cplx prod = 1.0;
      for (int q : alpha) prod *= -z[static_cast<std::size_t>(q)] / h;
      cplx term = av * prod;
      for (std::size_t s = 0; s < alpha.size(); ++s) {
        const double da = ga[static_cast<std::size_t>(alpha[s])];
        if (da == 0.0) continue;
        cplx rest = 1.0;
        for (std::size_t t = 0; t < alpha.size(); ++t)
          if (t != s) rest *= -z[static_cast<std::size_t>(alpha[t])] / h;
        term += -kI * da * rest;
      }
      total += a[static_cast<std::size_t>(l)].at(alpha) * term;
    });
  }
  return total;
}

namespace {

cplx sharp_on_field(const PointCoefficients& a, const FieldDerivatives& d, int i, int j) {
  cplx total = a[0][0] * d(0, 0, i, j);
  cplx mi = 1.0;
  for (int l = 1; l <= 3; ++l) {
    mi *= -kI;
    for_each_index(2, l, [&](std::span<const int> alpha) {
      total += a[static_cast<std::size_t>(l)].at(alpha) * mi * d.partial(alpha, i, j);
    });
  }
  return total;
}

}  // namespace

ProbeExtraction local_symbol_extraction(const PointCoefficients& a, const NullVector& xi,
                                        const Amplitude& amplitude,
                                        const ExtractionOptions& opt,
                                        const ClampedSolver& solver) {
  require_plane(xi);
  const auto& grid = solver.grid();
  const int i0 = static_cast<int>(std::lround(opt.x0[0] / grid.spacing()));
  const int j0 = static_cast<int>(std::lround(opt.x0[1] / grid.spacing()));
  if (i0 < 1 || i0 > grid.N() || j0 < 1 || j0 > grid.N())
    throw ConstraintError("probe point must be an interior node");
  const double x = grid.coord(i0), y = grid.coord(j0);
  if (grid.distance_to_gamma(x, y) <= opt.margin)
    throw ConstraintError("probe point lies inside the cutoff margin");
  ProbeExtraction out;
  out.h_list = opt.h_list.empty() ? default_h_list(grid, xi) : opt.h_list;
  out.values.resize(out.h_list.size());
  const Cutoff chi(grid, opt.margin);
  parallel_for(out.h_list.size(), opt.workers, [&](std::size_t k) {
    const double h = out.h_list[k];
    cplx p = sharp_on_oscillation(a, xi, h, amplitude, x, y);
    if (opt.include_remainder) {
      auto sol = build_cgo(solver, xi, h, amplitude, chi);
      FieldDerivatives d(grid, sol.r);
      p += sharp_on_field(a, d, i0, j0) / cgo_phase(xi, h, x, y);
    }
    out.values[k] = p;
  });
  out.fit = leading_symbol_fit(out.h_list, out.values, 3);
  return out;
}

CascadeResult local_cascade(const PointCoefficients& a, const ExtractionOptions& opt,
                            const ClampedSolver& solver) {
  const auto& grid = solver.grid();
  const int i0 = static_cast<int>(std::lround(opt.x0[0] / grid.spacing()));
  const int j0 = static_cast<int>(std::lround(opt.x0[1] / grid.spacing()));
  const std::array<double, 2> x0 = {grid.coord(i0), grid.coord(j0)};
  CascadeResult res;

  std::map<std::vector<std::pair<double, double>>, std::vector<cplx>> pass1;
  auto first = [&](const NullVector& xi) -> const std::vector<cplx>& {
    auto key = key_of(xi);
    auto it = pass1.find(key);
    if (it != pass1.end()) return it->second;
    auto e = local_symbol_extraction(a, xi, Amplitude::one(), opt, solver);
    res.max_condition = std::max(res.max_condition, e.fit.condition);
    res.max_fit_residual = std::max(res.max_fit_residual, e.fit.residual);
    ++res.probes_used;
    return pass1.emplace(std::move(key), std::move(e.fit.coeffs)).first->second;
  };

  // rounding in the fitted pairings scales with the coefficients, not with the pairings
  double scale = 0.0;
  for (const auto& t : a) scale = std::max(scale, t.max_abs());
  const double floor = 1e-9 * 8.0 * scale + 1e-13;

  // c_l = (-1)^l <A^{(l)}, xi^l>, c_0 = A^{(0)}
  res.tf3 = recover_tracefree3([&](const NullVector& xi) { return -first(xi)[3]; }, 2, floor);
  res.tf2 = recover_tracefree2([&](const NullVector& xi) { return first(xi)[2]; }, 2, floor);
  res.a1 = recover_vector([&](const NullVector& xi) { return -first(xi)[1]; }, 2, floor);
  cplx a0_sum{};
  for (const auto& [key, c] : pass1) a0_sum += c[0];
  res.a0 = SymTensor::scalar(2, a0_sum / static_cast<double>(pass1.size()));

  // second pass, amplitude x_l with l the dominant component of xi
  struct Second {
    cplx dir_a1;  // <a1, xi>
    cplx a0;
  };
  std::map<std::vector<std::pair<double, double>>, Second> pass2;
  auto second = [&](const NullVector& xi) -> const Second& {
    auto key = key_of(xi);
    auto it = pass2.find(key);
    if (it != pass2.end()) return it->second;
    const auto z = xi.xi();
    const int l = std::abs(z[1]) > std::abs(z[0]) ? 1 : 0;
    const auto& c = first(xi);
    auto e = local_symbol_extraction(a, xi, Amplitude::coordinate(l), opt, solver);
    res.max_condition = std::max(res.max_condition, e.fit.condition);
    res.max_fit_residual = std::max(res.max_fit_residual, e.fit.residual);
    ++res.probes_used;
    std::array<cplx, 4> q{};
    for (std::size_t k = 0; k < 4; ++k) q[k] = e.fit.coeffs[k] - x0[static_cast<std::size_t>(l)] * c[k];
    // q1 = 2i <A2, e_l xi>, q2 = -3i <A3, e_l xi xi>; the isotropic parts give
    // 2i a0 xi_l and -2i xi_l <a1, xi>
    const cplx r1 = q[1] - 2.0 * kI * pair_with_direction(res.tf2, l, z);
    const cplx r2 = q[2] + 3.0 * kI * pair_with_direction(res.tf3, l, z);
    const cplx zl = z[static_cast<std::size_t>(l)];
    Second s{r2 / (-2.0 * kI * zl), r1 / (2.0 * kI * zl)};
    return pass2.emplace(std::move(key), s).first->second;
  };
  res.iso1 = recover_vector([&](const NullVector& xi) { return second(xi).dir_a1; }, 2, floor);
  cplx iso0_sum{};
  for (const auto& [key, s] : pass2) iso0_sum += s.a0;
  res.iso0 = SymTensor::scalar(2, iso0_sum / static_cast<double>(pass2.size()));

  res.a3 = res.tf3 + i_delta(res.iso1);
  res.a2 = res.tf2 + SymTensor::kronecker(2) * res.iso0[0];
  return res;
}

}  // namespace biharm
