#include "biharm/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <Eigen/Dense>

#include "biharm/error.hpp"
#include "biharm/parallel.hpp"

namespace biharm {

namespace {

double trapezoid_weight(int i, int n) { return (i == 0 || i == n + 1) ? 0.5 : 1.0; }

double quintic_step(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

bool has_terms(const FieldSpec& f) {
  if (f.dim() == 0) return false;
  const std::size_t slots = index_table(f.dim(), f.rank()).size();
  for (std::size_t q = 0; q < slots; ++q)
    if (!f.terms(q).empty()) return true;
  return false;
}

nlohmann::json cplx_json(cplx c) { return nlohmann::json::array({c.real(), c.imag()}); }

struct Member {
  const ScalarField* v;
  const FieldDerivatives* d;
};

// sum_l sum_j <W_l, D v_j> prod_{r != j} v_r at every physical node; members are v_1..v_m
ScalarField symmetric_source(const GridDomain& grid, const SampledW& w, const std::vector<Member>& vs) {
  ScalarField out(grid);
  const std::size_t m = vs.size();
  for (int j = 0; j <= grid.N() + 1; ++j)
    for (int i = 0; i <= grid.N() + 1; ++i) {
      cplx total{};
      for (std::size_t l = 0; l < 4; ++l)
        for (const auto& f : w.fields[l]) {
          const SymTensor& a = f.at(i, j);
          for (std::size_t k = 0; k < m; ++k) {
            cplx t = contract_derivatives(a, *vs[k].d, i, j);
            for (std::size_t r = 0; r < m; ++r)
              if (r != k) t *= (*vs[r].v)(i, j);
            total += t;
          }
        }
      out(i, j) = total;
    }
  return out;
}

cplx integrate_product(const GridDomain& grid, const ScalarField& a, const ScalarField& b) {
  const double h = grid.spacing();
  cplx s{};
  for (int j = 0; j <= grid.N() + 1; ++j)
    for (int i = 0; i <= grid.N() + 1; ++i)
      s += trapezoid_weight(i, grid.N()) * trapezoid_weight(j, grid.N()) * a(i, j) * b(i, j);
  return s * h * h;
}

double gamma_trace_size(const GridDomain& grid, const ScalarField& v) {
  double m = 0;
  for (const auto& b : grid.gamma_nodes()) {
    m = std::max(m, std::abs(v(b.i, b.j)));
    m = std::max(m, std::abs(ghost_normal_derivative(grid, v, b)));
  }
  return m;
}

std::string monomial_label(int a, int b) {
  std::string s;
  if (a > 0) s += "*x" + (a > 1 ? "^" + std::to_string(a) : std::string());
  if (b > 0) s += "*y" + (b > 1 ? "^" + std::to_string(b) : std::string());
  return s;
}

}  // namespace

BoundaryData cauchy_data_of(const GridDomain& grid, const ScalarField& u) {
  BoundaryData d(grid);
  for (Edge e : kEdges)
    for (int k = 0; k <= grid.N() + 1; ++k) {
      auto [i, j] = grid.edge_node(e, k);
      d.f(e, k) = u(i, j);
      d.g(e, k) = ghost_normal_derivative(grid, u, {e, k, i, j, grid.coord(k)});
    }
  return d;
}

const char* kind_name(TestFunctionKind k) {
  switch (k) {
    case TestFunctionKind::cgo: return "cgo";
    case TestFunctionKind::polynomial: return "polynomial";
    case TestFunctionKind::random_boundary_data: return "random-boundary-data";
  }
  return "?";
}

TestFunctionSet::TestFunctionSet(const GridDomain& grid, double tol) : grid_(grid), tol_(tol) {}

void TestFunctionSet::add(ScalarField v, TestFunctionKind kind, std::string tag) {
  if (v.N() != grid_.N()) throw DimensionMismatch("test function does not match grid");
  const double scale = std::max(1.0, v.max_abs());
  const double h4 = std::pow(grid_.spacing(), 4);
  const auto lap2 = apply_bilaplacian(grid_, v);
  const double res = lap2.max_abs_interior() * h4 / (64.0 * scale);
  if (!(res < tol_))
    throw InvalidTestFunction("test function " + tag + " is not biharmonic (residual " +
                              std::to_string(res) + ")");
  const double gt = gamma_trace_size(grid_, v);
  if (!(gt < tol_ * scale))
    throw InvalidTestFunction("test function " + tag + " has Gamma traces " + std::to_string(gt));
  auto data = cauchy_data_of(grid_, v);
  derivs_.push_back(std::make_shared<const FieldDerivatives>(grid_, v, 3));
  members_.push_back({std::move(v), std::move(data), kind, std::move(tag)});
}

void TestFunctionSet::add_from_data(const ClampedSolver& solver, const BoundaryData& data,
                                    TestFunctionKind kind, std::string tag) {
  if (!(solver.grid() == grid_)) throw DimensionMismatch("solver grid differs from test set grid");
  if (data.max_abs_on_gamma(grid_) > 0.0)
    throw InvalidTestFunction("test function data must vanish on Gamma");
  add(solver.solve(data), kind, std::move(tag));
}

void TestFunctionSet::add_cgo(const ClampedSolver& solver, const CgoSolution& cgo) {
  BoundaryData d = cauchy_data_of(grid_, cgo.u);
  for (Edge e : kEdges)
    for (int k = 0; k <= grid_.N() + 1; ++k)
      if (grid_.in_gamma(e, k)) d.f(e, k) = d.g(e, k) = 0.0;
  const auto xi = cgo.xi.xi();
  std::string tag = "cgo h=" + std::to_string(cgo.h) + " a=" + cgo.amplitude.tag() + " xi=(" +
                    std::to_string(xi[0].real()) + "+" + std::to_string(xi[0].imag()) + "i, " +
                    std::to_string(xi[1].real()) + "+" + std::to_string(xi[1].imag()) + "i)";
  add_from_data(solver, d, TestFunctionKind::cgo, std::move(tag));
}

TestFunctionSet TestFunctionSet::random(const ClampedSolver& solver, int count, std::uint64_t seed,
                                        int modes, double clearance) {
  if (count < 1 || modes < 1) throw ConstraintError("test set needs count >= 1 and modes >= 1");
  if (!(clearance > 0.0)) throw ConstraintError("clearance must be positive");
  const GridDomain& grid = solver.grid();
  TestFunctionSet set(grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int t = 0; t < count; ++t) {
    BoundaryData d(grid);
    for (Edge e : kEdges) {
      std::vector<double> cf(static_cast<std::size_t>(4 * modes + 2));
      for (auto& c : cf) c = normal(rng);
      for (int k = 0; k <= grid.N() + 1; ++k) {
        if (grid.in_gamma(e, k)) continue;
        auto [i, j] = grid.edge_node(e, k);
        const double s = grid.coord(k);
        const double w = std::pow(4.0 * s * (1.0 - s), 4) *
                         quintic_step(grid.distance_to_gamma(grid.coord(i), grid.coord(j)) / clearance);
        double f = cf[0], g = cf[1];
        for (int q = 1; q <= modes; ++q) {
          const auto b = static_cast<std::size_t>(4 * q - 2);
          f += cf[b] * std::cos(q * M_PI * s) + cf[b + 1] * std::sin(q * M_PI * s);
          g += cf[b + 2] * std::cos(q * M_PI * s) + cf[b + 3] * std::sin(q * M_PI * s);
        }
        d.f(e, k) = w * f;
        d.g(e, k) = w * g;
      }
    }
    const double amp = d.max_abs();
    if (amp > 0.0) d *= cplx(1.0 / amp);
    set.add_from_data(solver, d, TestFunctionKind::random_boundary_data,
                      "random seed=" + std::to_string(seed) + " #" + std::to_string(t));
  }
  return set;
}

CoefficientModel WDifference::as_model() const {
  CoefficientModel m;
  for (int l = 0; l <= 3; ++l)
    if (has_terms(by_l[static_cast<std::size_t>(l)])) m.add(l, order, by_l[static_cast<std::size_t>(l)]);
  return m;
}

SampledW SampledW::sample(const GridDomain& grid, const WDifference& w) {
  SampledW s;
  for (std::size_t l = 0; l < 4; ++l)
    if (has_terms(w.by_l[l])) s.fields[l].push_back(TensorField::sample(grid, w.by_l[l]));
  return s;
}

cplx volume_functional(const GridDomain& grid, const WDifference& w, const std::vector<ScalarField>& v) {
  if (v.size() < 2) throw ConstraintError("volume functional needs v_0 and at least one v_j");
  const auto sw = SampledW::sample(grid, w);
  std::vector<FieldDerivatives> d;
  d.reserve(v.size());
  for (const auto& f : v) d.emplace_back(grid, f, 3);
  std::vector<Member> vs;
  for (std::size_t k = 1; k < v.size(); ++k) vs.push_back({&v[k], &d[k]});
  return integrate_product(grid, symmetric_source(grid, sw, vs), v[0]);
}

ScalarField linearized_response(const ClampedSolver& solver, const WDifference& w,
                                const std::vector<ScalarField>& v) {
  if (v.empty()) throw ConstraintError("linearized response needs at least one v_j");
  const auto& grid = solver.grid();
  const auto sw = SampledW::sample(grid, w);
  std::vector<FieldDerivatives> d;
  d.reserve(v.size());
  for (const auto& f : v) d.emplace_back(grid, f, 3);
  std::vector<Member> vs;
  for (std::size_t k = 0; k < v.size(); ++k) vs.push_back({&v[k], &d[k]});
  ScalarField src = symmetric_source(grid, sw, vs);
  src *= cplx(-1.0);
  return solver.solve(src, BoundaryData(grid));
}

cplx sharp_functional(const GridDomain& grid, const WDifference& a, const std::vector<ScalarField>& v,
                      ZerothOrderConvention conv) {
  if (v.size() < 2) throw ConstraintError("sharp functional needs v_0 and at least one v_j");
  const auto sw = SampledW::sample(grid, a);
  const FieldDerivatives d0(grid, v[0], 3);
  const double c0 = conv == ZerothOrderConvention::scaled ? 1.0 / static_cast<double>(v.size() - 1) : 1.0;
  ScalarField sharp(grid), rest(grid);
  for (int j = 0; j <= grid.N() + 1; ++j)
    for (int i = 0; i <= grid.N() + 1; ++i) {
      cplx s{};
      for (std::size_t l = 0; l < 4; ++l)
        for (const auto& f : sw.fields[l]) s += (l == 0 ? c0 : 1.0) * contract_derivatives(f.at(i, j), d0, i, j);
      sharp(i, j) = s;
      cplx p = 1.0;
      for (std::size_t k = 1; k < v.size(); ++k) p *= v[k](i, j);
      rest(i, j) = p;
    }
  return integrate_product(grid, sharp, rest);
}

cplx boundary_functional(const GridDomain& grid, const DnData& dn_diff, const ScalarField& v0, double tol) {
  const double gt = gamma_trace_size(grid, v0);
  if (!(gt < tol * std::max(1.0, v0.max_abs())))
    throw InvalidTestFunction("v_0 has Gamma traces " + std::to_string(gt));
  cplx s{};
  for (std::size_t q = 0; q < dn_diff.nodes.size(); ++q) {
    const auto& b = dn_diff.nodes[q];
    s += dn_diff.d3[q] * v0(b.i, b.j) - dn_diff.d2[q] * ghost_normal_derivative(grid, v0, b);
  }
  return s * grid.spacing();
}

CoefficientBasis CoefficientBasis::polynomial(const std::vector<int>& ranks, int degree) {
  if (degree < 0) throw ConstraintError("basis degree must be >= 0");
  CoefficientBasis b;
  for (int l : ranks) {
    if (l < 0 || l > 3) throw UnsupportedRank("basis rank must be 0..3");
    const auto& tab = index_table(2, l);
    for (int deg = 0; deg <= degree; ++deg)
      for (int a = deg; a >= 0; --a)
        for (std::size_t q = 0; q < tab.size(); ++q) {
          FieldSpec f(2, l);
          std::vector<int> idx(tab.sorted[q].begin(), tab.sorted[q].begin() + l);
          f.add_term(idx, 1.0, {a, deg - a});
          std::string label = "A" + std::to_string(l);
          if (l > 0) {
            label += "_";
            for (int r : idx) label += std::to_string(r + 1);
          }
          b.elements_.push_back({l, std::move(f), label + monomial_label(a, deg - a)});
        }
  }
  return b;
}

void CoefficientBasis::check_independent(const GridDomain& grid, double rel_tol) const {
  const auto nb = static_cast<Eigen::Index>(elements_.size());
  if (nb == 0) throw ConstraintError("empty coefficient basis");
  std::vector<TensorField> f;
  for (const auto& e : elements_) f.push_back(TensorField::sample(grid, e.field));
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(nb, nb);
  for (Eigen::Index a = 0; a < nb; ++a)
    for (Eigen::Index b = a; b < nb; ++b) {
      const auto& ea = elements_[static_cast<std::size_t>(a)];
      const auto& eb = elements_[static_cast<std::size_t>(b)];
      if (ea.l != eb.l) continue;
      const auto& tab = index_table(2, ea.l);
      cplx s{};
      for (int j = 0; j <= grid.N() + 1; ++j)
        for (int i = 0; i <= grid.N() + 1; ++i) {
          const auto& ta = f[static_cast<std::size_t>(a)].at(i, j);
          const auto& tb = f[static_cast<std::size_t>(b)].at(i, j);
          for (std::size_t q = 0; q < tab.size(); ++q)
            s += trapezoid_weight(i, grid.N()) * trapezoid_weight(j, grid.N()) *
                 static_cast<double>(tab.multiplicity[q]) * std::conj(ta[q]) * tb[q];
        }
      g(a, b) = s;
      g(b, a) = std::conj(s);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
  const auto& ev = es.eigenvalues();
  if (!(ev.minCoeff() > rel_tol * ev.maxCoeff()))
    throw ConstraintError("coefficient basis is linearly dependent on the grid");
}

WDifference CoefficientBasis::combine(const std::vector<cplx>& coeffs, int order) const {
  if (coeffs.size() != elements_.size()) throw DimensionMismatch("one coefficient per basis element");
  WDifference w;
  w.order = order;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (coeffs[k] != cplx(0.0))
      w.by_l[static_cast<std::size_t>(elements_[k].l)] += elements_[k].field * coeffs[k];
  return w;
}

DnOracle make_dn_oracle(std::shared_ptr<const ClampedSolver> solver, const CoefficientModel& model,
                        const PicardOptions& opt) {
  auto dm = std::make_shared<const DiscreteModel>(model, solver->grid());
  return [solver, dm, opt](const BoundaryData& d) { return dn_map(*solver, *dm, d, opt); };
}

Recovery recover_w(const DnOracle& truth, const DnOracle& reference, int m,
                   const CoefficientBasis& basis, const TestFunctionSet& tests, const RecoveryOptions& opt) {
  if (m < 2) throw ConstraintError("linearization order m must be >= 2");
  const GridDomain& grid = tests.grid();
  const std::size_t nt = tests.size();
  const std::size_t nb = basis.size();
  if (nb == 0) throw ConstraintError("empty coefficient basis");
  if (nt == 0) throw ConstraintError("empty test function set");

  // derivative tuples: multisets i_1 <= ... <= i_m of test indices
  std::vector<std::vector<int>> dtuples;
  std::vector<int> cur(static_cast<std::size_t>(m), 0);
  while (true) {
    dtuples.push_back(cur);
    int p = m - 1;
    while (p >= 0 && cur[static_cast<std::size_t>(p)] == static_cast<int>(nt) - 1) --p;
    if (p < 0) break;
    const int nv = cur[static_cast<std::size_t>(p)] + 1;
    for (int q = p; q < m; ++q) cur[static_cast<std::size_t>(q)] = nv;
  }
  const std::size_t n_v0 = opt.max_v0 == 0 ? nt : std::min(opt.max_v0, nt);
  const std::size_t rows = dtuples.size() * n_v0;
  if (rows < nb)
    throw UnderDetermined("only " + std::to_string(rows) + " test tuples for " + std::to_string(nb) +
                          " basis elements");

  std::vector<SampledW> sampled(nb);
  for (std::size_t c = 0; c < nb; ++c) {
    WDifference w;
    w.by_l[static_cast<std::size_t>(basis[c].l)] = basis[c].field;
    sampled[c] = SampledW::sample(grid, w);
  }

  const std::function<DnData(const BoundaryData&)> diff = [&](const BoundaryData& d) {
    return reference(d) - truth(d);
  };

  Eigen::MatrixXcd mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(nb));
  Eigen::VectorXcd rhs(static_cast<Eigen::Index>(rows));
  parallel_for(dtuples.size(), opt.workers, [&](std::size_t t) {
    const auto& tup = dtuples[t];
    std::vector<BoundaryData> dirs;
    std::vector<Member> vs;
    for (int k : tup) {
      const auto ku = static_cast<std::size_t>(k);
      dirs.push_back(tests[ku].data);
      vs.push_back({&tests[ku].v, &tests.derivatives(ku)});
    }
    const DnData dz = mixed_difference(diff, dirs, opt.eps, opt.scheme, 1);
    std::vector<ScalarField> src;
    src.reserve(nb);
    for (std::size_t c = 0; c < nb; ++c) src.push_back(symmetric_source(grid, sampled[c], vs));
    for (std::size_t z = 0; z < n_v0; ++z) {
      const auto row = static_cast<Eigen::Index>(t * n_v0 + z);
      rhs(row) = boundary_functional(grid, dz, tests[z].v);
      for (std::size_t c = 0; c < nb; ++c)
        mat(row, static_cast<Eigen::Index>(c)) = integrate_product(grid, src[c], tests[z].v);
    }
  });

  Eigen::VectorXd scale(static_cast<Eigen::Index>(nb));
  for (Eigen::Index c = 0; c < mat.cols(); ++c) {
    scale(c) = mat.col(c).norm();
    if (!(scale(c) > 0.0))
      throw UnderDetermined("basis element " + basis[static_cast<std::size_t>(c)].label +
                            " is invisible to every test tuple");
  }
  const Eigen::MatrixXcd ms = mat * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ms, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);

  Recovery rec;
  rec.m = m;
  rec.singular_values.assign(sv.data(), sv.data() + sv.size());
  rec.condition_number = smin > 0.0 ? smax / smin : INFINITY;
  if (!(smin > opt.rank_tol * smax)) {
    const auto null = svd.matrixV().col(sv.size() - 1);
    std::string report;
    for (std::size_t c = 0; c < nb; ++c) {
      const cplx wgt = null(static_cast<Eigen::Index>(c));
      if (std::abs(wgt) > 1e-3)
        report += " " + basis[c].label + ":" + std::to_string(std::abs(wgt));
    }
    throw UnderDetermined("linearization system is rank deficient (condition " +
                          std::to_string(rec.condition_number) + "); null direction" + report);
  }
  rec.lambda = opt.lambda_rel * smax;
  const double lam2 = rec.lambda * rec.lambda;
  const Eigen::VectorXcd ub = svd.matrixU().adjoint() * rhs;
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(nb));
  for (Eigen::Index k = 0; k < sv.size(); ++k) y += (sv(k) / (sv(k) * sv(k) + lam2) * ub(k)) * svd.matrixV().col(k);
  const Eigen::VectorXcd coeffs = scale.cwiseInverse().asDiagonal() * y;

  rec.coefficients.assign(coeffs.data(), coeffs.data() + coeffs.size());
  rec.w = basis.combine(rec.coefficients, m - 1);
  const Eigen::VectorXcd fit = mat * coeffs;
  rec.rhs_norm = rhs.norm();
  rec.residual = rec.rhs_norm > 0.0 ? (fit - rhs).norm() / rec.rhs_norm : 0.0;
  for (std::size_t t = 0; t < dtuples.size(); ++t)
    for (std::size_t z = 0; z < n_v0; ++z) {
      const auto row = static_cast<Eigen::Index>(t * n_v0 + z);
      std::vector<int> tup = {static_cast<int>(z)};
      tup.insert(tup.end(), dtuples[t].begin(), dtuples[t].end());
      rec.pairs.push_back({std::move(tup), rhs(row), fit(row)});
    }
  return rec;
}

std::vector<Recovery> taylor_cascade(
    const DnOracle& truth, const CoefficientModel& reference,
    const std::function<DnOracle(const CoefficientModel&)>& make_reference, int m_max,
    const CoefficientBasis& basis, const TestFunctionSet& tests, const CascadeOptions& opt) {
  if (m_max < 2) throw ConstraintError("cascade needs m_max >= 2");
  std::vector<Recovery> out;
  CoefficientModel ref = reference;
  double peak = 0.0;
  for (int m = 2; m <= m_max; ++m) {
    auto rec = recover_w(truth, make_reference(ref), m, basis, tests, opt.recovery);
    for (const auto& c : rec.coefficients)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw NumericalError("cascade aborted at m = " + std::to_string(m) + ": non-finite coefficient");
    const double floor = std::max(opt.noise_floor * std::sqrt(static_cast<double>(rec.pairs.size())),
                                  opt.noise_rel * peak);
    peak = std::max(peak, rec.rhs_norm);
    if (rec.rhs_norm > floor && rec.residual > opt.max_residual)
      throw NumericalError("cascade aborted at m = " + std::to_string(m) + ": residual " +
                           std::to_string(rec.residual));
    ref += rec.w.as_model();
    out.push_back(std::move(rec));
  }
  return out;
}

nlohmann::json to_json(const Recovery& r, const CoefficientBasis& basis, const RecoveryOptions& opt) {
  nlohmann::json recovered = nlohmann::json::array();
  for (int l = 0; l <= 3; ++l) {
    const auto& f = r.w.by_l[static_cast<std::size_t>(l)];
    if (has_terms(f)) recovered.push_back({{"l", l}, {"field", to_json(f)}});
  }
  nlohmann::json coeffs = nlohmann::json::array();
  for (std::size_t k = 0; k < r.coefficients.size(); ++k)
    coeffs.push_back({{"label", basis[k].label}, {"value", cplx_json(r.coefficients[k])}});
  return {{"m", r.m},
          {"order", r.m - 1},
          {"recovered", recovered},
          {"coefficients", coeffs},
          {"residual", r.residual},
          {"rhs_norm", r.rhs_norm},
          {"condition_number", r.condition_number},
          {"lambda", r.lambda},
          {"singular_values", r.singular_values},
          {"parameters",
           {{"eps", opt.eps},
            {"scheme", opt.scheme == DifferenceScheme::forward ? "forward" : "symmetric"},
            {"lambda_rel", opt.lambda_rel},
            {"tuples", r.pairs.size()}}}};
}

void write_pairs_csv(std::ostream& os, const Recovery& r) {
  os << "tuple,boundary_re,boundary_im,volume_re,volume_im\n";
  os.precision(17);
  for (const auto& p : r.pairs) {
    for (std::size_t k = 0; k < p.tuple.size(); ++k) os << (k ? ":" : "") << p.tuple[k];
    os << ',' << p.boundary.real() << ',' << p.boundary.imag() << ',' << p.volume.real() << ','
       << p.volume.imag() << '\n';
  }
}

}  // namespace biharm
