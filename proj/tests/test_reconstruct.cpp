#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "biharm/error.hpp"
#include "biharm/reconstruct.hpp"

using namespace biharm;

namespace {

ScalarField smooth_field(const GridDomain& g, int seed) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::normal_distribution<double> n;
  const double a = n(rng), b = n(rng), c = n(rng), d = n(rng);
  return ScalarField::sample(g, [=](double x, double y) {
    return cplx(a + std::sin(b * x + 1.3 * y), c * x * y + std::cos(d * y - x));
  });
}

FieldSpec random_field(int l, int seed) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::normal_distribution<double> n;
  FieldSpec f(2, l);
  const auto& tab = index_table(2, l);
  for (std::size_t q = 0; q < tab.size(); ++q) {
    std::vector<int> idx(tab.sorted[q].begin(), tab.sorted[q].begin() + l);
    f.add_term(idx, cplx(n(rng), n(rng)), {0, 0});
    f.add_term(idx, n(rng), {1, 0});
    f.add_term(idx, n(rng), {1, 1});
  }
  return f;
}

WDifference random_w(int seed) {
  WDifference w;
  for (int l = 0; l <= 3; ++l) w.by_l[static_cast<std::size_t>(l)] = random_field(l, seed + l);
  return w;
}

WDifference constant_w(int l, const SymTensor& t) {
  WDifference w;
  w.by_l[static_cast<std::size_t>(l)] = FieldSpec::constant(t);
  return w;
}

SymTensor e111() {
  SymTensor t(2, 3);
  t[0] = 1.0;
  return t;
}

// (-Delta)^2 z = sum_l W (sum_j D v_j prod v_r), zero Cauchy data
ScalarField direct_z(const ClampedSolver& solver, const WDifference& w, const std::vector<ScalarField>& vs) {
  const auto& g = solver.grid();
  const auto sw = SampledW::sample(g, w);
  std::vector<FieldDerivatives> d;
  for (const auto& v : vs) d.emplace_back(g, v, 3);
  ScalarField src(g);
  for (int j = 0; j <= g.N() + 1; ++j)
    for (int i = 0; i <= g.N() + 1; ++i) {
      cplx s{};
      for (const auto& fl : sw.fields)
        for (const auto& f : fl)
          for (std::size_t k = 0; k < vs.size(); ++k) {
            cplx t = contract_derivatives(f.at(i, j), d[k], i, j);
            for (std::size_t r = 0; r < vs.size(); ++r)
              if (r != k) t *= vs[r](i, j);
            s += t;
          }
      src(i, j) = s;
    }
  return solver.solve(src, BoundaryData(g));
}

CoefficientModel single(int l, int k, const SymTensor& t) {
  CoefficientModel m;
  m.add(l, k, FieldSpec::constant(t));
  return m;
}

}  // namespace

TEST_CASE("volume functional") {
  GridDomain g(15, {});
  std::vector<ScalarField> v = {smooth_field(g, 1), smooth_field(g, 2), smooth_field(g, 3)};
  CHECK(volume_functional(g, WDifference{}, v) == cplx(0.0));

  ScalarField one = ScalarField::sample(g, [](double, double) { return cplx(1.0); });
  auto w0 = constant_w(0, SymTensor::scalar(2, 1.0));
  CHECK(std::abs(volume_functional(g, w0, {one, one, one}) - 2.0) < 1e-13);

  auto w = random_w(10);
  const cplx a = volume_functional(g, w, v);
  const cplx b = volume_functional(g, w, {v[0], v[2], v[1]});
  CHECK(std::abs(a - b) < 1e-12 * std::abs(a));
}

TEST_CASE("sharp functional") {
  GridDomain g(15, {});
  std::vector<ScalarField> base = {smooth_field(g, 4), smooth_field(g, 5), smooth_field(g, 6), smooth_field(g, 7)};
  CHECK(sharp_functional(g, WDifference{}, {base[0], base[1]}) == cplx(0.0));

  SUBCASE("volume form is the sum of sharp forms") {
    for (int m : {2, 3}) {
      CAPTURE(m);
      std::vector<ScalarField> v(base.begin(), base.begin() + m + 1);
      auto w = random_w(20 + m);
      const cplx vol = volume_functional(g, w, v);
      cplx sum{};
      for (int k = 1; k <= m; ++k) {
        std::vector<ScalarField> args = {v[static_cast<std::size_t>(k)], v[0]};
        for (int j = 1; j <= m; ++j)
          if (j != k) args.push_back(v[static_cast<std::size_t>(j)]);
        sum += sharp_functional(g, w, args, ZerothOrderConvention::linearized);
      }
      CHECK(std::abs(vol - sum) < 1e-10 * std::abs(vol));
    }
  }
  SUBCASE("zeroth order enters with 1/m") {
    for (int m : {2, 3}) {
      CAPTURE(m);
      std::vector<ScalarField> v(base.begin(), base.begin() + m + 1);
      auto a0 = constant_w(0, SymTensor::scalar(2, 1.0));
      const cplx scaled = sharp_functional(g, a0, v, ZerothOrderConvention::scaled);
      const cplx lin = sharp_functional(g, a0, v, ZerothOrderConvention::linearized);
      CHECK(std::abs(lin / scaled - static_cast<double>(m)) < 1e-12);
      // each sharp term carries A0 prod v; the volume form sums m of them
      CHECK(std::abs(volume_functional(g, a0, v) / scaled - static_cast<double>(m * m)) < 1e-10);
    }
  }
  SUBCASE("higher orders agree between conventions") {
    auto w = random_w(40);
    w.by_l[0] = FieldSpec(2, 0);
    const cplx p = sharp_functional(g, w, {base[0], base[1], base[2]}, ZerothOrderConvention::scaled);
    const cplx l = sharp_functional(g, w, {base[0], base[1], base[2]}, ZerothOrderConvention::linearized);
    CHECK(std::abs(p - l) == 0.0);
  }
}

TEST_CASE("test function set") {
  GridDomain g(31);
  ClampedSolver solver(g);
  auto set = TestFunctionSet::random(solver, 3, 11);
  REQUIRE(set.size() == 3);
  for (std::size_t k = 0; k < set.size(); ++k) {
    CHECK(set[k].kind == TestFunctionKind::random_boundary_data);
    CHECK(set[k].data.max_abs_on_gamma(g) < 1e-14);
    CHECK(solver.relative_residual(set[k].v, ScalarField(g)) < 1e-12);
    CHECK(set[k].v.max_abs() > 0.0);
  }
  auto again = TestFunctionSet::random(solver, 3, 11);
  CHECK((again[2].v - set[2].v).max_abs() == 0.0);

  auto bad = BoundaryData::traces_of(
      g, [](double, double y) { return cplx(y); },
      [](double, double) { return std::array<cplx, 2>{0.0, 1.0}; });
  CHECK_THROWS_AS(set.add_from_data(solver, bad, TestFunctionKind::polynomial, "bad"), InvalidTestFunction);
  CHECK_THROWS_AS(set.add(solver.solve(bad), TestFunctionKind::polynomial, "bad"), InvalidTestFunction);
  auto not_biharmonic = ScalarField::sample(g, [](double x, double) { return cplx(x * x * x * x * x * x); });
  CHECK_THROWS_AS(set.add(not_biharmonic, TestFunctionKind::polynomial, "x^6"), InvalidTestFunction);

  // x^2 y is biharmonic and flat on the left edge
  auto poly = ScalarField::sample(g, [](double x, double y) { return cplx(x * x * y); });
  set.add(solver.solve(cauchy_data_of(g, poly)), TestFunctionKind::polynomial, "x^2 y");
  CHECK(set.size() == 4);

  SUBCASE("CGO members") {
    GridDomain g63(63);
    ClampedSolver s63(g63);
    TestFunctionSet cg(g63);
    const std::array<double, 2> a = {1.0, 0.0}, b = {0.0, 1.0};
    auto cgo = build_cgo(s63, make_null_vector(a, b), 0.5, Amplitude::one(), Cutoff(g63, 0.2));
    cg.add_cgo(s63, cgo);
    REQUIRE(cg.size() == 1);
    CHECK(cg[0].kind == TestFunctionKind::cgo);
    CHECK((cg[0].v - cgo.u).max_abs() < 1e-5 * cgo.u.max_abs());
  }
}

TEST_CASE("boundary functional") {
  GridDomain g(31);
  ClampedSolver solver(g);
  auto tests = TestFunctionSet::random(solver, 3, 7);
  std::vector<ScalarField> v = {tests[0].v, tests[1].v, tests[2].v};

  CHECK(boundary_functional(g, dn_traces(g, ScalarField(g)), v[0]) == cplx(0.0));
  CHECK(boundary_functional(g, dn_traces(g, v[1]), ScalarField(g)) == cplx(0.0));

  auto bad = solver.solve(BoundaryData::traces_of(
      g, [](double, double y) { return cplx(y); },
      [](double, double) { return std::array<cplx, 2>{0.0, 1.0}; }));
  CHECK_THROWS_AS(boundary_functional(g, dn_traces(g, v[1]), bad), InvalidTestFunction);

  SUBCASE("golden value") {
    auto w = constant_w(0, SymTensor::scalar(2, 1.0));
    const cplx b = boundary_functional(g, dn_traces(g, direct_z(solver, w, {v[1], v[2]})), v[0]);
    CHECK(b.real() == doctest::Approx(0.0156745975169191).epsilon(1e-9));
    CHECK(std::abs(b.imag()) < 1e-15);
  }

  SUBCASE("agrees with the volume functional") {
    const std::vector<WDifference> ws = {constant_w(0, SymTensor::scalar(2, 1.0)),
                                         constant_w(1, SymTensor::unit_vector(2, 0)),
                                         constant_w(2, SymTensor::kronecker(2)), constant_w(3, e111())};
    for (std::size_t q = 0; q < ws.size(); ++q) {
      CAPTURE(q);
      std::vector<double> err;
      for (int n : {31, 63}) {
        GridDomain gn(n);
        ClampedSolver sn(gn);
        auto tn = TestFunctionSet::random(sn, 3, 7);
        std::vector<ScalarField> vn = {tn[0].v, tn[1].v, tn[2].v};
        const cplx vol = volume_functional(gn, ws[q], vn);
        const cplx bnd = boundary_functional(gn, dn_traces(gn, direct_z(sn, ws[q], {vn[1], vn[2]})), vn[0]);
        err.push_back(std::abs(bnd - vol));
        if (n == 63) CHECK(err.back() < 0.02 * std::abs(vol));
      }
      CHECK(std::log2(err[0] / err[1]) >= 1.0);
    }
  }

  SUBCASE("converges in eps") {
    auto solver_ptr = std::make_shared<const ClampedSolver>(g);
    auto truth = make_dn_oracle(solver_ptr, single(0, 1, SymTensor::scalar(2, 1.0)));
    auto ref = make_dn_oracle(solver_ptr, CoefficientModel{});
    const std::function<DnData(const BoundaryData&)> diff = [&](const BoundaryData& d) {
      return ref(d) - truth(d);
    };
    const cplx exact = boundary_functional(
        g, dn_traces(g, direct_z(solver, constant_w(0, SymTensor::scalar(2, 1.0)), {v[1], v[2]})), v[0]);
    std::vector<double> err;
    for (double eps : {0.4, 0.2, 0.1}) {
      auto dz = mixed_difference(diff, {tests[1].data, tests[2].data}, eps);
      err.push_back(std::abs(boundary_functional(g, dz, v[0]) - exact));
    }
    CHECK(std::log2(err[0] / err[1]) >= 0.9);
    CHECK(std::log2(err[1] / err[2]) >= 0.9);
  }
}

TEST_CASE("coefficient basis") {
  GridDomain g(15);
  auto c = CoefficientBasis::constants({0, 1, 2, 3});
  CHECK(c.size() == 10);
  CHECK(c[0].label == "A0");
  CHECK(c[9].label == "A3_222");
  CHECK_NOTHROW(c.check_independent(g));
  auto p = CoefficientBasis::polynomial({0, 1}, 2);
  CHECK(p.size() == 18);
  CHECK_NOTHROW(p.check_independent(g));

  // 28 monomials of degree <= 6 on 25 nodes
  GridDomain tiny(3, {});
  CHECK_THROWS_AS(CoefficientBasis::polynomial({0}, 6).check_independent(tiny), ConstraintError);
  CHECK_THROWS_AS(CoefficientBasis::polynomial({4}), UnsupportedRank);

  auto w = c.combine({1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0}, 2);
  CHECK(w.order == 2);
  const std::array<double, 2> x = {0.3, 0.4};
  CHECK(w.at(0, x)[0] == cplx(1.0));
  CHECK(w.at(1, x)[0] == cplx(2.0));
  CHECK(w.at(3, x)[3] == cplx(3.0));
  CHECK(w.as_model().terms().size() == 3);
}

TEST_CASE("recover W") {
  GridDomain g(31);
  auto solver = std::make_shared<const ClampedSolver>(g);
  auto tests = TestFunctionSet::random(*solver, 6, 7);
  auto basis = CoefficientBasis::constants({0, 1, 2, 3});
  auto zero = make_dn_oracle(solver, CoefficientModel{});
  RecoveryOptions opt;
  opt.workers = 4;

  SUBCASE("identical models") {
    auto m = single(0, 1, SymTensor::scalar(2, 1.0));
    auto rec = recover_w(make_dn_oracle(solver, m), make_dn_oracle(solver, m), 2, basis, tests, opt);
    for (const auto& c : rec.coefficients) CHECK(std::abs(c) == 0.0);
    for (const auto& p : rec.pairs) CHECK(std::abs(p.boundary) < 1e-8);
    CHECK(rec.pairs.size() == 21 * 6);
  }
  SUBCASE("scalar quadratic term") {
    auto rec = recover_w(make_dn_oracle(solver, single(0, 1, SymTensor::scalar(2, 1.0))), zero, 2,
                         basis, tests, opt);
    CHECK(std::abs(rec.coefficients[0] - 1.0) < 0.05);
    for (std::size_t k = 1; k < basis.size(); ++k) CHECK(std::abs(rec.coefficients[k]) < 0.05);
    CHECK(rec.condition_number < 1e3);
    CHECK(rec.residual < 0.05);
    CHECK(rec.lambda == doctest::Approx(1e-8 * rec.singular_values[0]));

    auto j = to_json(rec, basis, opt);
    CHECK(j["order"] == 1);
    CHECK(j["coefficients"].size() == basis.size());
    CHECK(j["recovered"].size() == 4);
    std::ostringstream os;
    write_pairs_csv(os, rec);
    const std::string csv = os.str();
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == rec.pairs.size() + 1);
  }
  SUBCASE("vector quadratic term") {
    auto rec = recover_w(make_dn_oracle(solver, single(1, 1, SymTensor::unit_vector(2, 0) * cplx(0.5))),
                         zero, 2, basis, tests, opt);
    CHECK(std::abs(rec.coefficients[1] - 0.5) < 0.05);
    CHECK(std::abs(rec.coefficients[2]) < 0.05);
  }
  SUBCASE("too few tuples") {
    TestFunctionSet one(g);
    one.add(tests[0].v, tests[0].kind, tests[0].tag);
    CHECK_THROWS_AS(recover_w(zero, zero, 2, basis, one, opt), UnderDetermined);
  }
}

TEST_CASE("Taylor cascade") {
  GridDomain g(31);
  auto solver = std::make_shared<const ClampedSolver>(g);
  auto tests = TestFunctionSet::random(*solver, 4, 7);
  auto basis = CoefficientBasis::constants({0, 1, 2, 3});
  auto make = [&](const CoefficientModel& m) { return make_dn_oracle(solver, m); };
  CascadeOptions opt;
  opt.recovery.workers = 4;

  SUBCASE("equal models") {
    auto m = single(0, 1, SymTensor::scalar(2, 1.0));
    auto recs = taylor_cascade(make(m), m, make, 3, basis, tests, opt);
    REQUIRE(recs.size() == 2);
    for (const auto& r : recs)
      for (const auto& c : r.coefficients) CHECK(std::abs(c) == 0.0);
  }
  SUBCASE("quadratic only") {
    auto recs = taylor_cascade(make(single(0, 1, SymTensor::scalar(2, 1.0))), CoefficientModel{}, make, 3,
                               basis, tests, opt);
    REQUIRE(recs.size() == 2);
    CHECK(std::abs(recs[0].coefficients[0] - 1.0) < 0.05);
    for (const auto& c : recs[1].coefficients) CHECK(std::abs(c) < 0.05);
  }
  SUBCASE("cubic term after substitution") {
    auto truth = single(0, 1, SymTensor::scalar(2, 1.0));
    truth.add(0, 2, FieldSpec::constant(SymTensor::scalar(2, 1.0)));
    auto recs = taylor_cascade(make(truth), CoefficientModel{}, make, 3, basis, tests, opt);
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].m == 3);
    CHECK(recs[1].w.order == 2);
    CHECK(std::abs(recs[1].coefficients[0] - 1.0) < 0.1);
  }
  SUBCASE("residual blow-up aborts") {
    CascadeOptions strict = opt;
    strict.max_residual = 1e-6;
    CHECK_THROWS_AS(taylor_cascade(make(single(0, 1, SymTensor::scalar(2, 1.0))), CoefficientModel{},
                                   make, 2, basis, tests, strict),
                    NumericalError);
  }
}

TEST_CASE("recovery error shrinks with the test set") {
  GridDomain g(31);
  auto solver = std::make_shared<const ClampedSolver>(g);
  auto all = TestFunctionSet::random(*solver, 5, 7);
  auto basis = CoefficientBasis::constants({0, 1, 2, 3});
  auto truth = make_dn_oracle(solver, single(1, 1, SymTensor::unit_vector(2, 0)));
  auto zero = make_dn_oracle(solver, CoefficientModel{});
  RecoveryOptions opt;
  opt.workers = 4;
  std::vector<double> err;
  for (std::size_t k = 3; k <= 5; ++k) {
    TestFunctionSet t(g);
    for (std::size_t q = 0; q < k; ++q) t.add(all[q].v, all[q].kind, all[q].tag);
    auto rec = recover_w(truth, zero, 2, basis, t, opt);
    double e = 0;
    for (std::size_t c = 0; c < basis.size(); ++c)
      e = std::max(e, std::abs(rec.coefficients[c] - (c == 1 ? 1.0 : 0.0)));
    err.push_back(e);
  }
  CHECK(err[1] <= err[0]);
  CHECK(err[2] <= err[1]);
}

TEST_CASE("linearized response") {
  GridDomain g(31);
  ClampedSolver solver(g);
  auto tests = TestFunctionSet::random(solver, 2, 21);
  const std::vector<ScalarField> vs = {tests[0].v, tests[1].v};
  const auto model = single(0, 1, SymTensor::scalar(2, 1.0)) + single(1, 1, SymTensor::unit_vector(2, 0));
  WDifference w;
  w.by_l[0] = FieldSpec::constant(SymTensor::scalar(2, 1.0));
  w.by_l[1] = FieldSpec::constant(SymTensor::unit_vector(2, 0));
  const auto lin = linearized_response(solver, w, vs);

  DiscreteModel dm(model, g);
  const std::function<ScalarField(const BoundaryData&)> field = [&](const BoundaryData& d) {
    return solve_semilinear(solver, dm, d).u;
  };
  auto mixed = mixed_difference(field, {tests[0].data, tests[1].data}, 0.02, DifferenceScheme::symmetric);
  mixed -= lin;
  CHECK(mixed.max_abs() < 1e-3 * lin.max_abs());
  CHECK_THROWS_AS(linearized_response(solver, w, {}), ConstraintError);
}
