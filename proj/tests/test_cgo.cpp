#include <doctest.h>

#include <cmath>
#include <random>

#include "biharm/cgo.hpp"
#include "biharm/error.hpp"
#include "support/random.hpp"

using namespace biharm;

namespace {

constexpr cplx kI{0.0, 1.0};

NullVector xi_tau(double tau) { return NullVector::from_complex({kI * tau, cplx(tau)}); }

double rel_err(const SymTensor& a, const SymTensor& b) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return den > 0 ? num / den : num;
}

PointCoefficients zero_coefficients() {
  return {SymTensor(2, 0), SymTensor(2, 1), SymTensor(2, 2), SymTensor(2, 3)};
}

// central differences of a E in the plane, derivative order up to 3
cplx fd_partial(const std::function<cplx(double, double)>& f, std::span<const int> alpha,
                double x, double y, double step) {
  if (alpha.empty()) return f(x, y);
  const int d = alpha.back();
  auto rest = alpha.first(alpha.size() - 1);
  const double dx = d == 0 ? step : 0.0, dy = d == 1 ? step : 0.0;
  return (fd_partial(f, rest, x + dx, y + dy, step) - fd_partial(f, rest, x - dx, y - dy, step)) /
         (2 * step);
}

}  // namespace

TEST_CASE("cutoff profile") {
  GridDomain g(31);
  Cutoff chi(g, 0.2);
  CHECK(chi.value(0.0, 0.3) == 1.0);
  CHECK(chi.value(0.1, 0.3) == 1.0);
  CHECK(chi.value(0.2, 0.3) == 0.0);
  CHECK(chi.value(0.6, 0.3) == 0.0);
  CHECK(chi.value(0.15, 0.7) == doctest::Approx(0.5));
  // gradient against a difference quotient
  const double e = 1e-6;
  auto gr = chi.gradient(0.13, 0.4);
  CHECK(gr[0] == doctest::Approx((chi.value(0.13 + e, 0.4) - chi.value(0.13 - e, 0.4)) / (2 * e)).epsilon(1e-6));
  CHECK(std::abs(gr[1]) < 1e-12);
  for (const auto& b : chi.support_on_boundary(g)) CHECK(b.k >= 0);
  CHECK(Cutoff::zero(g).value(0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(Cutoff(g, 0.0), ConstraintError);
}

TEST_CASE("zero cutoff gives zero remainder") {
  GridDomain g(31);
  ClampedSolver solver(g);
  auto sol = build_cgo(solver, xi_tau(1), 0.3, Amplitude::one(), Cutoff::zero(g));
  CHECK(sol.r.max_abs() == 0.0);
}

TEST_CASE("cgo vanishes on Gamma") {
  GridDomain g(63);
  ClampedSolver solver(g);
  for (auto amp : {Amplitude::one(), Amplitude::coordinate(0), Amplitude::coordinate(1)}) {
    auto sol = build_cgo(solver, xi_tau(1), 0.5, amp, Cutoff(g, 0.2));
    auto t = gamma_traces(g, sol);
    CHECK(t.max_u < 1e-6);
    CHECK(t.max_dnu < 1e-6);
  }
}

TEST_CASE("one-sided Gamma trace converges") {
  std::vector<double> errs;
  for (int n : {63, 127, 255}) {
    GridDomain g(n);
    ClampedSolver solver(g);
    auto sol = build_cgo(solver, xi_tau(1), 0.5, Amplitude::one(), Cutoff(g, 0.3));
    errs.push_back(gamma_traces_one_sided(g, sol).max_dnu);
  }
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    const double order = std::log2(errs[k] / errs[k + 1]);
    CHECK(order >= 1.8);
  }
}

TEST_CASE("remainder solves the clamped problem") {
  GridDomain g(47);
  ClampedSolver solver(g);
  auto sol = build_cgo(solver, xi_tau(1), 0.3, Amplitude::coordinate(1), Cutoff(g, 0.2));
  auto bl = apply_bilaplacian(g, sol.r);
  CHECK(bl.max_abs_interior() * std::pow(g.spacing(), 4) < 1e-10 * sol.r.max_abs() * 64);
}

TEST_CASE("default h list") {
  GridDomain g(63);
  CHECK(default_h_list(g, xi_tau(2)).size() == 4);
  CHECK(default_h_list(g, xi_tau(1)).size() == 7);
  for (double h : default_h_list(g, xi_tau(1))) CHECK(h >= 4 * g.spacing() * std::sqrt(2.0) - 1e-15);
}

TEST_CASE("remainder decays exponentially away from Gamma") {
  GridDomain g(63);
  ClampedSolver solver(g);
  for (double tau : {1.0, 2.0}) {
    auto xi = xi_tau(tau);
    auto hs = default_h_list(g, xi);
    auto p = remainder_decay_profile(solver, xi, Amplitude::one(), Cutoff(g, 0.2), hs, 0.5, 4);
    CHECK(p.slope < 0);
    CHECK(p.r_squared > 0.9);
    CHECK(p.strictly_decreasing);
    CHECK_NOTHROW(certify_decay(p));
  }
}

TEST_CASE("decay certification rejects growth") {
  DecayProfile p;
  p.rows = {{0.4, 1e-2}, {0.3, 2e-2}};
  p.slope = 1.0;
  CHECK_THROWS_AS(certify_decay(p), DecayViolation);
}

TEST_CASE("symbol fit") {
  std::vector<double> hs = {0.4, 0.32, 0.256, 0.2048, 0.16384};
  std::vector<cplx> vals;
  for (double h : hs) vals.push_back(5 / (h * h * h) - 2 / h + 1.0);
  auto fit = leading_symbol_fit(hs, vals, 3);
  CHECK(std::abs(fit.coeffs[0] - 1.0) < 1e-10 * 5 / std::pow(0.16384, 3));
  CHECK(std::abs(fit.coeffs[1] + 2.0) < 1e-9);
  CHECK(std::abs(fit.coeffs[2]) < 1e-9);
  CHECK(std::abs(fit.coeffs[3] - 5.0) < 1e-10);
  CHECK(fit.residual < 1e-12);

  std::vector<cplx> zeros(hs.size());
  auto z = leading_symbol_fit(hs, zeros, 3);
  for (auto c : z.coeffs) CHECK(c == cplx(0.0));

  std::vector<double> close = {0.3, 0.3 * (1 + 1e-7), 0.3 * (1 + 2e-7), 0.3 * (1 + 3e-7)};
  std::vector<cplx> v4(4, cplx(1.0));
  CHECK_THROWS_AS(leading_symbol_fit(close, v4, 3), IllConditionedFit);
  CHECK_THROWS_AS(leading_symbol_fit(std::vector<double>{0.3, 0.2}, std::vector<cplx>{1.0, 1.0}, 3),
                  ConstraintError);
}

TEST_CASE("sharp on oscillation") {
  auto xi = xi_tau(1.3);
  const double h = 0.37, x = 0.61, y = 0.27;

  SUBCASE("laplacian on x1 E") {
    auto a = zero_coefficients();
    a[2] = SymTensor::kronecker(2);
    // delta_ij D_i D_j (x1 E) / E = -(i) * 2 * (-xi_1 / h), the x1 xi.xi term vanishes
    CHECK(std::abs(sharp_on_oscillation(a, xi, h, Amplitude::coordinate(0), x, y) -
                   2.0 * kI * xi.xi()[0] / h) < 1e-12);
  }
  SUBCASE("against difference quotients") {
    std::mt19937_64 rng(7);
    PointCoefficients a = {testing::random_tensor(rng, 2, 0), testing::random_tensor(rng, 2, 1),
                           testing::random_tensor(rng, 2, 2), testing::random_tensor(rng, 2, 3)};
    for (auto amp : {Amplitude::one(), Amplitude::coordinate(1)}) {
      auto f = [&](double px, double py) { return amp.value(px, py) * cgo_phase(xi, h, px, py); };
      cplx expect = a[0][0] * f(x, y);
      cplx mi = 1.0;
      for (int l = 1; l <= 3; ++l) {
        mi *= -kI;
        std::vector<int> alpha(static_cast<std::size_t>(l));
        for (int flat = 0; flat < (1 << l); ++flat) {
          for (int q = 0; q < l; ++q) alpha[static_cast<std::size_t>(q)] = (flat >> q) & 1;
          expect += a[static_cast<std::size_t>(l)].at(alpha) * mi * fd_partial(f, alpha, x, y, 1e-3);
        }
      }
      expect /= cgo_phase(xi, h, x, y);
      const cplx got = sharp_on_oscillation(a, xi, h, amp, x, y);
      CHECK(std::abs(got - expect) < 1e-4 * std::abs(expect));
    }
  }
}

TEST_CASE("probe extraction reads off the pairings") {
  GridDomain g(63);
  ClampedSolver solver(g);
  auto xi = xi_tau(1);
  auto a = zero_coefficients();
  a[1] = SymTensor::unit_vector(2, 0);
  ExtractionOptions opt;
  auto e = local_symbol_extraction(a, xi, Amplitude::one(), opt, solver);
  CHECK(std::abs(e.fit.coeffs[1] + xi.xi()[0]) < 1e-9);
  CHECK(std::abs(e.fit.coeffs[0]) < 1e-9);
  CHECK(std::abs(e.fit.coeffs[3]) < 1e-9);

  ExtractionOptions bad;
  bad.x0 = {0.1, 0.5};
  CHECK_THROWS_AS(local_symbol_extraction(a, xi, Amplitude::one(), bad, solver), ConstraintError);
}

TEST_CASE("remainder contamination of the leading coefficient") {
  GridDomain g(63);
  ClampedSolver solver(g);
  std::mt19937_64 rng(3);
  PointCoefficients a = {testing::random_tensor(rng, 2, 0), testing::random_tensor(rng, 2, 1),
                         testing::random_tensor(rng, 2, 2), testing::random_tensor(rng, 2, 3)};
  auto xi = xi_tau(1);
  ExtractionOptions opt;
  opt.workers = 4;
  auto clean = local_symbol_extraction(a, xi, Amplitude::one(), opt, solver);
  opt.include_remainder = true;
  auto dirty = local_symbol_extraction(a, xi, Amplitude::one(), opt, solver);
  CHECK(std::abs(dirty.fit.coeffs[3] - clean.fit.coeffs[3]) < 0.01 * std::abs(clean.fit.coeffs[3]));
}

TEST_CASE("cascade") {
  GridDomain g(63);
  ClampedSolver solver(g);
  ExtractionOptions opt;
  opt.workers = 4;

  SUBCASE("all zero") {
    auto r = local_cascade(zero_coefficients(), opt, solver);
    CHECK(r.a3.max_abs() < 1e-10);
    CHECK(r.a2.max_abs() < 1e-10);
    CHECK(r.a1.max_abs() < 1e-10);
    CHECK(r.a0.max_abs() < 1e-10);
  }
  SUBCASE("isotropic third order part") {
    auto a = zero_coefficients();
    a[3] = i_delta(SymTensor::unit_vector(2, 0));
    auto r = local_cascade(a, opt, solver);
    CHECK(r.tf3.max_abs() < 1e-8);
    CHECK(rel_err(r.iso1, SymTensor::unit_vector(2, 0)) < 1e-8);
    CHECK(rel_err(r.a3, a[3]) < 1e-8);
  }
  SUBCASE("random constants") {
    std::mt19937_64 rng(11);
    PointCoefficients a = {testing::random_tensor(rng, 2, 0), testing::random_tensor(rng, 2, 1),
                           testing::random_tensor(rng, 2, 2), testing::random_tensor(rng, 2, 3)};
    auto r = local_cascade(a, opt, solver);
    CHECK(rel_err(r.a3, a[3]) < 0.01);
    CHECK(rel_err(r.a2, a[2]) < 0.01);
    CHECK(rel_err(r.a1, a[1]) < 0.01);
    CHECK(rel_err(r.a0, a[0]) < 0.01);
    CHECK(r.max_condition < 1e12);
  }
}
