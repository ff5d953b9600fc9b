#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "biharm/clamped_solver.hpp"
#include "biharm/error.hpp"
#include "biharm/finite_difference.hpp"
#include "biharm/traces.hpp"

using namespace biharm;

namespace {

constexpr double kPi = std::numbers::pi;

// sin^2(pi t) and its derivatives
double s0(double t) { return std::pow(std::sin(kPi * t), 2); }
double s1(double t) { return kPi * std::sin(2 * kPi * t); }
double s2(double t) { return 2 * kPi * kPi * std::cos(2 * kPi * t); }
double s3(double t) { return -4 * std::pow(kPi, 3) * std::sin(2 * kPi * t); }
double s4(double t) { return -8 * std::pow(kPi, 4) * std::cos(2 * kPi * t); }

double sinsq_bilap(double x, double y) {
  return s4(x) * s0(y) + 2 * s2(x) * s2(y) + s0(x) * s4(y);
}

double max_err(const GridDomain& g, const ScalarField& u, const std::function<cplx(double, double)>& f) {
  double e = 0;
  for (int j = 0; j <= g.N() + 1; ++j)
    for (int i = 0; i <= g.N() + 1; ++i)
      e = std::max(e, std::abs(u(i, j) - f(g.coord(i), g.coord(j))));
  return e;
}

BoundaryData traces_x2y2(const GridDomain& g) {
  return BoundaryData::traces_of(
      g, [](double x, double y) { return cplx(x * x * y * y); },
      [](double x, double y) { return std::array<cplx, 2>{2 * x * y * y, 2 * x * x * y}; });
}

}  // namespace

TEST_CASE("fornberg weights") {
  std::vector<double> xs = {-1, 0, 1};
  auto w = fornberg_weights(0.0, xs, 2);
  CHECK(w[1][0] == doctest::Approx(-0.5));
  CHECK(w[1][2] == doctest::Approx(0.5));
  CHECK(w[2][0] == doctest::Approx(1.0));
  CHECK(w[2][1] == doctest::Approx(-2.0));
  std::vector<double> one_sided = {0, 1, 2, 3, 4};
  auto w3 = fornberg_weights(0.0, one_sided, 3)[3];
  // exact on t^3
  double s = 0;
  for (std::size_t q = 0; q < 5; ++q) s += w3[q] * std::pow(one_sided[q], 3);
  CHECK(s == doctest::Approx(6.0));
}

TEST_CASE("grid partition") {
  GridDomain g(7);
  CHECK(g.spacing() == doctest::Approx(0.125));
  CHECK(g.sigma_nodes().size() == 3u * 7u);
  CHECK(g.gamma_nodes().size() == 9u + 2u);  // left edge plus the two corners seen from bottom/top
  for (const auto& b : g.sigma_nodes()) CHECK(b.edge != Edge::left);
  GridDomain partial(7, {{Edge::bottom, 0.0, 0.5}});
  CHECK(partial.in_gamma(Edge::bottom, 4));
  CHECK_FALSE(partial.in_gamma(Edge::bottom, 5));
  CHECK(partial.distance_to_gamma(0.75, 0.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(GridDomain(7, {{Edge::top, 0.5, 1.5}}), ConstraintError);
}

TEST_CASE("assembly") {
  CHECK_THROWS_AS(ClampedSolver(GridDomain(4)), ConstraintError);
  SUBCASE("constant data gives the constant") {
    GridDomain g(11);
    ClampedSolver solver(g);
    BoundaryData d = BoundaryData::from_functions(
        g, [](double, double) { return cplx(3.0, -1.0); }, [](double, double, Edge) { return cplx(0.0); });
    auto u = solver.solve(d);
    CHECK(max_err(g, u, [](double, double) { return cplx(3.0, -1.0); }) < 1e-11);
    CHECK(apply_bilaplacian(g, u).max_abs_interior() < 1e-6);
  }
  SUBCASE("nonsingular at N=9") {
    ClampedSolver solver(GridDomain(9));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(solver.matrix()));
    const auto& sv = svd.singularValues();
    CHECK(sv(sv.size() - 1) > 0.0);
    CHECK(sv(0) / sv(sv.size() - 1) < 1e8);
  }
  SUBCASE("quartics are reproduced exactly") {
    GridDomain g(13);
    ClampedSolver solver(g);
    auto exact = [](double x, double y) { return cplx(std::pow(x, 4) + std::pow(y, 4) + x * x * y * y); };
    auto d = BoundaryData::traces_of(g, exact, [](double x, double y) {
      return std::array<cplx, 2>{4 * std::pow(x, 3) + 2 * x * y * y, 4 * std::pow(y, 3) + 2 * x * x * y};
    });
    auto u = solver.solve(ScalarField::sample(g, [](double, double) { return cplx(56.0); }), d);
    CHECK(max_err(g, u, exact) < 1e-10);
  }
  SUBCASE("far-interior row annihilates constants") {
    ClampedSolver solver(GridDomain(9));
    const int row = 4 * 9 + 4;
    double sum = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(solver.matrix(), row); it; ++it) sum += it.value();
    CHECK(std::abs(sum) < 1e-8);
  }
}

TEST_CASE("solve_clamped") {
  SUBCASE("zero data gives zero") {
    GridDomain g(15);
    ClampedSolver solver(g);
    auto u = solver.solve(BoundaryData(g));
    CHECK(u.max_abs() == 0.0);
  }
  SUBCASE("x^2 y^2 is reproduced exactly") {
    GridDomain g(15);
    ClampedSolver solver(g);
    auto src8 = ScalarField::sample(g, [](double, double) { return cplx(8.0); });
    auto v = solver.solve(src8, traces_x2y2(g));
    CHECK(max_err(g, v, [](double x, double y) { return cplx(x * x * y * y); }) < 1e-11);
  }
  SUBCASE("manufactured solutions converge at second order") {
    // e^x cos(2y): (-Delta)^2 = (1 - 4)^2 = 9 times itself
    auto expcos = [](double x, double y) { return cplx(std::exp(x) * std::cos(2 * y)); };
    auto expcos_grad = [](double x, double y) {
      return std::array<cplx, 2>{std::exp(x) * std::cos(2 * y), -2 * std::exp(x) * std::sin(2 * y)};
    };
    std::vector<double> e_sin, e_exp;
    for (int n : {15, 31, 63}) {
      GridDomain g(n);
      ClampedSolver solver(g);
      auto src = ScalarField::sample(g, [](double x, double y) { return cplx(sinsq_bilap(x, y)); });
      auto u = solver.solve(src, BoundaryData(g));
      e_sin.push_back(max_err(g, u, [](double x, double y) { return cplx(s0(x) * s0(y)); }));
      auto src9 = ScalarField::sample(g, [&](double x, double y) { return 9.0 * expcos(x, y); });
      auto v = solver.solve(src9, BoundaryData::traces_of(g, expcos, expcos_grad));
      e_exp.push_back(max_err(g, v, expcos));
    }
    for (const auto* e : {&e_sin, &e_exp})
      for (std::size_t k = 0; k + 1 < e->size(); ++k) {
        const double order = std::log2((*e)[k] / (*e)[k + 1]);
        CHECK(order >= 1.7);
        CHECK(order <= 2.3);
      }
  }
  SUBCASE("linearity") {
    GridDomain g(15);
    ClampedSolver solver(g);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    auto rfield = [&] {
      ScalarField s(g);
      for (auto& v : s.raw()) v = {nd(rng), nd(rng)};
      return s;
    };
    auto rdata = [&] {
      return BoundaryData::from_functions(
          g, [&](double, double) { return cplx(nd(rng), nd(rng)); },
          [&](double, double, Edge) { return cplx(nd(rng), nd(rng)); });
    };
    auto s1f = rfield(), s2f = rfield();
    auto d1 = rdata(), d2 = rdata();
    const cplx a{0.3, -1.2}, b{2.0, 0.5};
    auto lhs = solver.solve(a * s1f + b * s2f, a * d1 + b * d2);
    auto rhs = a * solver.solve(s1f, d1) + b * solver.solve(s2f, d2);
    CHECK((lhs - rhs).max_abs() <= 1e-10 * std::max(1.0, lhs.max_abs()));
  }
}

TEST_CASE("boundary normal traces") {
  GridDomain g(15);
  SUBCASE("x^2 on the left edge") {
    auto u = ScalarField::sample(g, [](double x, double) { return cplx(x * x); });
    auto t = boundary_normal_traces(g, u, 2, TraceRegion::boundary);
    for (std::size_t k = 0; k < t.nodes.size(); ++k)
      if (t.nodes[k].edge == Edge::left) CHECK(std::abs(t.values[k] - 2.0) < 1e-9);
  }
  SUBCASE("x^3 on the left edge") {
    auto u = ScalarField::sample(g, [](double x, double) { return cplx(x * x * x); });
    auto t = boundary_normal_traces(g, u, 3, TraceRegion::boundary);
    for (std::size_t k = 0; k < t.nodes.size(); ++k)
      if (t.nodes[k].edge == Edge::left) CHECK(std::abs(t.values[k] + 6.0) < 1e-7);
  }
  SUBCASE("Sigma excludes Gamma and corners") {
    auto u = ScalarField(g);
    auto d = dn_traces(g, u);
    CHECK(d.nodes.size() == 3u * 15u);
    for (const auto& b : d.nodes) CHECK_FALSE(g.is_corner(b.i, b.j));
  }
  SUBCASE("traces of the manufactured solution converge") {
    std::vector<double> e2, e3;
    for (int n : {15, 31, 63}) {
      GridDomain gg(n);
      ClampedSolver solver(gg);
      auto src = ScalarField::sample(gg, [](double x, double y) { return cplx(sinsq_bilap(x, y)); });
      auto u = solver.solve(src, BoundaryData(gg));
      auto d = dn_traces(gg, u);
      double m2 = 0, m3 = 0;
      for (std::size_t k = 0; k < d.nodes.size(); ++k) {
        const auto& b = d.nodes[k];
        const double x = gg.coord(b.i), y = gg.coord(b.j);
        // d_nu^2 and d_nu^3 of S(x)S(y) on the right, bottom and top edges
        double want2, want3;
        if (b.edge == Edge::right) want2 = s2(x) * s0(y), want3 = s3(x) * s0(y);
        else if (b.edge == Edge::top) want2 = s0(x) * s2(y), want3 = s0(x) * s3(y);
        else want2 = s0(x) * s2(y), want3 = -s0(x) * s3(y);
        m2 = std::max(m2, std::abs(d.d2[k] - want2));
        m3 = std::max(m3, std::abs(d.d3[k] - want3));
      }
      e2.push_back(m2);
      e3.push_back(m3);
    }
    for (std::size_t k = 0; k + 1 < e2.size(); ++k) {
      CHECK(std::log2(e2[k] / e2[k + 1]) >= 1.7);
      CHECK(std::log2(e3[k] / e3[k + 1]) >= 1.7);
    }
  }
  SUBCASE("flat-edge identities") {
    // u = (x^2 + x^3) e^y: u = d_nu u = 0 on the left edge
    std::vector<double> err;
    for (int n : {31, 63}) {
      GridDomain gg(n);
      auto u = ScalarField::sample(gg, [](double x, double y) { return cplx((x * x + x * x * x) * std::exp(y)); });
      FieldDerivatives du(gg, u, 2);
      ScalarField lap(gg);
      for (int j = 0; j <= n + 1; ++j)
        for (int i = 0; i <= n + 1; ++i) lap(i, j) = du(2, 0, i, j) + du(0, 2, i, j);
      double e = 0;
      for (int k = 1; k <= n; ++k) {
        BoundaryNode b{Edge::left, k, 0, k, gg.coord(k)};
        e = std::max(e, std::abs(lap(0, k) - normal_derivative(gg, u, b, 2)));
        e = std::max(e, std::abs(normal_derivative(gg, lap, b, 1) - normal_derivative(gg, u, b, 3)));
        e = std::max(e, std::abs(normal_derivative(gg, u, b, 3) + 6.0 * std::exp(gg.coord(k))));
      }
      err.push_back(e);
    }
    CHECK(err[1] < 0.35 * err[0]);
    CHECK(err[1] < 1e-2);
  }
}

TEST_CASE("csv round trips") {
  GridDomain g(7);
  auto u = ScalarField::sample(g, [](double x, double y) { return cplx(x - y, x * y); });
  std::stringstream fs;
  write_field_csv(fs, g, u);
  auto v = read_field_csv(fs, g);
  CHECK((u - v).max_abs() == 0.0);
  auto d = dn_traces(g, u);
  std::stringstream ds;
  write_dn_csv(ds, d);
  auto e = read_dn_csv(ds, g);
  CHECK((d - e).max_abs() == 0.0);
  std::stringstream bad("edge,s,order,re,im\nleft,0.5,2,1,0\n");
  CHECK_THROWS_AS(read_dn_csv(bad, g), ConfigError);
}
