#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "biharm/cgo.hpp"
#include "biharm/clamped_solver.hpp"
#include "biharm/error.hpp"
#include "biharm/null_recovery.hpp"
#include "biharm/reconstruct.hpp"
#include "biharm/semilinear.hpp"
#include "biharm/sym_tensor.hpp"

namespace biharm::cli {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

std::string csv_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

GridDomain grid_from(const Config& cfg, long def_n) {
  const int n = static_cast<int>(cfg.integer("grid.n", def_n, 5, 511));
  std::vector<GammaSegment> gamma;
  for (const auto& w : cfg.words("grid.gamma", {"left:0:1"})) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, w, boost::algorithm::is_any_of(":"));
    if (parts.size() != 3) throw ConfigError("grid.gamma: expected edge:from:to, got '" + w + "'");
    GammaSegment s;
    try {
      s.edge = edge_from_name(parts[0]);
      s.from = std::stod(parts[1]);
      s.to = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("grid.gamma: cannot parse '" + w + "'");
    }
    if (!(s.from >= 0.0 && s.from <= s.to && s.to <= 1.0))
      throw ConfigError("grid.gamma: segment '" + w + "' is not within [0, 1]");
    gamma.push_back(s);
  }
  return GridDomain(n, gamma);
}

SymTensor random_tensor(std::mt19937_64& rng, int n, int rank) {
  std::normal_distribution<double> g(0.0, 1.0);
  SymTensor t(n, rank);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = cplx(g(rng), g(rng));
  return t;
}

NullVector random_null_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
  for (auto& v : a) v = g(rng);
  if (a[0] < 0) for (auto& v : a) v = -v;
  for (auto& v : b) v = g(rng);
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) aa += a[i] * a[i];
  for (int pass = 0; pass < 2; ++pass) {
    ab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i];
    for (std::size_t i = 0; i < a.size(); ++i) b[i] -= ab / aa * a[i];
  }
  for (double v : b) bb += v * v;
  for (auto& v : b) v *= std::sqrt(aa / bb);
  return make_null_vector(a, b);
}

void fail_if(Outcome& o, bool bad, const std::string& what) {
  if (bad) o.failures.push_back(what);
}

CoefficientModel load_model(RunContext& ctx, const std::string& key) {
  auto path = ctx.cfg.file(key);
  if (!path) return {};
  return coefficient_model_from_json(ctx.read_input_json(key, *path));
}

CoefficientModel require_model(RunContext& ctx, const std::string& key) {
  if (!ctx.cfg.file(key)) throw ConfigError(key + " is required");
  return load_model(ctx, key);
}

// true - reference at Taylor order k, as a W difference
WDifference order_difference(const CoefficientModel& truth, const CoefficientModel& ref, int k) {
  WDifference w;
  w.order = k;
  for (const auto& t : truth.terms())
    if (t.k == k) w.by_l[static_cast<std::size_t>(t.l)] += t.field;
  for (const auto& t : ref.terms())
    if (t.k == k) w.by_l[static_cast<std::size_t>(t.l)] += t.field * cplx(-1.0);
  return w;
}

struct FieldError {
  double abs = 0;
  double scale = 0;
};

FieldError w_error(const GridDomain& grid, const WDifference& got, const WDifference& want) {
  FieldError e;
  for (std::size_t l = 0; l < 4; ++l) {
    const auto g = TensorField::sample(grid, got.by_l[l]);
    const auto w = TensorField::sample(grid, want.by_l[l]);
    e.abs = std::max(e.abs, (g - w).max_abs());
    e.scale = std::max(e.scale, w.max_abs());
  }
  return e;
}

// ---- tensor-selftest

Outcome run_tensor_selftest(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const int trials = static_cast<int>(cfg.integer("selftest.trials", 1000, 1, 1000000));
  const auto dims = cfg.integers("selftest.dims", {2, 3, 4, 5, 6}, 2, 6);
  const int pairs = static_cast<int>(cfg.integer("selftest.isotropic_pairs", 10000, 1, 10000000));
  const double decomp_budget = cfg.real("selftest.decomposition_budget_s", 5.0, 0.0, 1e6);
  const double recovery_budget = cfg.real("selftest.recovery_budget_s", 10.0, 0.0, 1e6);
  cfg.reject_unknown();

  Outcome o;
  std::ostringstream csv;
  csv << "suite,n,rank,trials,max_error,threshold,pass\n";
  auto row = [&](const std::string& suite, int n, int rank, int count, double err, double thr) {
    const bool ok = err < thr;
    csv << suite << ',' << n << ',' << rank << ',' << count << ',' << csv_real(err) << ',' << csv_real(thr)
        << ',' << (ok ? 1 : 0) << '\n';
    fail_if(o, !ok, suite + " n=" + std::to_string(n) + " rank=" + std::to_string(rank));
    return nlohmann::json{{"suite", suite}, {"n", n}, {"rank", rank}, {"trials", count},
                          {"max_error", err}, {"threshold", thr}, {"pass", ok}};
  };
  nlohmann::json rows = nlohmann::json::array();

  std::mt19937_64 rng(ctx.seed);
  const auto t0 = std::chrono::steady_clock::now();
  ctx.timed("decomposition", [&] {
    for (int n : dims)
      for (int rank = 2; rank <= 3; ++rank) {
        double rt = 0, tf = 0, uq = 0;
        for (int t = 0; t < trials; ++t) {
          auto a = random_tensor(rng, n, rank);
          auto parts = trace_free_decompose(a);
          rt = std::max(rt, (a - (parts.trace_free + i_delta(parts.isotropic))).max_abs());
          tf = std::max(tf, j_delta(parts.trace_free).max_abs());
          uq = std::max(uq, trace_free_decompose(parts.trace_free).isotropic.max_abs());
        }
        rows.push_back(row("round_trip", n, rank, trials, rt, 1e-12));
        rows.push_back(row("trace_free", n, rank, trials, tf, 1e-12));
        rows.push_back(row("uniqueness", n, rank, trials, uq, 1e-12));
      }
  });
  const double decomp_s = RunContext::seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  ctx.timed("null_recovery", [&] {
    for (int n : dims)
      for (int m = 1; m <= 3; ++m) {
        double err = 0;
        for (int t = 0; t < trials; ++t) {
          auto f = random_tensor(rng, n, m);
          if (m >= 2) f = trace_free_decompose(f).trace_free;
          auto got = recover_general([&f](const NullVector& xi) { return eval_pairing(f, xi.xi()); }, n, m);
          err = std::max(err, (got - f).max_abs() / f.max_abs());
        }
        rows.push_back(row("recovery", n, m, trials, err, 1e-10));
      }
    for (int n : dims)
      for (int m = 2; m <= 3; ++m) {
        auto probes = standard_probe_set(n, m);
        auto full = monomial_basis(n, m);
        const int nullity = static_cast<int>(full.size()) - numerical_rank(probe_matrix(probes.vectors(), full));
        const int want = m == 2 ? 1 : n;
        std::vector<SymTensor> iso;
        if (m == 2) iso.push_back(i_delta(SymTensor::scalar(n, 1.0)));
        else for (int i = 0; i < n; ++i) iso.push_back(i_delta(SymTensor::unit_vector(n, i)));
        const double leak = probe_matrix(probes.vectors(), iso).cwiseAbs().maxCoeff();
        const bool ok = nullity == want && leak < 1e-12;
        rows.push_back({{"suite", "nullity"}, {"n", n}, {"rank", m}, {"nullity", nullity},
                        {"expected", want}, {"isotropic_residual", leak}, {"pass", ok}});
        csv << "nullity," << n << ',' << m << ",1," << nullity - want << ",0," << (ok ? 1 : 0) << '\n';
        fail_if(o, !ok, "nullity n=" + std::to_string(n) + " m=" + std::to_string(m));
      }
  });
  const double recovery_s = RunContext::seconds_since(t1);

  ctx.timed("isotropic_invisibility", [&] {
    double worst3 = 0, worst2 = 0;
    for (int t = 0; t < pairs; ++t) {
      const int n = dims[static_cast<std::size_t>(t) % dims.size()];
      auto a = random_tensor(rng, n, 1);
      auto c = random_tensor(rng, n, 0);
      auto xi = random_null_vector(rng, n);
      worst3 = std::max(worst3, std::abs(eval_pairing(i_delta(a), xi.xi())) / (a.norm() * std::pow(xi.norm(), 3)));
      worst2 = std::max(worst2, std::abs(eval_pairing(i_delta(c), xi.xi())) / (c.norm() * std::pow(xi.norm(), 2)));
    }
    rows.push_back(row("isotropic_invisibility", 0, 3, pairs, worst3, 1e-12));
    rows.push_back(row("isotropic_invisibility", 0, 2, pairs, worst2, 1e-12));
  });

  ctx.write_text("selftest.csv", csv.str());
  const bool decomp_fast = decomp_s < decomp_budget, recovery_fast = recovery_s < recovery_budget;
  fail_if(o, !decomp_fast, "decomposition runtime budget");
  fail_if(o, !recovery_fast, "null recovery runtime budget");
  o.results = {{"checks", rows},
               {"within_budget", {{"decomposition", decomp_fast}, {"null_recovery", recovery_fast}}}};
  return o;
}

// ---- solve

double s0(double t) { return std::pow(std::sin(kPi * t), 2); }
double s2(double t) { return 2 * kPi * kPi * std::cos(2 * kPi * t); }
double s4(double t) { return -8 * std::pow(kPi, 4) * std::cos(2 * kPi * t); }

struct Manufactured {
  std::function<cplx(double, double)> u;
  std::function<std::array<cplx, 2>(double, double)> grad;
  std::function<cplx(double, double)> source;
  bool zero_data;
};

Manufactured manufactured(const std::string& name) {
  if (name == "sinsq")
    return {[](double x, double y) { return cplx(s0(x) * s0(y)); },
            nullptr,
            [](double x, double y) { return cplx(s4(x) * s0(y) + 2 * s2(x) * s2(y) + s0(x) * s4(y)); },
            true};
  return {[](double x, double y) { return cplx(std::exp(x) * std::cos(2 * y)); },
          [](double x, double y) {
            return std::array<cplx, 2>{std::exp(x) * std::cos(2 * y), -2 * std::exp(x) * std::sin(2 * y)};
          },
          [](double x, double y) { return cplx(9 * std::exp(x) * std::cos(2 * y)); },
          false};
}

Outcome run_solve(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto levels = cfg.integers("solve.levels", {15, 31, 63}, 5, 511);
  const auto names = cfg.words("solve.solutions", {"sinsq", "expcos"});
  const double lo = cfg.real("solve.order_min", 1.7, 0.0, 10.0);
  const double hi = cfg.real("solve.order_max", 2.3, 0.0, 10.0);
  cfg.reject_unknown();
  for (const auto& n : names)
    if (n != "sinsq" && n != "expcos") throw ConfigError("solve.solutions: unknown solution '" + n + "'");
  if (levels.size() < 2) throw ConfigError("solve.levels needs at least two grids");
  std::sort(levels.begin(), levels.end());

  Outcome o;
  std::ostringstream csv;
  csv << "solution,N,h,max_error\n";
  nlohmann::json sols = nlohmann::json::object();
  std::vector<std::vector<double>> errs(names.size());
  std::vector<double> hs;
  double zero_max = 0;
  ctx.timed("convergence", [&] {
    for (int n : levels) {
      GridDomain g(n);
      ClampedSolver solver(g);
      hs.push_back(g.spacing());
      zero_max = std::max(zero_max, solver.solve(BoundaryData(g)).max_abs());
      for (std::size_t s = 0; s < names.size(); ++s) {
        auto m = manufactured(names[s]);
        auto src = ScalarField::sample(g, m.source);
        auto data = m.zero_data ? BoundaryData(g) : BoundaryData::traces_of(g, m.u, m.grad);
        auto u = solver.solve(src, data);
        double e = 0;
        for (int j = 0; j <= n + 1; ++j)
          for (int i = 0; i <= n + 1; ++i) e = std::max(e, std::abs(u(i, j) - m.u(g.coord(i), g.coord(j))));
        errs[s].push_back(e);
        csv << names[s] << ',' << n << ',' << csv_real(g.spacing()) << ',' << csv_real(e) << '\n';
      }
    }
  });
  for (std::size_t s = 0; s < names.size(); ++s) {
    nlohmann::json orders = nlohmann::json::array();
    for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
      const double p = std::log(errs[s][k] / errs[s][k + 1]) / std::log(hs[k] / hs[k + 1]);
      orders.push_back(p);
      fail_if(o, !(p >= lo && p <= hi), names[s] + " order " + std::to_string(p));
    }
    // least-squares slope of log e against log h
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < hs.size(); ++k) { mx += std::log(hs[k]); my += std::log(errs[s][k]); }
    mx /= static_cast<double>(hs.size());
    my /= static_cast<double>(hs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < hs.size(); ++k) {
      sxy += (std::log(hs[k]) - mx) * (std::log(errs[s][k]) - my);
      sxx += std::pow(std::log(hs[k]) - mx, 2);
    }
    sols[names[s]] = {{"max_errors", errs[s]}, {"observed_orders", orders}, {"fitted_slope", sxy / sxx}};
  }
  fail_if(o, !(zero_max <= 1e-12), "zero data gives nonzero solution");
  ctx.write_text("convergence.csv", csv.str());
  o.results = {{"levels", levels}, {"h", hs}, {"solutions", sols}, {"zero_data_max", zero_max},
               {"order_bounds", {lo, hi}}};
  return o;
}

// ---- cgo-decay

Amplitude amplitude_from(const Config& cfg) {
  const auto a = cfg.choice("probe.amplitude", "one", {"one", "x1", "x2"});
  if (a == "x1") return Amplitude::coordinate(0);
  if (a == "x2") return Amplitude::coordinate(1);
  return Amplitude::one();
}

Outcome run_cgo_decay(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto grid = grid_from(cfg, 63);
  const double margin = cfg.real("grid.margin", 0.2, 1e-3, 0.5);
  const auto taus = cfg.reals("probe.taus", {1.0, 2.0}, 1e-3, 1e3);
  const auto h_user = cfg.reals("probe.h_list", {}, 1e-4, 10.0);
  const auto amp = amplitude_from(cfg);
  const double region = cfg.real("probe.region_x1", 0.5, 0.0, 1.0);
  const double gamma_tol = cfg.real("probe.gamma_tol", 1e-6, 0.0, 1.0);
  const double min_r2 = cfg.real("probe.min_r2", 0.9, 0.0, 1.0);
  cfg.reject_unknown();

  Outcome o;
  ClampedSolver solver = ctx.timed("factorize", [&] { return ClampedSolver(grid); });
  const Cutoff chi(grid, margin);
  std::ostringstream csv;
  csv << "tau,h,sup,gamma_u,gamma_dnu\n";
  nlohmann::json profiles = nlohmann::json::array();
  for (double tau : taus) {
    auto xi = NullVector::from_complex({kI * tau, cplx(tau)});
    auto hs = h_user.empty() ? default_h_list(grid, xi) : h_user;
    if (hs.size() < 3) throw ConfigError("probe.h_list: fewer than three admissible h values");
    auto p = ctx.timed("decay tau=" + csv_real(tau),
                       [&] { return remainder_decay_profile(solver, xi, amp, chi, hs, region, ctx.workers); });
    std::vector<GammaTraces> traces(hs.size());
    parallel_for(hs.size(), ctx.workers, [&](std::size_t k) {
      traces[k] = gamma_traces(grid, build_cgo(solver, xi, hs[k], amp, chi));
    });
    nlohmann::json rows = nlohmann::json::array();
    double worst = 0;
    for (std::size_t k = 0; k < p.rows.size(); ++k) {
      const auto& t = traces[k];
      worst = std::max({worst, t.max_u, t.max_dnu});
      csv << csv_real(tau) << ',' << csv_real(p.rows[k].h) << ',' << csv_real(p.rows[k].sup) << ','
          << csv_real(t.max_u) << ',' << csv_real(t.max_dnu) << '\n';
      rows.push_back({{"h", p.rows[k].h}, {"sup", p.rows[k].sup}, {"gamma_u", t.max_u}, {"gamma_dnu", t.max_dnu}});
    }
    bool certified = true;
    try {
      certify_decay(p);
    } catch (const DecayViolation&) {
      certified = false;
    }
    const std::string tag = "tau=" + csv_real(tau);
    fail_if(o, !(worst < gamma_tol), tag + " Gamma traces " + csv_real(worst));
    fail_if(o, !p.strictly_decreasing || !certified, tag + " not strictly decreasing");
    fail_if(o, !(p.slope < 0), tag + " slope not negative");
    fail_if(o, !(p.r_squared > min_r2), tag + " R^2 " + csv_real(p.r_squared));
    profiles.push_back({{"tau", tau}, {"rows", rows}, {"slope", p.slope}, {"intercept", p.intercept},
                        {"r_squared", p.r_squared}, {"strictly_decreasing", p.strictly_decreasing},
                        {"max_gamma_trace", worst}});
  }
  ctx.write_text("decay.csv", csv.str());
  o.results = {{"N", grid.N()}, {"margin", margin}, {"region_x1", region}, {"amplitude", amp.tag()},
               {"profiles", profiles}};
  return o;
}

// ---- local-extract

double rel_err(const SymTensor& got, const SymTensor& want) {
  const double d = (got - want).max_abs();
  return want.max_abs() > 0 ? d / want.max_abs() : d;
}

Outcome run_local_extract(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto grid = grid_from(cfg, 63);
  ExtractionOptions opt;
  opt.margin = cfg.real("grid.margin", 0.2, 1e-3, 0.5);
  opt.h_list = cfg.reals("probe.h_list", {}, 1e-4, 10.0);
  const auto x0 = cfg.reals("local.x0", {0.85, 0.5}, 0.0, 1.0);
  if (x0.size() != 2) throw ConfigError("local.x0 needs two coordinates");
  opt.x0 = {x0[0], x0[1]};
  opt.include_remainder = cfg.flag("local.include_remainder", false);
  opt.workers = ctx.workers;
  const auto source = cfg.choice("local.source", "random", {"random", "file", "isotropic"});
  const double tol = cfg.real("local.tol", 0.01, 0.0, 1e6);
  PointCoefficients a = {SymTensor(2, 0), SymTensor(2, 1), SymTensor(2, 2), SymTensor(2, 3)};
  if (source == "file") {
    auto path = cfg.file("local.file");
    if (!path) throw ConfigError("local.file is required for local.source = file");
    const auto j = ctx.read_input_json("local.file", *path);
    for (int l = 0; l <= 3; ++l) {
      const auto key = "A" + std::to_string(l);
      if (!j.contains(key)) continue;
      auto t = sym_tensor_from_json(j.at(key));
      if (t.dim() != 2 || t.rank() != l) throw ConfigError("local.file: " + key + " must have n = 2, rank " + key.substr(1));
      a[static_cast<std::size_t>(l)] = t;
    }
  }
  cfg.reject_unknown();
  if (source == "random") {
    std::mt19937_64 rng(ctx.seed);
    for (int l = 0; l <= 3; ++l) a[static_cast<std::size_t>(l)] = random_tensor(rng, 2, l);
  } else if (source == "isotropic") {
    a[3] = i_delta(SymTensor::unit_vector(2, 0));
  }

  ClampedSolver solver = ctx.timed("factorize", [&] { return ClampedSolver(grid); });
  auto r = ctx.timed("cascade", [&] { return local_cascade(a, opt, solver); });
  Outcome o;
  const std::array<const SymTensor*, 4> got = {&r.a0, &r.a1, &r.a2, &r.a3};
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t l = 0; l < 4; ++l) {
    const double e = rel_err(*got[l], a[l]);
    per["A" + std::to_string(l)] = {{"true", to_json(a[l])}, {"recovered", to_json(*got[l])}, {"relative_error", e}};
    fail_if(o, !(e < tol), "A" + std::to_string(l) + " relative error " + csv_real(e));
  }
  o.results = {{"N", grid.N()}, {"source", source}, {"x0", x0}, {"coefficients", per},
               {"trace_free", {{"A3", to_json(r.tf3)}, {"A2", to_json(r.tf2)}}},
               {"isotropic", {{"a1", to_json(r.iso1)}, {"a0", to_json(r.iso0)}}},
               {"max_condition", r.max_condition}, {"max_fit_residual", r.max_fit_residual},
               {"probes_used", r.probes_used}, {"tolerance", tol}};
  return o;
}

// ---- linearize

DifferenceScheme scheme_from(const Config& cfg, const std::string& key) {
  return cfg.choice(key, "forward", {"forward", "symmetric"}) == "symmetric" ? DifferenceScheme::symmetric
                                                                           : DifferenceScheme::forward;
}

Outcome run_linearize(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto grid = grid_from(cfg, 31);
  const auto model = require_model(ctx, "model.true");
  const int m = static_cast<int>(cfg.integer("linearization.m", 2, 2, 3));
  const auto scheme = scheme_from(cfg, "linearization.scheme");
  const bool sym = scheme == DifferenceScheme::symmetric;
  const auto eps = cfg.reals("linearization.eps", sym ? std::vector<double>{0.08, 0.04, 0.02}
                                                      : std::vector<double>{4e-3, 2e-3, 1e-3}, 1e-8, 1.0);
  const double ratio_lo = cfg.real("linearization.ratio_min", sym ? 3.5 : 1.7, 0.0, 1e3);
  const double ratio_hi = cfg.real("linearization.ratio_max", sym ? 4.5 : 2.3, 0.0, 1e3);
  const int tuples = static_cast<int>(cfg.integer("linearization.equal_tuples", 50, 0, 100000));
  const int members = static_cast<int>(cfg.integer("linearization.test_functions", 6, 1, 64));
  const double equal_tol = cfg.real("linearization.equal_tol", 1e-8, 0.0, 1.0);
  cfg.reject_unknown();
  for (const auto& t : model.terms())
    if (t.k != m - 1) throw ConfigError("model.true: linearize needs terms of Taylor order m - 1 only");
  if (eps.size() < 2) throw ConfigError("linearization.eps needs at least two steps");
  for (std::size_t k = 0; k + 1 < eps.size(); ++k)
    if (std::abs(eps[k] / eps[k + 1] - 2.0) > 1e-12) throw ConfigError("linearization.eps must halve at each step");

  auto solver = std::make_shared<const ClampedSolver>(ctx.timed("factorize", [&] { return ClampedSolver(grid); }));
  const DiscreteModel dm(model, grid);
  auto tests = ctx.timed("test functions", [&] {
    return TestFunctionSet::random(*solver, std::max(members, m), ctx.seed);
  });
  std::vector<BoundaryData> dirs;
  std::vector<ScalarField> vs;
  for (int k = 0; k < m; ++k) {
    dirs.push_back(tests[static_cast<std::size_t>(k)].data);
    vs.push_back(tests[static_cast<std::size_t>(k)].v);
  }
  const auto direct = ctx.timed("direct", [&] {
    return linearized_response(*solver, order_difference(model, CoefficientModel{}, m - 1), vs);
  });
  const std::function<ScalarField(const BoundaryData&)> field = [&](const BoundaryData& d) {
    return solve_semilinear(*solver, dm, d).u;
  };

  Outcome o;
  std::vector<double> defects;
  ctx.timed("mixed differences", [&] {
    for (double e : eps) {
      auto w = mixed_difference(field, dirs, e, scheme, ctx.workers);
      double d = 0;
      for (int j = 0; j <= grid.N() + 1; ++j)
        for (int i = 0; i <= grid.N() + 1; ++i) d = std::max(d, std::abs(w(i, j) - direct(i, j)));
      defects.push_back(d);
    }
  });
  std::ostringstream csv;
  csv << "eps,defect,ratio\n";
  std::vector<double> ratios;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    csv << csv_real(eps[k]) << ',' << csv_real(defects[k]) << ',';
    if (k > 0) {
      ratios.push_back(defects[k - 1] / defects[k]);
      csv << csv_real(ratios.back());
      fail_if(o, !(ratios.back() >= ratio_lo && ratios.back() <= ratio_hi),
              "eps-halving ratio " + csv_real(ratios.back()));
    }
    csv << '\n';
  }
  ctx.write_text("linearize.csv", csv.str());

  // equal models: the boundary functional of the DN difference vanishes
  double equal_max = 0;
  if (tuples > 0) {
    auto truth = make_dn_oracle(solver, model);
    auto same = make_dn_oracle(std::make_shared<const ClampedSolver>(grid), model);
    const std::function<DnData(const BoundaryData&)> diff = [&](const BoundaryData& d) {
      return same(d) - truth(d);
    };
    std::mt19937_64 rng(ctx.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, tests.size() - 1);
    std::vector<std::vector<std::size_t>> picks(static_cast<std::size_t>(tuples));
    for (auto& p : picks)
      for (int k = 0; k <= m; ++k) p.push_back(pick(rng));
    std::vector<double> values(picks.size());
    ctx.timed("equal models", [&] {
      parallel_for(picks.size(), ctx.workers, [&](std::size_t t) {
        std::vector<BoundaryData> ds;
        for (int k = 1; k <= m; ++k) ds.push_back(tests[picks[t][static_cast<std::size_t>(k)]].data);
        auto dn = mixed_difference(diff, ds, eps.back(), scheme);
        values[t] = std::abs(boundary_functional(grid, dn, tests[picks[t][0]].v));
      });
    });
    equal_max = *std::max_element(values.begin(), values.end());
    fail_if(o, !(equal_max < equal_tol), "equal-model boundary functional " + csv_real(equal_max));
  }
  o.results = {{"N", grid.N()}, {"m", m}, {"scheme", sym ? "symmetric" : "forward"}, {"eps", eps},
               {"defects", defects}, {"ratios", ratios}, {"ratio_bounds", {ratio_lo, ratio_hi}},
               {"direct_max", direct.max_abs()},
               {"equal_models", {{"tuples", tuples}, {"max_abs", equal_max}, {"tolerance", equal_tol}}}};
  return o;
}

// ---- invert

Outcome run_invert(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto grid = grid_from(cfg, 31);
  const auto truth_model = require_model(ctx, "model.true");
  const auto ref_model = load_model(ctx, "model.reference");
  const auto mode = cfg.choice("recovery.mode", "single", {"single", "cascade"});
  const int m = static_cast<int>(cfg.integer("recovery.m", 2, 2, 5));
  const int m_max = static_cast<int>(cfg.integer("recovery.m_max", 3, 2, 5));
  const int degree = static_cast<int>(cfg.integer("recovery.degree", 0, 0, 4));
  const auto ranks = cfg.integers("recovery.ranks", {0, 1, 2, 3}, 0, 3);
  const int members = static_cast<int>(cfg.integer("recovery.test_functions", 6, 2, 64));
  const int modes = static_cast<int>(cfg.integer("recovery.modes", 3, 0, 32));
  const double clearance = cfg.real("recovery.clearance", 0.1, 0.0, 0.5);
  RecoveryOptions ropt;
  ropt.eps = cfg.real("recovery.eps", 1e-3, 1e-8, 1.0);
  ropt.scheme = scheme_from(cfg, "recovery.scheme");
  ropt.lambda_rel = cfg.real("recovery.lambda", 1e-8, 0.0, 1.0);
  ropt.max_v0 = static_cast<std::size_t>(cfg.integer("recovery.max_v0", 0, 0, 64));
  ropt.workers = ctx.workers;
  CascadeOptions copt;
  copt.recovery = ropt;
  copt.max_residual = cfg.real("recovery.max_residual", 0.25, 0.0, 1e6);
  const double rel_tol = cfg.real("recovery.rel_tol", 0.1, 0.0, 1e6);
  const double abs_tol = cfg.real("recovery.abs_tol", 1e-6, 0.0, 1e6);
  cfg.reject_unknown();

  auto basis = CoefficientBasis::polynomial(ranks, degree);
  basis.check_independent(grid);
  auto solver = std::make_shared<const ClampedSolver>(ctx.timed("factorize", [&] { return ClampedSolver(grid); }));
  auto tests = ctx.timed("test functions", [&] {
    return TestFunctionSet::random(*solver, members, ctx.seed, modes, clearance);
  });
  const auto truth = make_dn_oracle(solver, truth_model);
  auto make_ref = [&](const CoefficientModel& mdl) { return make_dn_oracle(solver, mdl); };

  std::vector<Recovery> recs;
  if (mode == "single") {
    recs.push_back(ctx.timed("recover", [&] { return recover_w(truth, make_ref(ref_model), m, basis, tests, ropt); }));
  } else {
    recs = ctx.timed("cascade", [&] { return taylor_cascade(truth, ref_model, make_ref, m_max, basis, tests, copt); });
  }

  Outcome o;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : recs) {
    auto j = to_json(r, basis, ropt);
    const auto want = order_difference(truth_model, ref_model, r.m - 1);
    const auto e = w_error(grid, r.w, want);
    const bool zero = e.scale == 0.0;
    const double err = zero ? e.abs : e.abs / e.scale;
    const bool ok = zero ? err < abs_tol : err < rel_tol;
    j["expected_scale"] = e.scale;
    j["error"] = err;
    j["error_kind"] = zero ? "absolute" : "relative";
    j["pass"] = ok;
    fail_if(o, !ok, "order m=" + std::to_string(r.m) + " error " + csv_real(err));
    out.push_back(j);
    std::ostringstream csv;
    write_pairs_csv(csv, r);
    ctx.write_text("pairs_m" + std::to_string(r.m) + ".csv", csv.str());
  }
  nlohmann::json members_json = nlohmann::json::array();
  for (std::size_t k = 0; k < tests.size(); ++k)
    members_json.push_back({{"kind", kind_name(tests[k].kind)}, {"tag", tests[k].tag}});
  o.results = {{"N", grid.N()}, {"mode", mode}, {"basis_size", basis.size()}, {"test_functions", members_json},
               {"recoveries", out}, {"tolerances", {{"relative", rel_tol}, {"absolute", abs_tol}}}};
  return o;
}

}  // namespace

void RunContext::log(const std::string& msg) const {
  if (verbose) std::clog << "[" << std::fixed << std::setprecision(2) << seconds_since(start) << "s] " << msg << '\n';
}

double RunContext::seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void RunContext::write_json(const std::string& name, const nlohmann::json& j) {
  write_text(name, j.dump(2) + "\n");
}

void RunContext::write_text(const std::string& name, const std::string& text) {
  std::ofstream f(out / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + (out / name).string());
  f << text;
  if (!f) throw ConfigError("write failed for " + (out / name).string());
  if (std::find(outputs.begin(), outputs.end(), name) == outputs.end()) outputs.push_back(name);
}

nlohmann::json RunContext::read_input_json(const std::string& key, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
  inputs[key] = {{"path", path}, {"fnv1a64", hex64(fnv1a64(ss.str()))}, {"content", j}};
  return j;
}

Outcome tensor_selftest(RunContext& ctx) { return run_tensor_selftest(ctx); }
Outcome solve_study(RunContext& ctx) { return run_solve(ctx); }
Outcome cgo_decay(RunContext& ctx) { return run_cgo_decay(ctx); }
Outcome local_extract(RunContext& ctx) { return run_local_extract(ctx); }
Outcome linearize(RunContext& ctx) { return run_linearize(ctx); }
Outcome invert(RunContext& ctx) { return run_invert(ctx); }

}  // namespace biharm::cli
