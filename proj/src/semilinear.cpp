#include "biharm/semilinear.hpp"

#include <cmath>
#include <fstream>

#include "biharm/error.hpp"

namespace biharm {

void CoefficientModel::add(int l, int k, FieldSpec field) {
  if (l < 0 || l > 3) throw UnsupportedRank("coefficient order l must be 0..3");
  if (k < 1) throw ConstraintError("Taylor order k must be >= 1 so that A(x, 0) = 0");
  if (field.rank() != l) throw DimensionMismatch("A^{(l)} must be a rank-l tensor field");
  for (auto& t : terms_)
    if (t.l == l && t.k == k) {
      t.field += field;
      return;
    }
  terms_.push_back({l, k, std::move(field)});
}

int CoefficientModel::k_max() const {
  int k = 0;
  for (const auto& t : terms_) k = std::max(k, t.k);
  return k;
}

CoefficientModel CoefficientModel::orders(int k_lo, int k_hi) const {
  CoefficientModel out;
  for (const auto& t : terms_)
    if (t.k >= k_lo && t.k <= k_hi) out.add(t.l, t.k, t.field);
  return out;
}

CoefficientModel& CoefficientModel::operator+=(const CoefficientModel& o) {
  for (const auto& t : o.terms_) add(t.l, t.k, t.field);
  return *this;
}

nlohmann::json to_json(const CoefficientModel& m) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : m.terms()) terms.push_back({{"l", t.l}, {"k", t.k}, {"field", to_json(t.field)}});
  return {{"terms", terms}};
}

CoefficientModel coefficient_model_from_json(const nlohmann::json& j) {
  try {
    const auto& terms = j.is_array() ? j : j.at("terms");
    CoefficientModel m;
    for (const auto& t : terms)
      m.add(t.at("l").get<int>(), t.at("k").get<int>(), field_spec_from_json(t.at("field")));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model JSON: ") + e.what());
  }
}

CoefficientModel load_coefficient_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file " + path + " is not valid JSON: " + e.what());
  }
  return coefficient_model_from_json(j);
}

DiscreteModel::DiscreteModel(const CoefficientModel& model, const GridDomain& grid)
    : grid_(grid), k_max_(model.k_max()), zero_(model.is_zero()) {
  for (int l = 0; l <= 3; ++l) {
    fields_[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(k_max_));
    present_[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(k_max_), false);
  }
  for (const auto& t : model.terms()) {
    const auto l = static_cast<std::size_t>(t.l), k = static_cast<std::size_t>(t.k - 1);
    fields_[l][k] = TensorField::sample(grid, t.field);
    present_[l][k] = true;
  }
}

const TensorField* DiscreteModel::coefficient(int l, int k) const {
  if (l < 0 || l > 3 || k < 1 || k > k_max_) return nullptr;
  const auto li = static_cast<std::size_t>(l), ki = static_cast<std::size_t>(k - 1);
  return present_[li][ki] ? &fields_[li][ki] : nullptr;
}

cplx contract_derivatives(const SymTensor& a, const FieldDerivatives& d, int i, int j) {
  const int l = a.rank();
  if (l == 0) return a[0] * d(0, 0, i, j);
  const auto& tab = a.table();
  cplx s{};
  for (std::size_t q = 0; q < tab.size(); ++q) {
    if (a[q] == cplx(0.0)) continue;
    s += static_cast<double>(tab.multiplicity[q]) * a[q] *
         d.partial(std::span<const int>(tab.sorted[q].data(), static_cast<std::size_t>(l)), i, j);
  }
  // i^{-l}
  static const std::array<cplx, 4> inv_i_pow = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
  return inv_i_pow[static_cast<std::size_t>(l)] * s;
}

ScalarField apply_nonlinear_operator(const DiscreteModel& model, const ScalarField& u) {
  const auto& grid = model.grid();
  ScalarField out(grid);
  if (model.is_zero()) return out;
  int max_order = 0;
  for (int l = 0; l <= 3; ++l)
    for (int k = 1; k <= model.k_max(); ++k)
      if (model.coefficient(l, k)) max_order = std::max(max_order, l);
  const FieldDerivatives d(grid, u, max_order);
  std::vector<double> inv_fact(static_cast<std::size_t>(model.k_max() + 1), 1.0);
  for (std::size_t k = 1; k < inv_fact.size(); ++k) inv_fact[k] = inv_fact[k - 1] / static_cast<double>(k);
  for (int j = 0; j <= grid.N() + 1; ++j)
    for (int i = 0; i <= grid.N() + 1; ++i) {
      const cplx z = u(i, j);
      cplx total{};
      for (int l = 0; l <= 3; ++l) {
        cplx zk = 1.0;
        cplx coeff{};
        bool any = false;
        for (int k = 1; k <= model.k_max(); ++k) {
          zk *= z;
          const TensorField* a = model.coefficient(l, k);
          if (!a) continue;
          any = true;
          coeff += zk * inv_fact[static_cast<std::size_t>(k)] *
                   contract_derivatives(a->at(i, j), d, i, j);
        }
        if (any) total += coeff;
      }
      out(i, j) = total;
    }
  return out;
}

SemilinearSolution solve_semilinear(const ClampedSolver& solver, const DiscreteModel& model,
                                    const BoundaryData& data, const PicardOptions& opt) {
  if (!(solver.grid() == model.grid())) throw DimensionMismatch("model and solver grids differ");
  if (data.max_abs() > opt.delta_max)
    throw ConstraintError("boundary data amplitude " + std::to_string(data.max_abs()) +
                          " exceeds delta_max " + std::to_string(opt.delta_max));
  SemilinearSolution sol;
  sol.u = solver.solve(data);
  sol.log.iterations = 1;
  if (model.is_zero()) return sol;
  const double start = sol.u.max_abs();
  double prev = INFINITY;
  for (int it = 1; it < opt.max_iter; ++it) {
    ScalarField source = apply_nonlinear_operator(model, sol.u) * cplx(-1.0);
    ScalarField next = solver.solve(source, data);
    const double inc = (next - sol.u).max_abs();
    sol.u = std::move(next);
    sol.log.iterations = it + 1;
    sol.log.increments.push_back(inc);
    if (std::isfinite(prev) && prev > 0.0) sol.log.contraction_ratio = inc / prev;
    if (!std::isfinite(inc) || inc > 1e6 * (1.0 + start))
      throw DivergenceError("Picard iteration diverged (increment " + std::to_string(inc) +
                            "); reduce the boundary data amplitude delta");
    if (inc < opt.tol) return sol;
    // rounding floor: the increment stops shrinking at a level set by the solver
    if (inc >= prev && inc <= 1e-12 * sol.u.max_abs()) return sol;
    prev = inc;
  }
  throw DivergenceError("Picard iteration did not converge in " + std::to_string(opt.max_iter) +
                        " iterations (last contraction ratio " +
                        std::to_string(sol.log.contraction_ratio) +
                        "); reduce the boundary data amplitude delta");
}

DnData dn_map(const ClampedSolver& solver, const DiscreteModel& model, const BoundaryData& data,
              const PicardOptions& opt) {
  const auto& grid = solver.grid();
  if (data.max_abs_on_gamma(grid) > 1e-14 * std::max(1.0, data.max_abs()))
    throw ConstraintError("DN-map data must vanish on Gamma");
  return dn_traces(grid, solve_semilinear(solver, model, data, opt).u);
}

}  // namespace biharm
