#include "biharm/tensor_field.hpp"

#include <cmath>

#include "biharm/error.hpp"

namespace biharm {

namespace {

cplx read_value(const nlohmann::json& v) {
  return v.is_array() ? cplx(v.at(0).get<double>(), v.at(1).get<double>())
                      : cplx(v.get<double>(), 0.0);
}

nlohmann::json write_value(cplx c) {
  if (c.imag() == 0.0) return c.real();
  return nlohmann::json::array({c.real(), c.imag()});
}

void require_same_shape(int n1, int r1, int n2, int r2) {
  if (n1 != n2 || r1 != r2) throw DimensionMismatch("tensor fields differ in dimension or rank");
}

}  // namespace

FieldSpec::FieldSpec(int n, int rank) : n_(n), rank_(rank) {
  components_.resize(SymTensor(n, rank).size());
}

FieldSpec FieldSpec::constant(const SymTensor& t) {
  FieldSpec f(t.dim(), t.rank());
  for (std::size_t q = 0; q < t.size(); ++q)
    if (t[q] != cplx(0.0))
      f.components_[q].push_back({t[q], std::vector<int>(static_cast<std::size_t>(t.dim()), 0)});
  return f;
}

FieldSpec FieldSpec::coordinate_monomial(int n, std::span<const int> idx, int l, cplx c) {
  if (l < 0 || l >= n) throw ConstraintError("coordinate index out of range");
  FieldSpec f(n, static_cast<int>(idx.size()));
  std::vector<int> p(static_cast<std::size_t>(n), 0);
  p[static_cast<std::size_t>(l)] = 1;
  f.add_term(idx, c, p);
  return f;
}

bool FieldSpec::is_constant() const {
  for (const auto& comp : components_)
    for (const auto& m : comp)
      for (int p : m.powers)
        if (p != 0) return false;
  return true;
}

void FieldSpec::add_term(std::span<const int> idx, cplx coeff, std::vector<int> powers) {
  if (static_cast<int>(idx.size()) != rank_) throw DimensionMismatch("index length differs from rank");
  if (static_cast<int>(powers.size()) != n_) throw DimensionMismatch("one exponent per coordinate");
  for (int p : powers)
    if (p < 0) throw ConstraintError("negative exponent");
  const int slot = index_table(n_, rank_).slot(idx);
  components_[static_cast<std::size_t>(slot)].push_back({coeff, std::move(powers)});
}

SymTensor FieldSpec::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw DimensionMismatch("point dimension differs from field");
  SymTensor t(n_, rank_);
  for (std::size_t q = 0; q < components_.size(); ++q) {
    cplx s{};
    for (const auto& m : components_[q]) {
      double w = 1.0;
      for (std::size_t c = 0; c < x.size(); ++c) w *= std::pow(x[c], m.powers[c]);
      s += m.coeff * w;
    }
    t[q] = s;
  }
  return t;
}

FieldSpec& FieldSpec::operator+=(const FieldSpec& o) {
  if (n_ == 0) return *this = o;
  require_same_shape(n_, rank_, o.n_, o.rank_);
  for (std::size_t q = 0; q < components_.size(); ++q)
    components_[q].insert(components_[q].end(), o.components_[q].begin(), o.components_[q].end());
  return *this;
}

FieldSpec& FieldSpec::operator*=(cplx s) {
  for (auto& comp : components_)
    for (auto& m : comp) m.coeff *= s;
  return *this;
}

nlohmann::json to_json(const FieldSpec& f) {
  if (f.is_constant()) {
    std::vector<double> origin(static_cast<std::size_t>(f.dim()), 0.0);
    return {{"type", "constant"}, {"tensor", to_json(f.evaluate(origin))}};
  }
  nlohmann::json comps = nlohmann::json::array();
  const auto& tab = index_table(f.dim(), f.rank());
  for (std::size_t q = 0; q < tab.size(); ++q) {
    nlohmann::json idx = nlohmann::json::array();
    for (int r = 0; r < f.rank(); ++r) idx.push_back(tab.sorted[q][static_cast<std::size_t>(r)] + 1);
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& m : f.terms(q)) terms.push_back({{"coeff", write_value(m.coeff)}, {"powers", m.powers}});
    if (!terms.empty()) comps.push_back({{"index", idx}, {"terms", terms}});
  }
  return {{"type", "polynomial"}, {"n", f.dim()}, {"rank", f.rank()}, {"components", comps}};
}

FieldSpec field_spec_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.value("type", std::string("constant"));
    if (type == "constant") return FieldSpec::constant(sym_tensor_from_json(j.at("tensor")));
    if (type != "polynomial") throw ConfigError("tensor field type must be constant or polynomial");
    const int n = j.at("n").get<int>();
    const int rank = j.at("rank").get<int>();
    if (rank < 0 || rank > kMaxRank) throw UnsupportedRank("tensor field rank must be 0..3");
    FieldSpec f(n, rank);
    for (const auto& c : j.at("components")) {
      std::vector<int> idx;
      for (const auto& v : c.at("index")) idx.push_back(v.get<int>() - 1);
      for (int i : idx)
        if (i < 0 || i >= n) throw ConfigError("tensor field index out of range");
      for (const auto& t : c.at("terms"))
        f.add_term(idx, read_value(t.at("coeff")), t.at("powers").get<std::vector<int>>());
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed tensor field JSON: ") + e.what());
  }
}

TensorField::TensorField(const GridDomain& grid, int n, int rank)
    : n_grid_(grid.N()), n_(n), rank_(rank),
      values_(static_cast<std::size_t>((grid.N() + 2) * (grid.N() + 2)), SymTensor(n, rank)) {}

TensorField TensorField::sample(const GridDomain& grid, const FieldSpec& spec) {
  if (spec.dim() != 2) throw DimensionMismatch("grid fields live in n = 2");
  TensorField t(grid, spec.dim(), spec.rank());
  for (int j = 0; j <= grid.N() + 1; ++j)
    for (int i = 0; i <= grid.N() + 1; ++i) {
      const std::array<double, 2> x = {grid.coord(i), grid.coord(j)};
      t.at(i, j) = spec.evaluate(x);
    }
  return t;
}

TensorField TensorField::constant(const GridDomain& grid, const SymTensor& v) {
  TensorField t(grid, v.dim(), v.rank());
  for (auto& s : t.values_) s = v;
  return t;
}

double TensorField::max_abs() const {
  double m = 0.0;
  for (const auto& s : values_) m = std::max(m, s.max_abs());
  return m;
}

TensorField& TensorField::operator+=(const TensorField& o) {
  require_same_shape(n_, rank_, o.n_, o.rank_);
  if (n_grid_ != o.n_grid_) throw DimensionMismatch("tensor fields live on different grids");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

TensorField& TensorField::operator-=(const TensorField& o) {
  require_same_shape(n_, rank_, o.n_, o.rank_);
  if (n_grid_ != o.n_grid_) throw DimensionMismatch("tensor fields live on different grids");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

TensorField& TensorField::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

}  // namespace biharm
