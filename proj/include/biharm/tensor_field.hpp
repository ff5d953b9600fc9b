#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "biharm/grid.hpp"
#include "biharm/sym_tensor.hpp"

namespace biharm {

/// Symmetric tensor field with components given as complex polynomials in x.
class FieldSpec {
public:
  struct Monomial {
    cplx coeff;
    std::vector<int> powers;  ///< one exponent per coordinate
  };

  FieldSpec() = default;
  FieldSpec(int n, int rank);

  static FieldSpec constant(const SymTensor& t);
  /// c * x_l as every component of the monomial tensor at idx.
  static FieldSpec coordinate_monomial(int n, std::span<const int> idx, int l, cplx c = 1.0);

  int dim() const { return n_; }
  int rank() const { return rank_; }
  bool is_constant() const;

  /// Adds coeff * x^powers to the component at the (unsorted) index idx.
  void add_term(std::span<const int> idx, cplx coeff, std::vector<int> powers);
  SymTensor evaluate(std::span<const double> x) const;
  /// Terms of the component at a storage slot.
  const std::vector<Monomial>& terms(std::size_t slot) const { return components_[slot]; }

  FieldSpec& operator+=(const FieldSpec& o);
  FieldSpec& operator*=(cplx s);
  friend FieldSpec operator+(FieldSpec a, const FieldSpec& b) { return a += b; }
  friend FieldSpec operator*(FieldSpec a, cplx s) { return a *= s; }
  friend FieldSpec operator*(cplx s, FieldSpec a) { return a *= s; }

private:
  int n_ = 0;
  int rank_ = 0;
  std::vector<std::vector<Monomial>> components_;  ///< by storage slot
};

/// {"type": "constant", "tensor": {...}} or
/// {"type": "polynomial", "n", "rank", "components": [{"index": [...], "terms": [{"coeff", "powers"}]}]}
nlohmann::json to_json(const FieldSpec& f);
FieldSpec field_spec_from_json(const nlohmann::json& j);

/// One SymTensor per physical grid node.
class TensorField {
public:
  TensorField() = default;
  TensorField(const GridDomain& grid, int n, int rank);

  static TensorField sample(const GridDomain& grid, const FieldSpec& spec);
  static TensorField constant(const GridDomain& grid, const SymTensor& t);

  int N() const { return n_grid_; }
  int dim() const { return n_; }
  int rank() const { return rank_; }
  SymTensor& at(int i, int j) { return values_[index(i, j)]; }
  const SymTensor& at(int i, int j) const { return values_[index(i, j)]; }
  double max_abs() const;

  TensorField& operator+=(const TensorField& o);
  TensorField& operator-=(const TensorField& o);
  TensorField& operator*=(cplx s);
  friend TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
  friend TensorField operator-(TensorField a, const TensorField& b) { return a -= b; }
  friend TensorField operator*(TensorField a, cplx s) { return a *= s; }

private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j * (n_grid_ + 2) + i);
  }
  int n_grid_ = 0;
  int n_ = 0;
  int rank_ = 0;
  std::vector<SymTensor> values_;
};

}  // namespace biharm
