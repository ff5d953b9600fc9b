#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <json.hpp>

namespace biharm {

using cplx = std::complex<double>;

/// Largest rank reachable through the public tensor API.
inline constexpr int kMaxRank = 3;
/// Rank 4 exists only as an intermediate of symmetrized products.
inline constexpr int kMaxInternalRank = 4;
inline constexpr int kMaxDim = 16;

using MultiIndex = std::array<int, kMaxInternalRank>;

/// Enumeration of the sorted multi-indices i1 <= ... <= i_rank for one (n, rank),
/// with the lookup from an arbitrary full index to its storage slot.
struct IndexTable {
  int n = 0;
  int rank = 0;
  std::vector<MultiIndex> sorted;
  std::vector<int> multiplicity;      ///< distinct permutations of each sorted index
  std::vector<int> full_to_storage;   ///< size n^rank, row-major full index

  std::size_t size() const { return sorted.size(); }
  std::size_t flat(std::span<const int> idx) const;
  int slot(std::span<const int> idx) const { return full_to_storage[flat(idx)]; }
};

/// Shared, immutable table for (n, rank). Thread-safe.
const IndexTable& index_table(int n, int rank);

/// C(n + rank - 1, rank)
std::size_t sym_storage_size(int n, int rank);

/// Dense symmetric tensor of rank 0..3 (4 internally) in dimension n, complex entries
/// keyed by sorted multi-index.
class SymTensor {
public:
  SymTensor() = default;
  SymTensor(int n, int rank);

  static SymTensor scalar(int n, cplx value);
  static SymTensor kronecker(int n);
  /// Unit vector e_i (0-based i).
  static SymTensor unit_vector(int n, int i);
  /// Monomial basis element: 1 at the sorted index of `idx` (and all its permutations).
  static SymTensor monomial(int n, std::span<const int> idx);

  int dim() const { return n_; }
  int rank() const { return rank_; }
  std::size_t size() const { return entries_.size(); }
  const IndexTable& table() const { return index_table(n_, rank_); }

  std::span<const cplx> entries() const { return entries_; }
  std::span<cplx> entries() { return entries_; }
  cplx& operator[](std::size_t k) { return entries_[k]; }
  cplx operator[](std::size_t k) const { return entries_[k]; }

  /// Entry at an arbitrary (unsorted) 0-based full index.
  cplx at(std::span<const int> idx) const;
  cplx at(std::initializer_list<int> idx) const {
    return at(std::span<const int>(idx.begin(), idx.size()));
  }
  void set(std::span<const int> idx, cplx value);
  void set(std::initializer_list<int> idx, cplx value) {
    set(std::span<const int>(idx.begin(), idx.size()), value);
  }

  /// Row-major n^rank array of all entries.
  std::vector<cplx> to_full() const;

  double max_abs() const;
  /// Frobenius norm of the full tensor (multiplicity-weighted).
  double norm() const;
  /// Full-tensor inner product sum_{i1..il} conj(a) b.
  friend cplx inner(const SymTensor& a, const SymTensor& b);

  SymTensor& operator+=(const SymTensor& o);
  SymTensor& operator-=(const SymTensor& o);
  SymTensor& operator*=(cplx s);
  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(SymTensor a, cplx s) { return a *= s; }
  friend SymTensor operator*(cplx s, SymTensor a) { return a *= s; }
  friend bool operator==(const SymTensor& a, const SymTensor& b) = default;

private:
  int n_ = 0;
  int rank_ = 0;
  std::vector<cplx> entries_;
};

/// Average of a full n^rank tensor over all rank! index permutations.
SymTensor symmetrize(int n, int rank, std::span<const cplx> full);

/// sigma(S (x) T). Total rank may reach 4.
SymTensor sym_product(const SymTensor& s, const SymTensor& t);

/// sigma(f (x) delta), defined for rank(f) in {0, 1}.
SymTensor i_delta(const SymTensor& f);

/// Contraction of the last two indices with delta. Ranks 0 and 1 have no trace and map
/// to the zero scalar.
SymTensor j_delta(const SymTensor& f);

struct TraceFreeParts {
  SymTensor trace_free;  ///< j_delta(trace_free) == 0
  SymTensor isotropic;   ///< A = trace_free + i_delta(isotropic)
};

/// A = trace_free + i_delta(a) for rank 2 or 3.
TraceFreeParts trace_free_decompose(const SymTensor& a);

/// <F, xi^{(.)l}> = sum over all full indices F_{i1..il} xi_{i1} ... xi_{il}.
cplx eval_pairing(const SymTensor& f, std::span<const cplx> xi);

/// JSON form {n, rank, entries: [[multi-index (1-based)], value | [re, im]]}.
nlohmann::json to_json(const SymTensor& t);
SymTensor sym_tensor_from_json(const nlohmann::json& j);

}  // namespace biharm
