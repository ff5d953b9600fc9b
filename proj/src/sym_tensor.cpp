#include "biharm/sym_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "biharm/error.hpp"

namespace biharm {

namespace {

void check_dim_rank(int n, int rank, int max_rank) {
  if (n < 1 || n > kMaxDim) {
    std::ostringstream os;
    os << "tensor dimension " << n << " outside [1, " << kMaxDim << "]";
    throw ConstraintError(os.str());
  }
  if (rank < 0 || rank > max_rank) {
    std::ostringstream os;
    os << "unsupported tensor rank " << rank << " (max " << max_rank << ")";
    throw UnsupportedRank(os.str());
  }
}

std::unique_ptr<IndexTable> build_table(int n, int rank) {
  auto t = std::make_unique<IndexTable>();
  t->n = n;
  t->rank = rank;
  std::size_t full = 1;
  for (int r = 0; r < rank; ++r) full *= static_cast<std::size_t>(n);
  t->full_to_storage.assign(full, -1);

  // Lexicographic enumeration of non-decreasing sequences.
  MultiIndex cur{};
  auto emit = [&]() {
    t->sorted.push_back(cur);
    std::array<int, 16> counts{};
    for (int r = 0; r < rank; ++r) ++counts[static_cast<std::size_t>(cur[r])];
    int mult = 1;
    for (int r = 2; r <= rank; ++r) mult *= r;
    for (int c : counts)
      for (int r = 2; r <= c; ++r) mult /= r;
    t->multiplicity.push_back(mult);
  };
  if (rank == 0) {
    emit();
  } else {
    while (true) {
      emit();
      int pos = rank - 1;
      while (pos >= 0 && cur[pos] == n - 1) --pos;
      if (pos < 0) break;
      ++cur[pos];
      for (int r = pos + 1; r < rank; ++r) cur[r] = cur[pos];
    }
  }

  std::vector<int> idx(static_cast<std::size_t>(rank));
  for (std::size_t f = 0; f < full; ++f) {
    std::size_t rem = f;
    for (int r = rank - 1; r >= 0; --r) {
      idx[r] = static_cast<int>(rem % n);
      rem /= n;
    }
    std::vector<int> s = idx;
    std::sort(s.begin(), s.end());
    MultiIndex key{};
    std::copy(s.begin(), s.end(), key.begin());
    auto it = std::lower_bound(t->sorted.begin(), t->sorted.end(), key);
    t->full_to_storage[f] = static_cast<int>(it - t->sorted.begin());
  }
  return t;
}

}  // namespace

std::size_t IndexTable::flat(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != rank)
    throw DimensionMismatch("multi-index length does not match tensor rank");
  std::size_t f = 0;
  for (int i : idx) {
    if (i < 0 || i >= n) throw ConstraintError("multi-index component out of range");
    f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  }
  return f;
}

const IndexTable& index_table(int n, int rank) {
  check_dim_rank(n, rank, kMaxInternalRank);
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<IndexTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{n, rank}];
  if (!slot) slot = build_table(n, rank);
  return *slot;
}

std::size_t sym_storage_size(int n, int rank) {
  // C(n + rank - 1, rank)
  std::size_t num = 1, den = 1;
  for (int k = 1; k <= rank; ++k) {
    num *= static_cast<std::size_t>(n + k - 1);
    den *= static_cast<std::size_t>(k);
  }
  return num / den;
}

SymTensor::SymTensor(int n, int rank) : n_(n), rank_(rank) {
  check_dim_rank(n, rank, kMaxInternalRank);
  entries_.assign(sym_storage_size(n, rank), cplx{});
}

SymTensor SymTensor::scalar(int n, cplx value) {
  SymTensor t(n, 0);
  t.entries_[0] = value;
  return t;
}

SymTensor SymTensor::kronecker(int n) {
  SymTensor t(n, 2);
  for (int i = 0; i < n; ++i) t.set({i, i}, 1.0);
  return t;
}

SymTensor SymTensor::unit_vector(int n, int i) {
  SymTensor t(n, 1);
  t.set({i}, 1.0);
  return t;
}

SymTensor SymTensor::monomial(int n, std::span<const int> idx) {
  SymTensor t(n, static_cast<int>(idx.size()));
  t.set(idx, 1.0);
  return t;
}

cplx SymTensor::at(std::span<const int> idx) const {
  return entries_[static_cast<std::size_t>(table().slot(idx))];
}

void SymTensor::set(std::span<const int> idx, cplx value) {
  entries_[static_cast<std::size_t>(table().slot(idx))] = value;
}

std::vector<cplx> SymTensor::to_full() const {
  const auto& t = table();
  std::vector<cplx> out(t.full_to_storage.size());
  for (std::size_t f = 0; f < out.size(); ++f)
    out[f] = entries_[static_cast<std::size_t>(t.full_to_storage[f])];
  return out;
}

double SymTensor::max_abs() const {
  double m = 0.0;
  for (const auto& v : entries_) m = std::max(m, std::abs(v));
  return m;
}

double SymTensor::norm() const { return std::sqrt(std::real(inner(*this, *this))); }

cplx inner(const SymTensor& a, const SymTensor& b) {
  if (a.n_ != b.n_ || a.rank_ != b.rank_)
    throw DimensionMismatch("inner product of tensors with different shapes");
  const auto& t = a.table();
  cplx s{};
  for (std::size_t k = 0; k < a.size(); ++k)
    s += static_cast<double>(t.multiplicity[k]) * std::conj(a.entries_[k]) * b.entries_[k];
  return s;
}

SymTensor& SymTensor::operator+=(const SymTensor& o) {
  if (n_ != o.n_ || rank_ != o.rank_) throw DimensionMismatch("adding tensors of different shapes");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += o.entries_[k];
  return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& o) {
  if (n_ != o.n_ || rank_ != o.rank_)
    throw DimensionMismatch("subtracting tensors of different shapes");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= o.entries_[k];
  return *this;
}

SymTensor& SymTensor::operator*=(cplx s) {
  for (auto& v : entries_) v *= s;
  return *this;
}

SymTensor symmetrize(int n, int rank, std::span<const cplx> full) {
  check_dim_rank(n, rank, kMaxRank);
  SymTensor out(n, rank);
  const auto& t = out.table();
  if (full.size() != t.full_to_storage.size())
    throw DimensionMismatch("full tensor has wrong number of entries");
  std::array<int, kMaxInternalRank> perm{};
  std::iota(perm.begin(), perm.begin() + rank, 0);
  std::array<int, kMaxInternalRank> idx{};
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& base = t.sorted[k];
    std::iota(perm.begin(), perm.begin() + rank, 0);
    cplx sum{};
    int count = 0;
    do {
      for (int r = 0; r < rank; ++r) idx[r] = base[perm[r]];
      sum += full[t.flat(std::span<const int>(idx.data(), static_cast<std::size_t>(rank)))];
      ++count;
    } while (std::next_permutation(perm.begin(), perm.begin() + rank));
    out[k] = sum / static_cast<double>(count);
  }
  return out;
}

SymTensor sym_product(const SymTensor& s, const SymTensor& t) {
  if (s.dim() != t.dim()) throw DimensionMismatch("sym_product: dimension mismatch");
  const int j = s.rank(), k = t.rank(), r = j + k;
  if (r > kMaxInternalRank) throw UnsupportedRank("sym_product: total rank exceeds 4");
  SymTensor out(s.dim(), r);
  const auto& tab = out.table();
  std::array<int, kMaxInternalRank> perm{};
  std::array<int, kMaxInternalRank> a{}, b{};
  for (std::size_t q = 0; q < tab.size(); ++q) {
    const auto& base = tab.sorted[q];
    std::iota(perm.begin(), perm.begin() + r, 0);
    cplx sum{};
    int count = 0;
    do {
      for (int p = 0; p < j; ++p) a[p] = base[perm[p]];
      for (int p = 0; p < k; ++p) b[p] = base[perm[j + p]];
      sum += s.at(std::span<const int>(a.data(), static_cast<std::size_t>(j))) *
             t.at(std::span<const int>(b.data(), static_cast<std::size_t>(k)));
      ++count;
    } while (std::next_permutation(perm.begin(), perm.begin() + r));
    out[q] = sum / static_cast<double>(count);
  }
  return out;
}

SymTensor i_delta(const SymTensor& f) {
  if (f.rank() > 1) throw UnsupportedRank("i_delta is defined for rank 0 and 1 only");
  return sym_product(f, SymTensor::kronecker(f.dim()));
}

SymTensor j_delta(const SymTensor& f) {
  if (f.rank() > kMaxRank) throw UnsupportedRank("j_delta: rank above 3");
  if (f.rank() < 2) return SymTensor(f.dim(), 0);
  const int n = f.dim();
  SymTensor out(n, f.rank() - 2);
  const auto& tab = out.table();
  std::array<int, kMaxInternalRank> idx{};
  for (std::size_t q = 0; q < tab.size(); ++q) {
    const int lead = out.rank();
    for (int p = 0; p < lead; ++p) idx[p] = tab.sorted[q][p];
    cplx sum{};
    for (int i = 0; i < n; ++i) {
      idx[lead] = i;
      idx[lead + 1] = i;
      sum += f.at(std::span<const int>(idx.data(), static_cast<std::size_t>(f.rank())));
    }
    out[q] = sum;
  }
  return out;
}

TraceFreeParts trace_free_decompose(const SymTensor& a) {
  const int n = a.dim();
  SymTensor iso;
  if (a.rank() == 2) {
    iso = j_delta(a) * (1.0 / n);
  } else if (a.rank() == 3) {
    // j_delta(i_delta v) = (n + 2)/3 v for vectors v.
    iso = j_delta(a) * (3.0 / (n + 2));
  } else {
    throw UnsupportedRank("trace_free_decompose: rank must be 2 or 3");
  }
  return {a - i_delta(iso), iso};
}

cplx eval_pairing(const SymTensor& f, std::span<const cplx> xi) {
  if (static_cast<int>(xi.size()) != f.dim())
    throw DimensionMismatch("eval_pairing: vector dimension differs from tensor dimension");
  if (f.rank() > kMaxRank) throw UnsupportedRank("eval_pairing: rank above 3");
  const auto& tab = f.table();
  cplx sum{};
  for (std::size_t q = 0; q < tab.size(); ++q) {
    cplx term = static_cast<double>(tab.multiplicity[q]) * f[q];
    for (int r = 0; r < f.rank(); ++r) term *= xi[static_cast<std::size_t>(tab.sorted[q][r])];
    sum += term;
  }
  return sum;
}

nlohmann::json to_json(const SymTensor& t) {
  nlohmann::json entries = nlohmann::json::array();
  const auto& tab = t.table();
  for (std::size_t q = 0; q < tab.size(); ++q) {
    nlohmann::json idx = nlohmann::json::array();
    for (int r = 0; r < t.rank(); ++r) idx.push_back(tab.sorted[q][r] + 1);
    nlohmann::json value;
    if (t[q].imag() == 0.0)
      value = t[q].real();
    else
      value = nlohmann::json::array({t[q].real(), t[q].imag()});
    entries.push_back(nlohmann::json::array({idx, value}));
  }
  return {{"n", t.dim()}, {"rank", t.rank()}, {"entries", entries}};
}

SymTensor sym_tensor_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int rank = j.at("rank").get<int>();
    if (rank > kMaxRank) throw UnsupportedRank("tensor JSON: rank above 3");
    SymTensor t(n, rank);
    std::vector<bool> seen(t.size(), false);
    for (const auto& e : j.at("entries")) {
      const auto& idx_json = e.at(0);
      std::vector<int> idx;
      for (const auto& v : idx_json) idx.push_back(v.get<int>() - 1);
      const int slot = t.table().slot(idx);
      if (seen[static_cast<std::size_t>(slot)])
        throw ConfigError("tensor JSON: duplicate entry for one symmetric index");
      seen[static_cast<std::size_t>(slot)] = true;
      const auto& v = e.at(1);
      cplx value = v.is_array() ? cplx(v.at(0).get<double>(), v.at(1).get<double>())
                                : cplx(v.get<double>(), 0.0);
      t[static_cast<std::size_t>(slot)] = value;
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed tensor JSON: ") + e.what());
  }
}

}  // namespace biharm
