#include "biharm/null_recovery.hpp"

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

constexpr cplx kI{0.0, 1.0};
constexpr double kNullTol = 1e-12;
constexpr double kResidualTol = 1e-8;
constexpr double kConsistencyTol = 1e-10;

std::vector<double> unit(int n, int i) {
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  e[static_cast<std::size_t>(i)] = 1.0;
  return e;
}

NullVector ie1_plus(int n, const std::vector<std::pair<int, double>>& terms) {
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  for (auto [i, c] : terms) b[static_cast<std::size_t>(i)] += c;
  return make_null_vector(unit(n, 0), b);
}

double max_abs_value(std::span<const cplx> v) {
  double m = 0.0;
  for (auto x : v) m = std::max(m, std::abs(x));
  return m;
}

// The standard probe sets are exactly determined, so a residual on them alone cannot
// expose an oracle that is not a pairing. These extra vectors are used for checking only.
std::vector<NullVector> consistency_probes(int n) {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<double> a(static_cast<std::size_t>(n), 0.0), b(a);
  a[0] = a[1] = r;
  b[0] = r;
  b[1] = -r;
  return {make_null_vector(unit(n, 1), unit(n, 0)), make_null_vector(a, b)};
}

void check_residual(const ProbeSet& probes, const SymTensor& t, const PairingOracle& p,
                    const char* what, double abs_floor) {
  std::vector<cplx> vals;
  double worst = 0.0;
  auto all = probes.vectors();
  for (auto& extra : consistency_probes(probes.dim())) all.push_back(extra);
  for (const auto& xi : all) {
    const cplx pv = p(xi);
    vals.push_back(pv);
    worst = std::max(worst, std::abs(eval_pairing(t, xi.xi()) - pv));
  }
  const double scale = max_abs_value(vals);
  if (worst > kResidualTol * scale + abs_floor) {
    std::ostringstream os;
    os << what << ": oracle is not reproduced by any trace-free tensor (relative residual "
       << worst / scale << ")";
    throw InconsistentOracle(os.str());
  }
}

}  // namespace

NullVector NullVector::from_complex(std::vector<cplx> xi) {
  if (xi.empty()) throw ConstraintError("null vector must have positive dimension");
  cplx dot{};
  double norm2 = 0.0;
  for (auto v : xi) {
    dot += v * v;
    norm2 += std::norm(v);
  }
  if (norm2 == 0.0) throw ConstraintError("null vector must be nonzero");
  if (std::abs(dot) >= kNullTol * std::max(norm2, 1.0))
    throw ConstraintError("xi.xi != 0: vector is not on the null variety");
  if (xi[0].imag() < 0.0) throw ConstraintError("Im(xi_1) < 0");
  return NullVector(std::move(xi));
}

double NullVector::norm() const {
  double s = 0.0;
  for (auto v : xi_) s += std::norm(v);
  return std::sqrt(s);
}

NullVector NullVector::scaled(double s) const {
  if (!(s > 0.0)) throw ConstraintError("null vector scale must be positive");
  std::vector<cplx> out(xi_);
  for (auto& v : out) v *= s;
  return NullVector(std::move(out));
}

NullVector make_null_vector(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("make_null_vector: |a| and |b| lengths differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0) throw ConstraintError("make_null_vector: |a| = 0");
  if (std::abs(ab) > kNullTol * std::sqrt(aa * bb))
    throw ConstraintError("make_null_vector: a.b != 0");
  if (std::abs(std::sqrt(aa) - std::sqrt(bb)) > kNullTol * std::sqrt(aa))
    throw ConstraintError("make_null_vector: |a| != |b|");
  if (a[0] < 0.0) throw ConstraintError("make_null_vector: a_1 < 0");
  std::vector<cplx> xi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) xi[i] = cplx(b[i], a[i]);
  return NullVector::from_complex(std::move(xi));
}

std::vector<SymTensor> monomial_basis(int n, int rank) {
  const auto& tab = index_table(n, rank);
  std::vector<SymTensor> out;
  out.reserve(tab.size());
  for (const auto& idx : tab.sorted)
    out.push_back(SymTensor::monomial(n, std::span<const int>(idx.data(), static_cast<std::size_t>(rank))));
  return out;
}

std::vector<SymTensor> trace_free_basis(int n, int rank) {
  std::vector<SymTensor> basis;
  for (auto e : monomial_basis(n, rank)) {
    if (rank >= 2) e = trace_free_decompose(e).trace_free;
    // Modified Gram-Schmidt in the full-tensor inner product.
    for (const auto& q : basis) e -= q * inner(q, e);
    const double nrm = e.norm();
    if (nrm > 1e-10) basis.push_back(e * (1.0 / nrm));
  }
  return basis;
}

Eigen::MatrixXcd probe_matrix(std::span<const NullVector> probes,
                              std::span<const SymTensor> basis) {
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(probes.size()),
                     static_cast<Eigen::Index>(basis.size()));
  for (std::size_t r = 0; r < probes.size(); ++r)
    for (std::size_t c = 0; c < basis.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          eval_pairing(basis[c], probes[r].xi());
  return m;
}

int numerical_rank(const Eigen::MatrixXcd& m, double rel_cutoff) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_cutoff * s(0)) ++r;
  return r;
}

ProbeSet::ProbeSet(int n, int rank, std::vector<NullVector> vectors)
    : n_(n), rank_(rank), vectors_(std::move(vectors)) {
  if (rank < 1 || rank > kMaxRank) throw UnsupportedRank("probe sets exist for ranks 1..3");
  for (const auto& v : vectors_)
    if (v.dim() != n) throw DimensionMismatch("probe vector dimension differs from n");
  const auto basis = trace_free_basis(n, rank);
  const auto m = probe_matrix(vectors_, basis);
  const int r = numerical_rank(m);
  if (r != static_cast<int>(basis.size())) {
    std::ostringstream os;
    os << "probe set is not injective on trace-free rank-" << rank << " tensors: rank " << r
       << " < " << basis.size();
    throw ConstraintError(os.str());
  }
}

namespace {

ProbeSet build_standard_probe_set(int n, int m) {
  if (n < 2) throw ConstraintError("standard_probe_set requires n >= 2");
  if (m < 1 || m > kMaxRank) throw UnsupportedRank("standard_probe_set: m must be 1, 2 or 3");
  std::vector<NullVector> v;
  const double s2 = 1.0 / std::sqrt(2.0);
  const double s3 = 1.0 / std::sqrt(3.0);
  for (int j = 1; j < n; ++j) {
    v.push_back(ie1_plus(n, {{j, 1.0}}));
    v.push_back(ie1_plus(n, {{j, -1.0}}));
  }
  if (m >= 2)
    for (int j = 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) v.push_back(ie1_plus(n, {{j, s2}, {k, s2}}));
  if (m >= 3) {
    // (a, b) = (1/sqrt2, 1/sqrt2) is already present from the rank-2 block.
    for (int lo = 1; lo < n; ++lo)
      for (int hi = lo + 1; hi < n; ++hi) {
        v.push_back(ie1_plus(n, {{hi, -s2}, {lo, -s2}}));
        v.push_back(ie1_plus(n, {{hi, s2}, {lo, -s2}}));
      }
    for (int i = 1; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k) v.push_back(ie1_plus(n, {{i, s3}, {j, s3}, {k, s3}}));
  }
  try {
    return ProbeSet(n, m, std::move(v));
  } catch (const ConstraintError& e) {
    throw InternalError(std::string("standard probe set failed its injectivity check: ") +
                        e.what());
  }
}

struct Rank3System {
  std::vector<SymTensor> basis;
  Eigen::MatrixXcd m;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd;
};

template <class T, class Make>
const T& cached(int n, int m, Make make) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<const T>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{n, m}];
  if (!slot) slot = std::make_unique<const T>(make());
  return *slot;
}

const ProbeSet& standard_probes(int n, int m) {
  if (n < 2) throw ConstraintError("standard_probe_set requires n >= 2");
  if (m < 1 || m > kMaxRank) throw UnsupportedRank("standard_probe_set: m must be 1, 2 or 3");
  return cached<ProbeSet>(n, m, [&] { return build_standard_probe_set(n, m); });
}

const Rank3System& rank3_system(int n) {
  return cached<Rank3System>(n, 3, [&] {
    Rank3System s{trace_free_basis(n, 3), {}, {}};
    s.m = probe_matrix(standard_probes(n, 3).vectors(), s.basis);
    s.svd.compute(s.m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s.svd.setThreshold(1e-10);
    return s;
  });
}

}  // namespace

ProbeSet standard_probe_set(int n, int m) { return standard_probes(n, m); }

SymTensor recover_vector(const PairingOracle& p, int n, double abs_floor) {
  if (n < 2) throw ConstraintError("recover_vector requires n >= 2");
  SymTensor h(n, 1);
  std::vector<cplx> h1(static_cast<std::size_t>(n - 1));
  double scale = 0.0;
  for (int j = 1; j < n; ++j) {
    const cplx plus = p(ie1_plus(n, {{j, 1.0}}));
    const cplx minus = p(ie1_plus(n, {{j, -1.0}}));
    scale = std::max({scale, std::abs(plus), std::abs(minus)});
    h1[static_cast<std::size_t>(j - 1)] = (plus + minus) / (2.0 * kI);
    h.set({j}, (plus - minus) / 2.0);
  }
  for (auto v : h1)
    if (std::abs(v - h1[0]) > kConsistencyTol * scale + abs_floor)
      throw InconsistentOracle("recover_vector: H_1 estimates disagree across j");
  cplx mean = std::accumulate(h1.begin(), h1.end(), cplx{}) / static_cast<double>(h1.size());
  h.set({0}, mean);
  check_residual(standard_probes(n, 1), h, p, "recover_vector", abs_floor);
  return h;
}

SymTensor recover_tracefree2(const PairingOracle& p, int n, double abs_floor) {
  if (n < 2) throw ConstraintError("recover_tracefree2 requires n >= 2");
  SymTensor g(n, 2);
  std::vector<cplx> d(static_cast<std::size_t>(n), cplx{});
  for (int j = 1; j < n; ++j) {
    const cplx plus = p(ie1_plus(n, {{j, 1.0}}));
    const cplx minus = p(ie1_plus(n, {{j, -1.0}}));
    g.set({0, j}, (plus - minus) / (4.0 * kI));
    d[static_cast<std::size_t>(j)] = (plus + minus) / 2.0;  // G_jj - G_11
  }
  cplx dsum{};
  for (int j = 1; j < n; ++j) dsum += d[static_cast<std::size_t>(j)];
  const cplx g11 = -dsum / static_cast<double>(n);
  g.set({0, 0}, g11);
  for (int j = 1; j < n; ++j) g.set({j, j}, d[static_cast<std::size_t>(j)] + g11);
  const double s2 = 1.0 / std::sqrt(2.0);
  for (int j = 1; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const cplx pv = p(ie1_plus(n, {{j, s2}, {k, s2}}));
      const cplx known = -g11 + 2.0 * kI * s2 * (g.at({0, j}) + g.at({0, k})) +
                         0.5 * (g.at({j, j}) + g.at({k, k}));
      g.set({j, k}, pv - known);
    }
  check_residual(standard_probes(n, 2), g, p, "recover_tracefree2", abs_floor);
  return g;
}

SymTensor recover_tracefree3(const PairingOracle& p, int n, double abs_floor) {
  const ProbeSet& probes = standard_probes(n, 3);
  const auto& [basis, m, svd] = rank3_system(n);
  Eigen::VectorXcd rhs(static_cast<Eigen::Index>(probes.size()));
  for (std::size_t r = 0; r < probes.size(); ++r)
    rhs(static_cast<Eigen::Index>(r)) = p(probes.vectors()[r]);

  if (svd.rank() != static_cast<Eigen::Index>(basis.size()))
    throw InternalError("recover_tracefree3: probe matrix lost rank on the trace-free subspace");
  const Eigen::VectorXcd coef = svd.solve(rhs);

  SymTensor f(n, 3);
  for (std::size_t k = 0; k < basis.size(); ++k) f += basis[k] * coef(static_cast<Eigen::Index>(k));
  const double resid = (m * coef - rhs).norm();
  if (resid > kResidualTol * rhs.norm() + abs_floor)
    throw InconsistentOracle("recover_tracefree3: least-squares residual too large");
  check_residual(probes, f, p, "recover_tracefree3", abs_floor);
  return f;
}

SymTensor recover_general(const PairingOracle& p, int n, int m, double abs_floor) {
  switch (m) {
    case 1: return recover_vector(p, n, abs_floor);
    case 2: return recover_tracefree2(p, n, abs_floor);
    case 3: return recover_tracefree3(p, n, abs_floor);
    default: throw UnsupportedRank("recover_general: m must be 1, 2 or 3");
  }
}

}  // namespace biharm
