#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "biharm/null_recovery.hpp"
#include "biharm/sym_tensor.hpp"

namespace biharm::testing {

inline SymTensor random_tensor(std::mt19937_64& rng, int n, int rank, bool complex_entries = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  SymTensor t(n, rank);
  for (std::size_t k = 0; k < t.size(); ++k)
    t[k] = complex_entries ? cplx(g(rng), g(rng)) : cplx(g(rng), 0.0);
  return t;
}

inline SymTensor random_trace_free(std::mt19937_64& rng, int n, int rank) {
  auto t = random_tensor(rng, n, rank);
  if (rank >= 2) t = trace_free_decompose(t).trace_free;
  return t;
}

inline NullVector random_null_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(n), b(n);
  for (auto& v : a) v = g(rng);
  if (a[0] < 0) for (auto& v : a) v = -v;
  for (auto& v : b) v = g(rng);
  double aa = 0;
  for (int i = 0; i < n; ++i) aa += a[i] * a[i];
  for (int pass = 0; pass < 2; ++pass) {
    double ab = 0;
    for (int i = 0; i < n; ++i) ab += a[i] * b[i];
    for (int i = 0; i < n; ++i) b[i] -= ab / aa * a[i];
  }
  double bb = 0;
  for (double v : b) bb += v * v;
  for (auto& v : b) v *= std::sqrt(aa / bb);
  return make_null_vector(a, b);
}

inline std::vector<cplx> random_complex_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}

}  // namespace biharm::testing
