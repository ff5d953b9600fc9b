#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "biharm/sym_tensor.hpp"

namespace biharm {

/// Complex vector xi with xi.xi = 0 (bilinear) and Im(xi_1) >= 0.
class NullVector {
public:
  /// Validates |xi.xi| < 1e-12 |xi|^2 and Im(xi_1) >= 0.
  static NullVector from_complex(std::vector<cplx> xi);

  std::span<const cplx> xi() const { return xi_; }
  int dim() const { return static_cast<int>(xi_.size()); }
  double norm() const;
  NullVector scaled(double s) const;

private:
  explicit NullVector(std::vector<cplx> xi) : xi_(std::move(xi)) {}
  std::vector<cplx> xi_;
};

/// xi = i a + b for real a, b with a.b = 0, |a| = |b| != 0 and a_1 >= 0.
NullVector make_null_vector(std::span<const double> a, std::span<const double> b);

/// Orthonormal (full-tensor inner product) basis of the trace-free symmetric tensors of
/// the given rank. Ranks 0 and 1 are trace-free by convention.
std::vector<SymTensor> trace_free_basis(int n, int rank);

/// Monomial basis of all symmetric tensors of the given rank, in storage order.
std::vector<SymTensor> monomial_basis(int n, int rank);

/// rows: probes, columns: <basis_k, xi^{(.)rank}>.
Eigen::MatrixXcd probe_matrix(std::span<const NullVector> probes,
                              std::span<const SymTensor> basis);

/// Numerical rank with singular-value cutoff rel_cutoff * sigma_max.
int numerical_rank(const Eigen::MatrixXcd& m, double rel_cutoff = 1e-10);

/// Probe vectors on which pairing with trace-free rank-m tensors is injective.
class ProbeSet {
public:
  /// Throws ConstraintError when the probe matrix on the trace-free subspace is
  /// rank-deficient.
  ProbeSet(int n, int rank, std::vector<NullVector> vectors);

  int dim() const { return n_; }
  int rank() const { return rank_; }
  const std::vector<NullVector>& vectors() const { return vectors_; }
  std::size_t size() const { return vectors_.size(); }

private:
  int n_;
  int rank_;
  std::vector<NullVector> vectors_;
};

/// The explicit vectors i e1 +- e_j, i e1 + (e_j + e_k)/sqrt2, the (a, b) family and
/// i e1 + (e_i + e_j + e_k)/sqrt3, accumulated up to rank m.
ProbeSet standard_probe_set(int n, int m);

using PairingOracle = std::function<cplx(const NullVector&)>;

/// abs_floor: absolute slack in the consistency checks, for oracles carrying noise.

/// H from p(xi) = <H, xi>, via the pairs i e1 +- e_j.
SymTensor recover_vector(const PairingOracle& p, int n, double abs_floor = 1e-13);

/// Trace-free G from p(xi) = <G, xi^2>, closed-form elimination.
SymTensor recover_tracefree2(const PairingOracle& p, int n, double abs_floor = 1e-13);

/// Trace-free F from p(xi) = <F, xi^3>, least squares over the standard probe set.
SymTensor recover_tracefree3(const PairingOracle& p, int n, double abs_floor = 1e-13);

/// Trace-free part of an arbitrary symmetric A from p(xi) = <A, xi^m>; the isotropic
/// part does not show up in p and is not returned.
SymTensor recover_general(const PairingOracle& p, int n, int m, double abs_floor = 1e-13);

}  // namespace biharm
