#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biharm/clamped_solver.hpp"
#include "biharm/null_recovery.hpp"
#include "biharm/sym_tensor.hpp"

namespace biharm {

/// chi = 1 within margin/2 of Gamma, 0 beyond margin, quintic smoothstep in between.
class Cutoff {
public:
  Cutoff(const GridDomain& grid, double margin);
  static Cutoff zero(const GridDomain& grid);

  double margin() const { return margin_; }
  bool is_zero() const { return zero_; }
  double value(double x, double y) const;
  std::array<double, 2> gradient(double x, double y) const;
  ScalarField field(const GridDomain& grid) const;
  /// Boundary nodes with chi > 0 (the set K).
  std::vector<BoundaryNode> support_on_boundary(const GridDomain& grid) const;

private:
  GridDomain grid_;
  double margin_;
  bool zero_ = false;
};

/// Amplitudes a with Delta a = const and sum_ij d_ij a xi_i xi_j = 0: a = 1 or a = x_l.
struct Amplitude {
  enum class Kind { one, coordinate };
  Kind kind = Kind::one;
  int l = 0;

  static Amplitude one() { return {}; }
  static Amplitude coordinate(int l) { return {Kind::coordinate, l}; }
  double value(double x, double y) const;
  std::array<double, 2> gradient() const;
  std::string tag() const;
};

/// exp(-i x.xi / h)
cplx cgo_phase(const NullVector& xi, double h, double x, double y);

struct CgoSolution {
  NullVector xi;
  double h;
  Amplitude amplitude;
  ScalarField r;
  ScalarField u;
};

/// u = a exp(-i x.xi/h) + r with r clamped-biharmonic, (r, d_nu r) = -(a E chi, d_nu(a E chi)).
CgoSolution build_cgo(const ClampedSolver& solver, const NullVector& xi, double h,
                      const Amplitude& amplitude, const Cutoff& chi);

struct GammaTraces {
  double max_u = 0;
  double max_dnu = 0;
};

/// max |u| and |d_nu u| on Gamma; d_nu of the oscillatory part is analytic and d_nu r is
/// the one the solver imposes through the ghost value.
GammaTraces gamma_traces(const GridDomain& grid, const CgoSolution& sol);
/// Same with d_nu u from one-sided differences of the discrete total field.
GammaTraces gamma_traces_one_sided(const GridDomain& grid, const CgoSolution& sol);

/// {0.4 * 0.8^k, k = 0..7} restricted to h >= 4 h_grid |xi|.
std::vector<double> default_h_list(const GridDomain& grid, const NullVector& xi);

struct DecayRow {
  double h;
  double sup;
};

struct DecayProfile {
  std::vector<DecayRow> rows;
  double slope = 0;      ///< d log(sup) / d(1/h)
  double intercept = 0;
  double r_squared = 0;
  bool strictly_decreasing = false;
};

/// sup over interior nodes with x_1 > region_x1 of |r exp(i x.xi/h)| for each h.
DecayProfile remainder_decay_profile(const ClampedSolver& solver, const NullVector& xi,
                                     const Amplitude& amplitude, const Cutoff& chi,
                                     std::span<const double> h_list, double region_x1 = 0.5,
                                     int workers = 1);

/// Throws DecayViolation when the profile rises by more than `noise` relative between
/// consecutive h or the fitted slope is not negative.
void certify_decay(const DecayProfile& p, double noise = 1e-8);

struct SymbolFit {
  std::vector<cplx> coeffs;  ///< c_0..c_d of sum c_k h^{-k}
  double condition = 0;      ///< of the column-scaled Vandermonde matrix
  double residual = 0;       ///< max |fit - data| / max |data|
};

/// Least-squares fit of values(h) by a polynomial of degree d <= 3 in 1/h.
SymbolFit leading_symbol_fit(std::span<const double> h_list, std::span<const cplx> values,
                             int degree);

/// Point values A^{(0)}, ..., A^{(3)} at x0 (rank l in slot l).
using PointCoefficients = std::array<SymTensor, 4>;

/// exp(i x.xi/h) (A# (a E))(x) for an affine amplitude, exact.
cplx sharp_on_oscillation(const PointCoefficients& a, const NullVector& xi, double h,
                          const Amplitude& amplitude, double x, double y);

struct ExtractionOptions {
  std::vector<double> h_list;        ///< empty: default_h_list of the probe
  std::array<double, 2> x0 = {0.85, 0.5};  ///< snapped to the nearest grid node
  double margin = 0.2;
  bool include_remainder = false;    ///< add exp(i x0.xi/h) A#(r)(x0) via finite differences
  int workers = 1;
};

/// Fitted P(h) = exp(i x0.xi/h) A#(v)(x0) for v = a E + r.
struct ProbeExtraction {
  std::vector<double> h_list;
  std::vector<cplx> values;
  SymbolFit fit;
};

ProbeExtraction local_symbol_extraction(const PointCoefficients& a, const NullVector& xi,
                                        const Amplitude& amplitude,
                                        const ExtractionOptions& opt,
                                        const ClampedSolver& solver);

struct CascadeResult {
  SymTensor a3, a2, a1, a0;          ///< full recovered tensors
  SymTensor tf3, tf2;                ///< trace-free parts
  SymTensor iso1, iso0;              ///< a^{(1)}, a^{(0)} with A3 = tf3 + i_delta iso1, A2 = tf2 + iso0 delta
  double max_condition = 0;
  double max_fit_residual = 0;
  int probes_used = 0;
};

/// Both passes of the local argument: amplitude 1 for the trace-free parts, A^{(1)} and A^{(0)};
/// amplitude x_l for the isotropic parts.
CascadeResult local_cascade(const PointCoefficients& a, const ExtractionOptions& opt,
                            const ClampedSolver& solver);

}  // namespace biharm
