#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "biharm/cgo.hpp"
#include "biharm/clamped_solver.hpp"
#include "biharm/finite_difference.hpp"
#include "biharm/semilinear.hpp"
#include "biharm/tensor_field.hpp"
#include "biharm/traces.hpp"

namespace biharm {

/// (u, d_nu u) on every boundary node of a field, d_nu u read from the ghost layer.
BoundaryData cauchy_data_of(const GridDomain& grid, const ScalarField& u);

enum class TestFunctionKind { cgo, polynomial, random_boundary_data };
const char* kind_name(TestFunctionKind k);

struct TestFunction {
  ScalarField v;
  BoundaryData data;
  TestFunctionKind kind;
  std::string tag;
};

/// Discrete biharmonic functions with vanishing Cauchy data on Gamma.
class TestFunctionSet {
public:
  explicit TestFunctionSet(const GridDomain& grid, double tol = 1e-10);

  /// Solves the clamped problem for data; data on Gamma must vanish.
  void add_from_data(const ClampedSolver& solver, const BoundaryData& data, TestFunctionKind kind,
                     std::string tag);
  /// Clamped solve with the Sigma traces of a CGO solution (Gamma traces set to zero).
  void add_cgo(const ClampedSolver& solver, const CgoSolution& cgo);
  /// Validates membership: biharmonic residual and Gamma traces below tol.
  void add(ScalarField v, TestFunctionKind kind, std::string tag);

  /// count members with random smooth data on Sigma, vanishing near corners and Gamma.
  static TestFunctionSet random(const ClampedSolver& solver, int count, std::uint64_t seed,
                                int modes = 3, double clearance = 0.1);

  const GridDomain& grid() const { return grid_; }
  std::size_t size() const { return members_.size(); }
  const TestFunction& operator[](std::size_t k) const { return members_[k]; }
  const FieldDerivatives& derivatives(std::size_t k) const { return *derivs_[k]; }

private:
  GridDomain grid_;
  double tol_;
  std::vector<TestFunction> members_;
  std::vector<std::shared_ptr<const FieldDerivatives>> derivs_;
};

/// W^{(l), m-1} for l = 0..3 as polynomial tensor fields.
struct WDifference {
  int order = 1;  ///< m - 1
  std::array<FieldSpec, 4> by_l = {FieldSpec(2, 0), FieldSpec(2, 1), FieldSpec(2, 2), FieldSpec(2, 3)};

  /// Terms A^{(l), order} = by_l[l] of a coefficient model.
  CoefficientModel as_model() const;
  /// by_l[l] at x.
  SymTensor at(int l, std::span<const double> x) const { return by_l[static_cast<std::size_t>(l)].evaluate(x); }
};

/// Per-l tensor fields sampled on a grid; absent ranks are skipped.
struct SampledW {
  std::array<std::vector<TensorField>, 4> fields;

  static SampledW sample(const GridDomain& grid, const WDifference& w);
};

/// int W (sum_j D v_j prod_{r != j} v_r) v_0, trapezoidal; v = {v_0, ..., v_m}.
cplx volume_functional(const GridDomain& grid, const WDifference& w, const std::vector<ScalarField>& v);

/// w with (-Delta)^2 w + W (sum_j D v_j prod_{r != j} v_r) = 0 and zero Cauchy data; v = {v_1, ..., v_m}.
ScalarField linearized_response(const ClampedSolver& solver, const WDifference& w,
                                const std::vector<ScalarField>& v);

enum class ZerothOrderConvention {
  scaled,      ///< A^{(0)} / m
  linearized,  ///< A^{(0)}; sum_k sharp(v_k) then equals the volume form
};

/// int (A^#(x, D) v_0) v_1 ... v_m with all derivatives on v_0.
cplx sharp_functional(const GridDomain& grid, const WDifference& a, const std::vector<ScalarField>& v,
                      ZerothOrderConvention conv = ZerothOrderConvention::scaled);

/// sum over Sigma of [d_nu^3 z v_0 - d_nu^2 z d_nu v_0] h, corners excluded; z = w~ - w.
cplx boundary_functional(const GridDomain& grid, const DnData& dn_diff, const ScalarField& v0,
                         double tol = 1e-10);

/// Basis tensor fields per rank.
class CoefficientBasis {
public:
  struct Element {
    int l;
    FieldSpec field;
    std::string label;
  };

  /// Unit constant tensors (one per storage slot) times monomials of degree <= degree.
  static CoefficientBasis polynomial(const std::vector<int>& ranks, int degree = 0);
  static CoefficientBasis constants(const std::vector<int>& ranks) { return polynomial(ranks, 0); }

  std::size_t size() const { return elements_.size(); }
  const Element& operator[](std::size_t k) const { return elements_[k]; }
  const std::vector<Element>& elements() const { return elements_; }

  /// Throws ConstraintError unless the Gram matrix on the grid has full rank.
  void check_independent(const GridDomain& grid, double rel_tol = 1e-10) const;
  WDifference combine(const std::vector<cplx>& coeffs, int order) const;

private:
  std::vector<Element> elements_;
};

using DnOracle = std::function<DnData(const BoundaryData&)>;

DnOracle make_dn_oracle(std::shared_ptr<const ClampedSolver> solver, const CoefficientModel& model,
                        const PicardOptions& opt = {});

struct RecoveryOptions {
  double eps = 1e-3;
  DifferenceScheme scheme = DifferenceScheme::forward;
  double lambda_rel = 1e-8;      ///< Tikhonov lambda = lambda_rel * ||M||
  double rank_tol = 1e-10;       ///< sigma_min / sigma_max below this is rank deficiency
  int workers = 1;
  std::size_t max_v0 = 0;        ///< 0: every member serves as v_0
};

struct FunctionalPair {
  std::vector<int> tuple;  ///< v_0, v_1, ..., v_m as test-set indices
  cplx boundary;
  cplx volume;             ///< volume functional of the recovered W
};

struct Recovery {
  int m = 2;
  WDifference w;
  std::vector<cplx> coefficients;
  double residual = 0;        ///< ||M c - b|| / ||b||, 0 when b = 0
  double rhs_norm = 0;
  double condition_number = 0;
  double lambda = 0;
  std::vector<double> singular_values;
  std::vector<FunctionalPair> pairs;
};

/// Least squares for W^{(l), m-1} from DN differences of m-fold linearizations.
Recovery recover_w(const DnOracle& truth, const DnOracle& reference, int m,
                   const CoefficientBasis& basis, const TestFunctionSet& tests,
                   const RecoveryOptions& opt = {});

struct CascadeOptions {
  RecoveryOptions recovery;
  double max_residual = 0.25;  ///< abort when exceeded with b above the noise floor
  /// noise floor: max(noise_floor sqrt(rows), noise_rel * largest earlier ||b||)
  double noise_floor = 1e-9;
  double noise_rel = 0.02;
};

/// Orders m = 2..m_max; each recovered W is added to the reference model before the next.
std::vector<Recovery> taylor_cascade(
    const DnOracle& truth, const CoefficientModel& reference,
    const std::function<DnOracle(const CoefficientModel&)>& make_reference, int m_max,
    const CoefficientBasis& basis, const TestFunctionSet& tests, const CascadeOptions& opt = {});

nlohmann::json to_json(const Recovery& r, const CoefficientBasis& basis, const RecoveryOptions& opt);
/// Columns tuple,boundary_re,boundary_im,volume_re,volume_im.
void write_pairs_csv(std::ostream& os, const Recovery& r);

}  // namespace biharm
