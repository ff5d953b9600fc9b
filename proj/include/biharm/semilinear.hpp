#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biharm/clamped_solver.hpp"
#include "biharm/error.hpp"
#include "biharm/finite_difference.hpp"
#include "biharm/parallel.hpp"
#include "biharm/tensor_field.hpp"
#include "biharm/traces.hpp"

namespace biharm {

/// A^{(l)}(x, z) = sum_k z^k / k! A^{(l),k}(x), k >= 1.
class CoefficientModel {
public:
  struct Term {
    int l;
    int k;
    FieldSpec field;
  };

  CoefficientModel() = default;

  /// Adds field to A^{(l),k}; terms with the same (l, k) accumulate.
  void add(int l, int k, FieldSpec field);
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int k_max() const;
  /// Model restricted to the Taylor orders k in [k_lo, k_hi].
  CoefficientModel orders(int k_lo, int k_hi) const;

  CoefficientModel& operator+=(const CoefficientModel& o);
  friend CoefficientModel operator+(CoefficientModel a, const CoefficientModel& b) { return a += b; }

private:
  std::vector<Term> terms_;
};

/// {"terms": [{"l", "k", "field": tensor field JSON}]}; a bare array of terms is also read.
nlohmann::json to_json(const CoefficientModel& m);
CoefficientModel coefficient_model_from_json(const nlohmann::json& j);
CoefficientModel load_coefficient_model(const std::string& path);

/// A model sampled on a grid: A^{(l),k} as TensorFields.
class DiscreteModel {
public:
  DiscreteModel(const CoefficientModel& model, const GridDomain& grid);

  const GridDomain& grid() const { return grid_; }
  int k_max() const { return k_max_; }
  bool is_zero() const { return zero_; }
  /// nullptr when A^{(l),k} is absent.
  const TensorField* coefficient(int l, int k) const;

private:
  GridDomain grid_;
  int k_max_ = 0;
  bool zero_ = true;
  std::array<std::vector<TensorField>, 4> fields_;  ///< index k-1
  std::array<std::vector<bool>, 4> present_;
};

/// <A, D^{(l)} u> at node (i, j), D^{(l)} = i^{-l} d^l, from precomputed derivatives.
cplx contract_derivatives(const SymTensor& a, const FieldDerivatives& d, int i, int j);

/// sum_l <A^{(l)}(x, u), D^{(l)} u> at every physical node.
ScalarField apply_nonlinear_operator(const DiscreteModel& model, const ScalarField& u);

struct PicardOptions {
  double tol = 1e-14;        ///< on max |u^{k+1} - u^k|
  int max_iter = 200;
  double delta_max = 1.0;    ///< bound on max|f| + max|g|
};

struct PicardLog {
  std::vector<double> increments;
  int iterations = 0;
  double contraction_ratio = 0;  ///< last increment ratio
};

struct SemilinearSolution {
  ScalarField u;
  PicardLog log;
};

/// (-Delta)^2 u + sum_l <A^{(l)}(x, u), D^{(l)} u> = 0 with clamped data, by Picard iteration
/// u^{k+1} = solve(-N(u^k), f, g).
SemilinearSolution solve_semilinear(const ClampedSolver& solver, const DiscreteModel& model,
                                    const BoundaryData& data, const PicardOptions& opt = {});

/// (d_nu^2 u, d_nu^3 u) on Sigma for data vanishing on Gamma.
DnData dn_map(const ClampedSolver& solver, const DiscreteModel& model, const BoundaryData& data,
              const PicardOptions& opt = {});

enum class DifferenceScheme { forward, symmetric };

/// m-th mixed divided difference of oracle at 0 in the directions dirs with step eps.
/// forward: sum_S (-1)^{m-|S|} F(eps sum_{k in S} d_k) / eps^m, error O(eps);
/// symmetric: sum_s prod(s) F(eps sum s_k d_k) / (2 eps)^m, error O(eps^2).
template <class T>
T mixed_difference(const std::function<T(const BoundaryData&)>& oracle,
                   const std::vector<BoundaryData>& dirs, double eps,
                   DifferenceScheme scheme = DifferenceScheme::forward, int workers = 1) {
  const int m = static_cast<int>(dirs.size());
  if (m < 1 || m > 16) throw ConstraintError("mixed difference needs 1..16 directions");
  if (!(eps > 0.0)) throw ConstraintError("difference step must be positive");
  const std::size_t count = std::size_t{1} << m;
  std::vector<T> values(count);
  std::vector<double> weights(count);
  parallel_for(count, workers, [&](std::size_t mask) {
    BoundaryData data = dirs[0] * cplx(0.0);
    double w = 1.0;
    for (int k = 0; k < m; ++k) {
      const bool bit = (mask >> k) & 1u;
      double s;
      if (scheme == DifferenceScheme::forward) {
        s = bit ? 1.0 : 0.0;
        if (!bit) w = -w;
      } else {
        s = bit ? 1.0 : -1.0;
        w *= s;
      }
      if (s != 0.0) data += dirs[static_cast<std::size_t>(k)] * cplx(s * eps);
    }
    values[mask] = oracle(data);
    weights[mask] = w;
  });
  const double denom = std::pow(scheme == DifferenceScheme::forward ? eps : 2.0 * eps, m);
  T acc = values[0] * cplx(weights[0] / denom);
  for (std::size_t k = 1; k < count; ++k) acc = acc + values[k] * cplx(weights[k] / denom);
  return acc;
}

}  // namespace biharm
