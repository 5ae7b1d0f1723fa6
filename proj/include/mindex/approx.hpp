#pragma once

#include <vector>

#include "mindex/network.hpp"
#include "mindex/types.hpp"

namespace mindex {

struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
QuadratureRule gauss_legendre(int n);
/// n-point Gauss-Hermite rule for the standard normal weight; weights sum to 1.
QuadratureRule gauss_hermite_prob(int n);

/// One polynomial piece of a weight function:
/// h(a, b) = sum_i coeffs[i] (b - center)^i for b in [lo, hi] and the given sign a.
struct WeightTerm {
  int a = 1;
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;
  std::vector<double> coeffs;

  double eval(double b) const;
};

/// v_k on {+-1} x [-3, 3] with respect to a ~ Unif{+-1}, b ~ Unif[-3, 3].
/// Stored density-free: v = h / mu with mu = 1/6, so that
/// E_{a,b}[v sigma(az + b)] = (1/2) sum_a int h(a, b) sigma(az + b) db.
class WeightFunction {
 public:
  WeightFunction(int k, std::vector<WeightTerm> terms);

  int degree() const { return k_; }
  const std::vector<WeightTerm>& terms() const { return terms_; }

  /// h(a, b); zero outside the support.
  double density_free(int a, double b) const;
  /// v(a, b) = 6 h(a, b).
  double operator()(int a, double b) const;
  double support_lo() const;
  double support_hi() const;
  /// sup |v| estimated on a fine b-grid including every piece endpoint.
  double sup_abs(int points_per_piece = 2001) const;

 private:
  int k_;
  std::vector<WeightTerm> terms_;
};

/// Closed forms for k <= 2; for k >= 3 the degree-k kernel on [0, 1] combined
/// with v_2 and v_0 (even k) or v_1 (odd k).
WeightFunction build_weight_fn(int k);

/// E_{a,b}[v(a, b) sigma(az + b)], integrated piecewise with Gauss-Legendre of
/// order `quad_order` between the kinks of sigma and the term boundaries.
double weight_expectation(const WeightFunction& v, const Activation& act, double z, int quad_order);

/// max over z_grid of |E[v_k sigma(az + b)] - z^k| for the locally quadratic activation.
double monomial_error(int k, const std::vector<double>& z_grid, int quad_order);

/// n equally spaced points covering [-1, 1].
std::vector<double> uniform_grid(int n);

}  // namespace mindex
