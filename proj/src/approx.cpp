#include "mindex/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mindex {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights are
// mu0 times the squared first components of its eigenvectors.
QuadratureRule golub_welsch(const Vector& offdiag, double mu0) {
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    J(i, i + 1) = offdiag(i);
    J(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

constexpr double kMu = 1.0 / 6.0;

WeightTerm term(int a, double lo, double hi, double center, std::vector<double> coeffs) {
  return {a, lo, hi, center, std::move(coeffs)};
}

std::vector<WeightTerm> scaled(std::vector<WeightTerm> terms, double c) {
  for (auto& t : terms) {
    for (auto& x : t.coeffs) x *= c;
  }
  return terms;
}

void append(std::vector<WeightTerm>& to, const std::vector<WeightTerm>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

std::vector<WeightTerm> terms_v0() { return {term(1, 2.0, 3.0, 2.5, {0.0, 12.0})}; }
std::vector<WeightTerm> terms_v1() { return {term(1, 2.0, 3.0, 2.5, {1.0, -24.0})}; }
std::vector<WeightTerm> terms_v2() {
  std::vector<WeightTerm> t{term(1, -2.0, 2.0, 0.0, {1.0})};
  append(t, scaled(terms_v0(), -7.0 / 3.0));
  return t;
}

// -(1/2) k (k-1) (k-2) (1 - b)^{k-3} on [0, 1], scaled by c.
WeightTerm kernel(int k, int a, double c) {
  std::vector<double> coeffs(static_cast<std::size_t>(k - 2), 0.0);
  const double sign = (k - 3) % 2 == 0 ? 1.0 : -1.0;  // (1-b)^p = (-1)^p (b-1)^p
  coeffs.back() = c * sign * -0.5 * k * (k - 1.0) * (k - 2.0);
  return term(a, 0.0, 1.0, 1.0, std::move(coeffs));
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ParameterError("gauss_legendre: n must be >= 1");
  Vector off(n - 1);
  for (int i = 1; i < n; ++i) off(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
  return golub_welsch(off, 2.0);
}

QuadratureRule gauss_hermite_prob(int n) {
  if (n < 1) throw ParameterError("gauss_hermite_prob: n must be >= 1");
  Vector off(n - 1);
  for (int i = 1; i < n; ++i) off(i - 1) = std::sqrt(static_cast<double>(i));
  return golub_welsch(off, 1.0);
}

double WeightTerm::eval(double b) const {
  if (b < lo || b > hi) return 0.0;
  const double u = b - center;
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + *it;
  return acc;
}

WeightFunction::WeightFunction(int k, std::vector<WeightTerm> terms) : k_(k), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.a != 1 && t.a != -1) throw ParameterError("WeightFunction: a must be +1 or -1");
    if (!(t.lo < t.hi) || t.lo < -3.0 || t.hi > 3.0) throw ParameterError("WeightFunction: piece outside [-3, 3]");
  }
}

double WeightFunction::density_free(int a, double b) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    if (t.a == a) acc += t.eval(b);
  }
  return acc;
}

double WeightFunction::operator()(int a, double b) const { return density_free(a, b) / kMu; }

double WeightFunction::support_lo() const {
  double lo = 3.0;
  for (const auto& t : terms_) lo = std::min(lo, t.lo);
  return lo;
}

double WeightFunction::support_hi() const {
  double hi = -3.0;
  for (const auto& t : terms_) hi = std::max(hi, t.hi);
  return hi;
}

double WeightFunction::sup_abs(int points_per_piece) const {
  double best = 0.0;
  for (int a : {1, -1}) {
    for (const auto& t : terms_) {
      for (int i = 0; i < points_per_piece; ++i) {
        const double b = t.lo + (t.hi - t.lo) * i / (points_per_piece - 1.0);
        best = std::max(best, std::abs((*this)(a, b)));
      }
    }
  }
  return best;
}

WeightFunction build_weight_fn(int k) {
  if (k < 0) throw ParameterError("build_weight_fn: k must be >= 0");
  switch (k) {
    case 0: return WeightFunction(0, terms_v0());
    case 1: return WeightFunction(1, terms_v1());
    case 2: return WeightFunction(2, terms_v2());
    default: break;
  }
  std::vector<WeightTerm> terms;
  if (k % 2 == 0) {
    terms.push_back(kernel(k, 1, 2.0));
    terms.push_back(kernel(k, -1, 2.0));
    append(terms, scaled(terms_v2(), k * (k - 1.0)));
    append(terms, scaled(terms_v0(), 2.0));
  } else {
    terms.push_back(kernel(k, 1, 2.0));
    terms.push_back(kernel(k, -1, -2.0));
    append(terms, scaled(terms_v1(), 2.0 * k));
  }
  return WeightFunction(k, std::move(terms));
}

double weight_expectation(const WeightFunction& v, const Activation& act, double z, int quad_order) {
  if (quad_order < 4) throw ParameterError("quad_order must be >= 4");
  const QuadratureRule rule = gauss_legendre(quad_order);
  double total = 0.0;
  for (const auto& t : v.terms()) {
    // Kinks of sigma(az + b) in b, for the activations with piecewise pieces at |t| = 1.
    std::vector<double> cuts{t.lo, t.hi};
    for (double kink : {1.0 - t.a * z, -1.0 - t.a * z}) {
      if (kink > t.lo && kink < t.hi) cuts.push_back(kink);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double half = 0.5 * (cuts[p + 1] - cuts[p]);
      const double mid = 0.5 * (cuts[p + 1] + cuts[p]);
      if (half <= 0.0) continue;
      double s = 0.0;
      for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double b = mid + half * rule.nodes(i);
        s += rule.weights(i) * t.eval(b) * act.value(t.a * z + b);
      }
      total += half * s;
    }
  }
  return 0.5 * total;
}

double monomial_error(int k, const std::vector<double>& z_grid, int quad_order) {
  if (quad_order < 4) throw ParameterError("quad_order must be >= 4");
  const WeightFunction v = build_weight_fn(k);
  const Activation act = Activation::locally_quadratic();
  double worst = 0.0;
  for (double z : z_grid) {
    if (z < -1.0 || z > 1.0) throw ParameterError("monomial_error: grid point outside [-1, 1]");
    worst = std::max(worst, std::abs(weight_expectation(v, act, z, quad_order) - std::pow(z, k)));
  }
  return worst;
}

std::vector<double> uniform_grid(int n) {
  if (n < 2) throw ParameterError("uniform_grid: need at least two points");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = -1.0 + 2.0 * i / (n - 1.0);
  return g;
}

}  // namespace mindex
