#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mindex/types.hpp"

namespace mindex {

/// Normalized probabilist's Hermite polynomial h_k, orthonormal under N(0, 1):
/// E[h_j(z) h_k(z)] = delta_jk. Evaluated with the He_k three-term recurrence
/// and scaled by 1/sqrt(k!).
double hermite_poly(int k, double z);

/// r x d matrix with orthonormal rows spanning the hidden directions.
struct HiddenSubspace {
  Matrix U;

  int ambient_dim() const { return static_cast<int>(U.cols()); }
  int rank() const { return static_cast<int>(U.rows()); }
  Vector direction(int k) const { return U.row(k).transpose(); }
};

enum class SubspaceMode { axis_aligned, random };

/// axis_aligned: rows e_1..e_r. random: Gram-Schmidt of r Gaussian d-vectors
/// (two passes, so U U^T = I_r to rounding).
HiddenSubspace make_subspace(int d, int r, SubspaceMode mode = SubspaceMode::axis_aligned,
                             std::uint64_t seed = 0);

// One term c * prod_k z_k^{powers[k]} of a polynomial link.
struct Monomial {
  std::vector<int> powers;
  double coeff = 0.0;
};

class LinkFunction {
 public:
  enum class Kind { quad2d, hermite4sum, hermite_single, polynomial };

  /// (z_1^2 + z_2^2 / 2) / sqrt(5/2); unit second moment.
  static LinkFunction quad2d();
  /// h_4(z_1) + h_4(z_2).
  static LinkFunction hermite4sum();
  /// h_k(z_1).
  static LinkFunction hermite_single(int k);
  static LinkFunction polynomial(int arity, std::vector<Monomial> terms);

  double operator()(std::span<const double> z) const;

  Kind kind() const { return kind_; }
  int arity() const { return arity_; }
  int degree() const { return degree_; }
  std::string name() const;
  const std::vector<Monomial>& terms() const { return terms_; }

  /// E[g(z)^2] under N(0, I_r); exact for the built-in links, Monte Carlo
  /// (2^16 samples, fixed seed) for general polynomials.
  double second_moment() const;

 private:
  LinkFunction(Kind kind, int arity, int degree);
  void check_moments() const;

  Kind kind_;
  int arity_;
  int degree_;
  int hermite_k_ = 0;
  std::vector<Monomial> terms_;
};

/// f*(x) = g(U x).
class MultiIndexTarget {
 public:
  MultiIndexTarget(HiddenSubspace subspace, LinkFunction link);

  double operator()(std::span<const double> x) const;
  double operator()(const Vector& x) const { return (*this)(std::span<const double>(x.data(), x.size())); }

  const HiddenSubspace& subspace() const { return subspace_; }
  const LinkFunction& link() const { return link_; }
  int dim() const { return subspace_.ambient_dim(); }
  int rank() const { return subspace_.rank(); }

 private:
  HiddenSubspace subspace_;
  LinkFunction link_;
  bool axis_aligned_ = false;
};

/// Builds a target from a name: "quad2d", "hermite4sum", or "hermite:<k>".
MultiIndexTarget make_target(const std::string& name, int d,
                             SubspaceMode mode = SubspaceMode::axis_aligned, std::uint64_t seed = 0);

struct Dataset {
  Matrix X;  // n x d
  Vector y;  // n
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

/// n i.i.d. rows x ~ N(0, I_d) with labels y = f*(x); bit-identical for a given seed.
Dataset generate_dataset(const MultiIndexTarget& target, int n, std::uint64_t seed);

inline double eval_target(const MultiIndexTarget& target, const Vector& x) { return target(x); }

}  // namespace mindex
