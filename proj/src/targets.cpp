#include "mindex/targets.hpp"

#include <cmath>
#include <numeric>

#include "mindex/random.hpp"

namespace mindex {

double hermite_poly(int k, double z) {
  if (k < 0) throw ParameterError("hermite_poly: degree must be non-negative");
  // He_{j+1} = z He_j - j He_{j-1}, then h_k = He_k / sqrt(k!).
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = z;
  double factorial = 1.0;
  for (int j = 1; j < k; ++j) {
    const double next = z * cur - static_cast<double>(j) * prev;
    prev = cur;
    cur = next;
    factorial *= static_cast<double>(j + 1);
  }
  return cur / std::sqrt(factorial);
}

HiddenSubspace make_subspace(int d, int r, SubspaceMode mode, std::uint64_t seed) {
  if (r < 1 || d < 1) throw DimensionError("make_subspace: need 1 <= r <= d");
  if (r > d) throw DimensionError("make_subspace: r = " + std::to_string(r) + " exceeds d = " + std::to_string(d));
  HiddenSubspace s;
  s.U = Matrix::Zero(r, d);
  if (mode == SubspaceMode::axis_aligned) {
    for (int k = 0; k < r; ++k) s.U(k, k) = 1.0;
    return s;
  }
  Rng rng(seed);
  fill_gaussian(rng, s.U);
  for (int k = 0; k < r; ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        const double proj = s.U.row(k).dot(s.U.row(j));
        s.U.row(k) -= proj * s.U.row(j);
      }
    }
    const double norm = s.U.row(k).norm();
    if (norm == 0.0) throw DimensionError("make_subspace: degenerate Gaussian draw");
    s.U.row(k) /= norm;
  }
  return s;
}

LinkFunction::LinkFunction(Kind kind, int arity, int degree) : kind_(kind), arity_(arity), degree_(degree) {}

LinkFunction LinkFunction::quad2d() {
  LinkFunction g(Kind::quad2d, 2, 2);
  g.check_moments();
  return g;
}

LinkFunction LinkFunction::hermite4sum() {
  LinkFunction g(Kind::hermite4sum, 2, 4);
  g.check_moments();
  return g;
}

LinkFunction LinkFunction::hermite_single(int k) {
  if (k < 1) throw ParameterError("hermite_single: degree must be >= 1");
  LinkFunction g(Kind::hermite_single, 1, k);
  g.hermite_k_ = k;
  g.check_moments();
  return g;
}

LinkFunction LinkFunction::polynomial(int arity, std::vector<Monomial> terms) {
  if (arity < 1) throw ParameterError("polynomial link: arity must be >= 1");
  int degree = 0;
  for (const auto& t : terms) {
    if (static_cast<int>(t.powers.size()) != arity) {
      throw DimensionError("polynomial link: monomial arity mismatch");
    }
    int total = 0;
    for (int p : t.powers) {
      if (p < 0) throw ParameterError("polynomial link: negative exponent");
      total += p;
    }
    if (t.coeff != 0.0) degree = std::max(degree, total);
    if (!std::isfinite(t.coeff)) throw ParameterError("polynomial link: non-finite coefficient");
  }
  if (degree < 1) throw ParameterError("polynomial link: degree must be >= 1");
  LinkFunction g(Kind::polynomial, arity, degree);
  g.terms_ = std::move(terms);
  g.check_moments();
  return g;
}

double LinkFunction::operator()(std::span<const double> z) const {
  switch (kind_) {
    case Kind::quad2d:
      return (z[0] * z[0] + 0.5 * z[1] * z[1]) / std::sqrt(2.5);
    case Kind::hermite4sum:
      return hermite_poly(4, z[0]) + hermite_poly(4, z[1]);
    case Kind::hermite_single:
      return hermite_poly(hermite_k_, z[0]);
    case Kind::polynomial: {
      double total = 0.0;
      for (const auto& t : terms_) {
        double v = t.coeff;
        for (int k = 0; k < arity_; ++k) {
          for (int p = 0; p < t.powers[k]; ++p) v *= z[k];
        }
        total += v;
      }
      return total;
    }
  }
  return 0.0;
}

std::string LinkFunction::name() const {
  switch (kind_) {
    case Kind::quad2d: return "quad2d";
    case Kind::hermite4sum: return "hermite4sum";
    case Kind::hermite_single: return "hermite:" + std::to_string(hermite_k_);
    case Kind::polynomial: return "polynomial";
  }
  return "unknown";
}

double LinkFunction::second_moment() const {
  switch (kind_) {
    case Kind::quad2d: return 4.75 / 2.5;
    case Kind::hermite4sum: return 2.0;
    case Kind::hermite_single: return 1.0;
    case Kind::polynomial: break;
  }
  Rng rng(0x5EC0DULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(arity_);
  double acc = 0.0;
  constexpr int kSamples = 1 << 16;
  for (int i = 0; i < kSamples; ++i) {
    for (auto& v : z) v = normal(rng);
    const double g = (*this)(z);
    acc += g * g;
  }
  return acc / kSamples;
}

void LinkFunction::check_moments() const {
  const std::vector<double> zero(arity_, 0.0);
  if (!std::isfinite((*this)(zero))) throw ParameterError("link function is not finite at z = 0");
  if (!std::isfinite(second_moment())) throw ParameterError("link function has non-finite second moment");
}

MultiIndexTarget::MultiIndexTarget(HiddenSubspace subspace, LinkFunction link)
    : subspace_(std::move(subspace)), link_(std::move(link)) {
  if (link_.arity() != subspace_.rank()) {
    throw DimensionError("link arity " + std::to_string(link_.arity()) + " does not match subspace rank " +
                         std::to_string(subspace_.rank()));
  }
  const Matrix& U = subspace_.U;
  axis_aligned_ = true;
  for (Eigen::Index k = 0; k < U.rows() && axis_aligned_; ++k) {
    for (Eigen::Index j = 0; j < U.cols(); ++j) {
      if (U(k, j) != (j == k ? 1.0 : 0.0)) {
        axis_aligned_ = false;
        break;
      }
    }
  }
}

double MultiIndexTarget::operator()(std::span<const double> x) const {
  const int r = rank();
  if (static_cast<int>(x.size()) != dim()) throw DimensionError("eval_target: input length does not match d");
  double z[16];
  std::vector<double> zbuf;
  double* zp = z;
  if (r > 16) {
    zbuf.resize(r);
    zp = zbuf.data();
  }
  if (axis_aligned_) {
    for (int k = 0; k < r; ++k) zp[k] = x[k];
  } else {
    Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    for (int k = 0; k < r; ++k) zp[k] = subspace_.U.row(k).dot(xv.transpose());
  }
  return link_(std::span<const double>(zp, static_cast<std::size_t>(r)));
}

MultiIndexTarget make_target(const std::string& name, int d, SubspaceMode mode, std::uint64_t seed) {
  if (name == "quad2d") return {make_subspace(d, 2, mode, seed), LinkFunction::quad2d()};
  if (name == "hermite4sum") return {make_subspace(d, 2, mode, seed), LinkFunction::hermite4sum()};
  if (name.rfind("hermite:", 0) == 0) {
    const int k = std::stoi(name.substr(8));
    return {make_subspace(d, 1, mode, seed), LinkFunction::hermite_single(k)};
  }
  throw ParameterError("unknown target '" + name + "'");
}

Dataset generate_dataset(const MultiIndexTarget& target, int n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("generate_dataset: n must be >= 1");
  Dataset ds;
  ds.seed = seed;
  ds.X.resize(n, target.dim());
  Rng rng(seed);
  fill_gaussian(rng, ds.X);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    ds.y(i) = target(std::span<const double>(ds.X.row(i).data(), static_cast<std::size_t>(ds.X.cols())));
  }
  return ds;
}

}  // namespace mindex
