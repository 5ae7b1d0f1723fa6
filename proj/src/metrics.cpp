#include "mindex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace mindex {

namespace {

void check_shapes(const Matrix& W, const HiddenSubspace& U) {
  if (W.cols() != U.ambient_dim()) throw DimensionError("metric: W width does not match subspace dimension");
}

}  // namespace

Vector direction_coverage(const Matrix& W, const HiddenSubspace& U) {
  check_shapes(W, U);
  Vector cover = Vector::Zero(U.rank());
  bool any = false;
  for (Eigen::Index j = 0; j < W.rows(); ++j) {
    const double norm = W.row(j).norm();
    if (norm == 0.0) continue;
    any = true;
    for (int k = 0; k < U.rank(); ++k) {
      const double c = std::abs(W.row(j).dot(U.U.row(k))) / norm;
      cover(k) = std::max(cover(k), c);
    }
  }
  if (!any) throw UndefinedMetricError("cosine metrics undefined: every row of W is zero");
  return cover;
}

double cos_best(const Matrix& W, const HiddenSubspace& U) { return direction_coverage(W, U).maxCoeff(); }

Vector principal_angles(const Matrix& W, const HiddenSubspace& U) {
  check_shapes(W, U);
  // Canonical form: normalized nonzero rows, largest-magnitude entry positive,
  // sorted lexicographically.
  std::vector<std::vector<double>> rows;
  for (Eigen::Index j = 0; j < W.rows(); ++j) {
    const double norm = W.row(j).norm();
    if (norm == 0.0) continue;
    std::vector<double> r(W.cols());
    Eigen::Index arg = 0;
    W.row(j).cwiseAbs().maxCoeff(&arg);
    const double sign = W(j, arg) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index k = 0; k < W.cols(); ++k) r[k] = sign * W(j, k) / norm;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw UndefinedMetricError("principal_angles: every row of W is zero");
  std::sort(rows.begin(), rows.end());
  Eigen::MatrixXd basis(W.cols(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (Eigen::Index k = 0; k < W.cols(); ++k) basis(k, static_cast<Eigen::Index>(j)) = rows[j][k];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_w(basis, Eigen::ComputeThinU);
  const Vector& sv = svd_w.singularValues();
  const double tol = sv(0) * 1e-10 * static_cast<double>(std::max(basis.rows(), basis.cols()));
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  const Eigen::MatrixXd qw = svd_w.matrixU().leftCols(rank);
  const Eigen::MatrixXd cross = qw.transpose() * U.U.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_c(cross);
  const Vector cosines = svd_c.singularValues();
  Vector angles(cosines.size());
  for (Eigen::Index i = 0; i < cosines.size(); ++i) {
    angles(i) = std::acos(std::clamp(cosines(i), 0.0, 1.0));
  }
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

double test_error_on(const NetworkParams& params, const Activation& act, const Dataset& eval,
                     const std::optional<LossFunction>& loss) {
  const Vector f = forward_batch(params, act, eval.X);
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double e = loss ? loss->value(f(i), eval.y(i)) : (f(i) - eval.y(i)) * (f(i) - eval.y(i));
    total += e;
  }
  return total / static_cast<double>(f.size());
}

ErrorEstimate test_error_estimate(const NetworkParams& params, const Activation& act, const MultiIndexTarget& target,
                                  int n_test, std::uint64_t seed, const std::optional<LossFunction>& loss) {
  if (n_test < 1) throw ParameterError("test_error: n_test must be >= 1");
  const Dataset eval = generate_dataset(target, n_test, seed);
  const Vector f = forward_batch(params, act, eval.X);
  Vector e(n_test);
  for (int i = 0; i < n_test; ++i) {
    e(i) = loss ? loss->value(f(i), eval.y(i)) : (f(i) - eval.y(i)) * (f(i) - eval.y(i));
  }
  ErrorEstimate out;
  out.value = e.mean();
  if (n_test > 1) {
    const double var = (e.array() - out.value).square().sum() / (n_test - 1.0);
    out.stderr_ = std::sqrt(var / n_test);
  }
  return out;
}

RecoveryReport recovery_report(const Matrix& W, const HiddenSubspace& U, double test_error) {
  RecoveryReport rep;
  rep.per_direction = direction_coverage(W, U);
  rep.cos_best = rep.per_direction.maxCoeff();
  rep.coverage_min = rep.per_direction.minCoeff();
  rep.principal_angles = principal_angles(W, U);
  rep.test_error = test_error;
  return rep;
}

}  // namespace mindex
