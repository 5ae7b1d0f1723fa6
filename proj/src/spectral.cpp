#include "mindex/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mindex/random.hpp"
#include "mindex/stats.hpp"

namespace mindex {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("SymMatrix: matrix must be square");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  return SymMatrix(Eigen::MatrixXd(diag.asDiagonal()));
}

double SymMatrix::op_norm() const {
  if (m_.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SymMatrix empirical_sigma(const Eigen::Ref<const Matrix>& X, const Vector& ell) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw ParameterError("empirical_sigma: n must be >= 1");
  if (ell.size() != n) throw DimensionError("empirical_sigma: weight count does not match sample count");
  const Matrix weighted = X.array().colwise() * ell.array();
  Eigen::MatrixXd s = X.transpose() * weighted;
  s /= static_cast<double>(n);
  return SymMatrix(s);
}

namespace {

// Centered (or raw) estimate of E[l'(0,y) x x^T] on each shard.
std::vector<Eigen::MatrixXd> shard_estimates(const MultiIndexTarget& target, const LossFunction& loss,
                                             long long n_mc, std::uint64_t seed, bool center, int batches,
                                             double& ell_mean) {
  if (n_mc < 10000) throw ParameterError("population_sigma: n_mc must be >= 1e4");
  if (batches < 2) throw ParameterError("population_sigma: need at least two shards");
  const int d = target.dim();
  const long long per_shard = n_mc / batches;
  constexpr long long kChunk = 8192;
  std::vector<Eigen::MatrixXd> shards;
  shards.reserve(batches);
  double ell_total = 0.0;
  for (int k = 0; k < batches; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    Eigen::MatrixXd weighted_sum = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(d, d);
    double ell_sum = 0.0;
    for (long long done = 0; done < per_shard; done += kChunk) {
      const auto rows = static_cast<Eigen::Index>(std::min(kChunk, per_shard - done));
      Matrix X(rows, d);
      fill_gaussian(rng, X);
      Vector ell(rows);
      for (Eigen::Index i = 0; i < rows; ++i) {
        const double y = target(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(d)));
        ell(i) = loss.d1(0.0, y);
      }
      const Matrix weighted = X.array().colwise() * ell.array();
      weighted_sum.noalias() += X.transpose() * weighted;
      if (center) second_moment.noalias() += X.transpose() * X;
      ell_sum += ell.sum();
    }
    const double inv = 1.0 / static_cast<double>(per_shard);
    Eigen::MatrixXd est = weighted_sum * inv;
    if (center) est -= (ell_sum * inv) * (second_moment * inv);
    shards.push_back(0.5 * (est + est.transpose()));
    ell_total += ell_sum;
  }
  ell_mean = ell_total / static_cast<double>(per_shard * batches);
  return shards;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

PopulationSigma population_sigma(const MultiIndexTarget& target, const LossFunction& loss, long long n_mc,
                                 std::uint64_t seed, bool center, int batches) {
  PopulationSigma out;
  const auto shards = shard_estimates(target, loss, n_mc, seed, center, batches, out.ell_mean);
  const auto K = static_cast<double>(shards.size());
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(target.dim(), target.dim());
  for (const auto& s : shards) mean += s;
  mean /= K;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
  double op_sq = 0.0;
  for (const auto& s : shards) {
    const Eigen::MatrixXd diff = s - mean;
    var.array() += diff.array().square();
    const double op = SymMatrix(diff).op_norm();
    op_sq += op * op;
  }
  out.mean = SymMatrix(mean);
  out.entry_stderr = (var.array() / (K * (K - 1.0))).sqrt();
  out.op_stderr = std::sqrt(op_sq / (K * (K - 1.0)));
  out.n_mc = static_cast<long long>(K) * (n_mc / batches);
  return out;
}

ProjectedPopulationNorm population_sigma_projected(const MultiIndexTarget& target, const LossFunction& loss,
                                                   long long n_mc, std::uint64_t seed,
                                                   const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                                                   bool center, int batches) {
  double ell_mean = 0.0;
  const auto shards = shard_estimates(target, loss, n_mc, seed, center, batches, ell_mean);
  const auto K = static_cast<double>(shards.size());
  std::vector<Eigen::MatrixXd> projected;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(left.rows(), right.cols());
  for (const auto& s : shards) {
    projected.push_back(left * s * right);
    mean += projected.back();
  }
  mean /= K;
  double op_sq = 0.0;
  for (const auto& p : projected) {
    const double op = spectral_norm(p - mean);
    op_sq += op * op;
  }
  return {spectral_norm(mean), std::sqrt(op_sq / (K * (K - 1.0)))};
}

SpectralReport eigen_report(const SymMatrix& sigma, const RankRule& rule) {
  const Eigen::MatrixXd& m = sigma.matrix();
  if (!m.allFinite()) throw ParameterError("eigen_report: matrix has non-finite entries");
  const int d = sigma.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  const Vector& evals = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return std::abs(evals(i)) > std::abs(evals(j)); });
  SpectralReport rep;
  rep.eigenvalues.resize(d);
  rep.eigenvectors.resize(d, d);
  for (int i = 0; i < d; ++i) {
    rep.eigenvalues(i) = evals(order[i]);
    rep.eigenvectors.col(i) = es.eigenvectors().col(order[i]);
  }
  const double top = d > 0 ? std::abs(rep.eigenvalues(0)) : 0.0;
  if (rule.kind == RankRule::Kind::fixed) {
    if (rule.rank < 1 || rule.rank > d) throw DimensionError("eigen_report: fixed rank out of range");
    const double last = std::abs(rep.eigenvalues(rule.rank - 1));
    if (last == 0.0) throw DegenerateSpectrumError("eigen_report: eigenvalue " + std::to_string(rule.rank) + " is zero");
    rep.r_hat = rule.rank;
    rep.kappa_hat = top / last;
    return rep;
  }
  rep.tau_rel = rule.tau_rel;
  if (top == 0.0) {
    rep.r_hat = 0;
    rep.degenerate = true;
    return rep;
  }
  int count = 0;
  while (count < d && std::abs(rep.eigenvalues(count)) >= rule.tau_rel * top) ++count;
  rep.r_hat = count;
  rep.kappa_hat = top / std::abs(rep.eigenvalues(count - 1));
  return rep;
}

Matrix oracle_features(const Matrix& W0, const Vector& a, const SymMatrix& sigma, double eta, int T1, double eps0,
                       double curvature) {
  if (W0.rows() != a.size()) throw DimensionError("oracle_features: a length does not match neuron count");
  if (W0.cols() != sigma.dim()) throw DimensionError("oracle_features: Sigma dimension does not match d");
  if (T1 < 1) throw ParameterError("oracle_features: T1 must be >= 1");
  // Sigma^{T1} applied to every row at once.
  Eigen::MatrixXd powered = W0.transpose();
  for (int t = 0; t < T1; ++t) powered = sigma.matrix() * powered;
  Matrix out(W0.rows(), W0.cols());
  for (Eigen::Index j = 0; j < W0.rows(); ++j) {
    double coeff = 1.0;
    for (int t = 0; t < T1; ++t) coeff *= -a(j) * curvature * eta;
    out.row(j) = (coeff * powered.col(j).transpose()) / eps0;
  }
  return out;
}

DeviationReport deviation_report(const Matrix& W_trained, const Matrix& W_oracle) {
  if (W_trained.rows() != W_oracle.rows() || W_trained.cols() != W_oracle.cols()) {
    throw DimensionError("deviation_report: shape mismatch");
  }
  constexpr double kTiny = 1e-300;
  DeviationReport rep;
  rep.per_neuron.resize(W_trained.rows());
  for (Eigen::Index j = 0; j < W_trained.rows(); ++j) {
    const double denom = std::max(W_oracle.row(j).norm(), kTiny);
    rep.per_neuron(j) = (W_trained.row(j) - W_oracle.row(j)).norm() / denom;
  }
  std::vector<double> v(rep.per_neuron.data(), rep.per_neuron.data() + rep.per_neuron.size());
  rep.max = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  rep.median = v.empty() ? 0.0 : stats::median(v);
  return rep;
}

double noise_norm(const SymMatrix& empirical, const SymMatrix& population) {
  if (empirical.dim() != population.dim()) throw DimensionError("noise_norm: shape mismatch");
  return (empirical - population).op_norm();
}

Vector alignment_to_subspace(const SpectralReport& report, const HiddenSubspace& subspace) {
  Vector out(report.r_hat);
  for (int i = 0; i < report.r_hat; ++i) {
    out(i) = (subspace.U * report.eigenvectors.col(i)).norm();
  }
  return out;
}

}  // namespace mindex
