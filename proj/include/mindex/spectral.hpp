#pragma once

#include <cstdint>

#include "mindex/losses.hpp"
#include "mindex/targets.hpp"
#include "mindex/types.hpp"

namespace mindex {

/// Dense symmetric d x d matrix. Symmetry is exact: every constructor stores
/// (A + A^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(int d) { return SymMatrix(Eigen::MatrixXd::Zero(d, d)); }
  static SymMatrix diagonal(const Vector& diag);

  const Eigen::MatrixXd& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  /// Largest |eigenvalue|.
  double op_norm() const;

  SymMatrix operator-(const SymMatrix& other) const { return SymMatrix(m_ - other.m_); }

 private:
  Eigen::MatrixXd m_;
};

/// (1/n) sum_i l_i x_i x_i^T.
SymMatrix empirical_sigma(const Eigen::Ref<const Matrix>& X, const Vector& ell);
inline SymMatrix empirical_sigma(const Eigen::Ref<const Matrix>& X, const PreprocValues& ell) {
  return empirical_sigma(X, ell.values());
}

/// Monte Carlo estimate of E[l'(0, y) x x^T] (centered by E[l'(0, y)] when
/// `center` is set). Samples are split into `batches` equal shards with their
/// own derived seeds; the estimate is the mean of the shard estimates and the
/// standard errors come from their spread (batch means).
struct PopulationSigma {
  SymMatrix mean;
  Eigen::MatrixXd entry_stderr;  // per-entry standard error
  double op_stderr = 0.0;        // standard error of the estimate in operator norm
  long long n_mc = 0;
  double ell_mean = 0.0;         // E[l'(0, y)] estimate
};

PopulationSigma population_sigma(const MultiIndexTarget& target, const LossFunction& loss, long long n_mc,
                                 std::uint64_t seed, bool center = true, int batches = 20);

/// Operator-norm standard error of P_out * Sigma * P_in for orthogonal
/// projectors given as d x d matrices, estimated from the same shards.
struct ProjectedPopulationNorm {
  double op_norm = 0.0;
  double op_stderr = 0.0;
};
ProjectedPopulationNorm population_sigma_projected(const MultiIndexTarget& target, const LossFunction& loss,
                                                   long long n_mc, std::uint64_t seed,
                                                   const Eigen::MatrixXd& left, const Eigen::MatrixXd& right,
                                                   bool center = true, int batches = 20);

struct RankRule {
  enum class Kind { fixed, threshold };
  Kind kind = Kind::threshold;
  int rank = 0;
  double tau_rel = 0.2;

  static RankRule fixed(int r) { return {Kind::fixed, r, 0.0}; }
  static RankRule threshold(double tau_rel = 0.2) { return {Kind::threshold, 0, tau_rel}; }
};

struct SpectralReport {
  Vector eigenvalues;            // sorted by |lambda| descending
  Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalues(i)
  int r_hat = 0;
  double kappa_hat = 1.0;        // |lambda_1| / |lambda_rhat|
  double tau_rel = 0.0;          // threshold used (0 under a fixed rule)
  bool degenerate = false;

  Eigen::MatrixXd top_basis() const { return eigenvectors.leftCols(r_hat); }
};

/// Throws DegenerateSpectrumError when a fixed rank lands on a zero eigenvalue.
SpectralReport eigen_report(const SymMatrix& sigma, const RankRule& rule);

/// Row j = eps0^{-1} (-a_j * curvature * eta)^{T1} Sigma^{T1} w_j^(0).
/// `curvature` is sigma''(0); 1 for activations normalized to sigma''(0) = 1.
Matrix oracle_features(const Matrix& W0, const Vector& a, const SymMatrix& sigma, double eta, int T1, double eps0,
                       double curvature = 1.0);

struct DeviationReport {
  Vector per_neuron;
  double max = 0.0;
  double median = 0.0;
};

/// rel_j = ||w_j - w_j^oracle|| / max(||w_j^oracle||, tiny).
DeviationReport deviation_report(const Matrix& W_trained, const Matrix& W_oracle);

/// ||A - B||_op for symmetric A, B.
double noise_norm(const SymMatrix& empirical, const SymMatrix& population);

/// ||U v_i|| for each of the top r_hat eigenvectors.
Vector alignment_to_subspace(const SpectralReport& report, const HiddenSubspace& subspace);

}  // namespace mindex
