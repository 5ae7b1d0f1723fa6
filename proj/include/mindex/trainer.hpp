#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mindex/losses.hpp"
#include "mindex/network.hpp"
#include "mindex/targets.hpp"
#include "mindex/types.hpp"

namespace mindex {

/// Hyperparameters of the layer-wise algorithm.
struct TrainPlan {
  int m = 8;
  int T1 = 1;
  double eta1 = 0.0;
  double beta1 = 0.0;
  double eps0 = 0.0;
  /// Unset: chosen from the feature Gram matrix with backtracking.
  std::optional<double> eta2;
  double beta2 = 1e-3;
  /// Maximum number of stage-2 steps.
  int T2 = 10000;
  /// Stage 2 stops once the relative objective change falls below this (0 disables).
  double stage2_tol = 1e-6;
  bool center = true;
  double C_eta = 4.0;
  double D = 4.0;
  double C_eps = 1.0;
  /// Notes produced while deriving defaults (eps0 floor and similar).
  std::vector<std::string> warnings;

  /// Throws ParameterError unless rates, counts and radii are positive, T1 >= 1 and m is even.
  void validate() const;
};

struct PlanOverrides {
  std::optional<int> T1;
  std::optional<double> eta1, beta1, eps0, eta2, beta2, stage2_tol;
  std::optional<int> T2;
  std::optional<double> C_eta, D, C_eps;
  std::optional<bool> center;
};

/// ceil(sqrt(log d / log kappa)), or ceil(sqrt(log d)) at kappa = 1; at least 1.
int default_T1(int d, double kappa);
/// (1/C_eta) (d / (r iota^2))^{1/(2 T1)} with iota = 4 D log d.
double default_eta1(int d, int r, int T1, double C_eta = 4.0, double D = 4.0);
/// Unfloored value (1/(C_eps m sqrt(n) d^{7/2})) (4/5)^{T1}.
double raw_eps0(int d, int n, int m, int T1, double C_eps = 1.0);
/// Largest eps0 ever returned by default_hyperparams.
double eps0_cap(int d, int m);
/// Floor applied when raw_eps0 underflows.
inline constexpr double kEps0Floor = 1e-150;

TrainPlan default_hyperparams(int d, double kappa, int r, int n, int m, const PlanOverrides& overrides = {});

/// Stage-2 settings expressed through the proof constants J, U, L.
struct Stage2Preset {
  double eta2 = 0.0;
  double beta2 = 0.0;
  int T2 = 0;
};
Stage2Preset closed_form_stage2_preset(double J, double U, double L, int m);

struct Stage1Result {
  NetworkParams params;
  /// Empirical loss before each of the T1 updates.
  std::vector<double> losses;
  /// W^(0), ..., W^(T1) when requested.
  std::vector<Matrix> snapshots;
  /// max_j ||w_j^(t)|| for t = 0..T1.
  std::vector<double> max_row_norms;
  /// Steps t < T1 where max_j ||w_j^(t)|| > d^{t/(2 T1)} eps0.
  int norm_bound_violations = 0;
};

/// T1 - 1 steps W <- W - eta1 (grad + beta1 W), then
/// W <- W - (eta1/eps0) (grad + beta1 eps0 W). Only W changes. With
/// plan.center set, l'(f, y) is shifted by the mean of l'(0, y_i) over D1.
Stage1Result train_stage1(const NetworkParams& params, const Dataset& D1, const Activation& act,
                          const LossFunction& loss, const TrainPlan& plan, bool snapshot = false);

/// b ~ Unif[-3, 3] i.i.d. from `seed`; a <- a_init; W unchanged.
NetworkParams reinit_second_stage(const NetworkParams& params, const Vector& a_init, std::uint64_t seed);

struct Stage2Result {
  NetworkParams params;
  /// Ridge objective after each update.
  std::vector<double> losses;
  double eta2_used = 0.0;
  int steps = 0;
};

/// Ridge gradient descent on a: a <- a - eta2 (grad_a + beta2 a). W and b are
/// untouched. With plan.eta2 unset the step starts at 1/(lambda_max(Phi^T Phi / n) + beta2)
/// and is halved whenever the objective would increase.
Stage2Result train_stage2(const NetworkParams& params, const Dataset& D2, const Activation& act,
                          const LossFunction& loss, const TrainPlan& plan);

struct TrainReport {
  NetworkParams params;
  NetworkParams init;
  std::vector<double> stage1_losses;
  std::vector<double> stage2_losses;
  std::vector<Matrix> snapshots;
  Matrix stage1_W;
  TrainPlan plan;
  std::uint64_t seed = 0;
  double eta2_used = 0.0;
  int stage2_steps = 0;
  int norm_bound_violations = 0;
  double test_mse = 0.0;
  double test_mse_stderr = 0.0;
  double wall_seconds = 0.0;
};

struct Algorithm1Options {
  int n_test = 10000;
  bool snapshots = false;
};

/// Draws D1 and D2 from seeds derived from `seed`, runs init, stage 1, reinit
/// and stage 2, and measures test MSE on a fresh evaluation set.
TrainReport run_algorithm1(const MultiIndexTarget& target, int n, const Activation& act, const LossFunction& loss,
                           const TrainPlan& plan, std::uint64_t seed, const Algorithm1Options& options = {});

struct AdamConfig {
  double lr = 0.005;
  int batch = 32;
  int epochs = 1000;
  double beta_m1 = 0.9;
  double beta_m2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Called after each epoch with the 1-based epoch index. Returning true stops training.
using EpochCallback = std::function<bool(int, const NetworkParams&)>;

struct AdamResult {
  NetworkParams params;
  std::vector<double> epoch_losses;
  int epochs_run = 0;
};

/// Minibatch Adam on a, b and W jointly. Each epoch visits a fresh permutation
/// drawn from `seed`; the last batch may be short.
AdamResult train_adam(const NetworkParams& params, const Dataset& D, const Activation& act, const LossFunction& loss,
                      const AdamConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace mindex
