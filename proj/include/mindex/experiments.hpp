#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mindex/losses.hpp"
#include "mindex/trainer.hpp"

namespace mindex {

enum class TrainMode { adam, algorithm1 };
TrainMode train_mode_from_name(const std::string& name);
std::string train_mode_name(TrainMode mode);

/// Worker count: MINDEX_THREADS if set to a positive integer, else the hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown after all workers stop.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Seed for one cell, derived from the master seed and the cell's identity only.
std::uint64_t cell_seed(std::uint64_t master, const std::string& experiment, int d, long long n,
                        const std::string& loss, int seed_index);

// ---- minimal sample-size exponent --------------------------------------------------

struct Fig1Row {
  int d = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  int seed = 0;
  double test_error = 0.0;
  bool achieved = false;
};

struct Fig1AggRow {
  int d = 0;
  double epsilon = 0.0;
  /// NaN when no seed reached the threshold on the grid.
  double mean_min_alpha = 0.0;
  int n_seeds = 0;
};

struct AlphaSweepConfig {
  std::vector<int> d_list{32, 64, 128};
  std::vector<double> alpha_grid;
  std::vector<double> eps_list{0.1};
  int seeds = 5;
  TrainMode mode = TrainMode::adam;
  std::string target = "quad2d";
  std::string activation = "quadratic";
  std::string loss = "square";
  double huber_delta = 1.0;
  int m = 4;
  AdamConfig adam{};
  /// Test error is measured every this many epochs; the cell keeps the smallest value seen.
  int eval_every = 10;
  int n_test = 10000;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

/// alpha_0, alpha_0 + step, ... up to alpha_1 (inclusive within rounding).
std::vector<double> alpha_grid(double lo, double hi, double step);

struct AlphaSweepResult {
  std::vector<Fig1Row> rows;
  std::vector<Fig1AggRow> agg;
};

/// For each (d, seed), trains at n = floor(d^alpha) for ascending alpha until
/// every threshold is met. Minimal alpha per (d, epsilon) is averaged over the
/// seeds that reached it.
AlphaSweepResult sweep_minimal_alpha(const AlphaSweepConfig& cfg);

// ---- loss phase transition ---------------------------------------------------------

struct Fig2Row {
  std::string loss;
  int d = 0;
  double ratio = 0.0;
  int seed = 0;
  double cos_best = 0.0;
};

struct Fig2AggRow {
  std::string loss;
  int d = 0;
  double ratio = 0.0;
  double p30 = 0.0;
  double p50 = 0.0;
  double p70 = 0.0;
};

struct PhaseConfig {
  std::vector<int> d_list{200};
  std::vector<double> ratio_grid{5, 10, 20, 40, 80};
  std::vector<std::string> losses{"huber", "square"};
  double huber_delta = 1.0;
  int seeds = 5;
  TrainMode mode = TrainMode::adam;
  std::string target = "hermite4sum";
  std::string activation = "cosine";
  int m = 4;
  AdamConfig adam{};
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct PhaseResult {
  std::vector<Fig2Row> rows;
  std::vector<Fig2AggRow> agg;
};

PhaseResult loss_phase_transition(const PhaseConfig& cfg);

// ---- noise-norm scaling ------------------------------------------------------------

struct NoiseRow {
  int d = 0;
  long long n = 0;
  int seed = 0;
  double noise_op_norm = 0.0;
};

struct NoiseConfig {
  int d = 64;
  std::vector<long long> n_grid{256, 512, 1024, 2048, 4096, 8192, 16384};
  int seeds = 20;
  std::string target = "hermite4sum";
  std::string loss = "huber";
  double huber_delta = 1.0;
  long long n_mc = 1LL << 22;
  bool center = true;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

struct NoiseResult {
  std::vector<NoiseRow> rows;
  /// Least-squares slope of log median norm against log n.
  double slope = 0.0;
  double population_op_stderr = 0.0;
};

NoiseResult noise_norm_scaling(const NoiseConfig& cfg);

// ---- stage-1 power-iteration check -------------------------------------------------

struct PowerRow {
  int d = 0;
  int n = 0;
  int T1 = 0;
  double eps0 = 0.0;
  int seed = 0;
  double max_rel_dev_empirical = 0.0;
  double max_rel_dev_population = 0.0;
};

struct PowerConfig {
  int d = 64;
  int n = 2048;
  std::vector<int> T1_list{3};
  /// Empty: the default eps0 for each T1 and half of it.
  std::vector<double> eps0_list;
  int seeds = 1;
  int m = 8;
  std::string target = "quad2d";
  std::string activation = "cubed_smooth";
  std::string loss = "square";
  double huber_delta = 1.0;
  long long n_mc = 1LL << 20;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

/// Unfloored, uncapped initialization level used as the default in power checks.

std::vector<PowerRow> power_check(const PowerConfig& cfg);

// ---- CSV output --------------------------------------------------------------------

void write_fig1_csv(std::ostream& out, const std::vector<Fig1Row>& rows);
void write_fig1_agg_csv(std::ostream& out, const std::vector<Fig1AggRow>& rows);
void write_fig2_csv(std::ostream& out, const std::vector<Fig2Row>& rows);
void write_fig2_agg_csv(std::ostream& out, const std::vector<Fig2AggRow>& rows);
void write_noise_csv(std::ostream& out, const std::vector<NoiseRow>& rows);
void write_power_csv(std::ostream& out, const std::vector<PowerRow>& rows);

/// Shortest round-trip decimal form of a double ("nan" for NaN).
std::string format_double(double v);

}  // namespace mindex
