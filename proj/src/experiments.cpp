#include "mindex/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "mindex/metrics.hpp"
#include "mindex/random.hpp"
#include "mindex/spectral.hpp"
#include "mindex/stats.hpp"

namespace mindex {

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "adam") return TrainMode::adam;
  if (name == "algorithm1") return TrainMode::algorithm1;
  throw ParameterError("unknown mode '" + name + "' (expected adam or algorithm1)");
}

std::string train_mode_name(TrainMode mode) { return mode == TrainMode::adam ? "adam" : "algorithm1"; }

int thread_count() {
  if (const char* env = std::getenv("MINDEX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t cell_seed(std::uint64_t master, const std::string& experiment, int d, long long n,
                        const std::string& loss, int seed_index) {
  const std::string key = experiment + "|" + std::to_string(d) + "|" + std::to_string(n) + "|" + loss + "|" +
                          std::to_string(seed_index);
  return splitmix64(master ^ fnv1a64(key));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// Plan for an Algorithm-1 cell, with kappa taken from the empirical matrix of D1.
TrainPlan algorithm1_plan(const MultiIndexTarget& target, const LossFunction& loss, int n, int m,
                          std::uint64_t seed) {
  const Dataset D1 = generate_dataset(target, n, derive_seed(seed, SeedStream::dataset1));
  const SymMatrix sigma = empirical_sigma(D1.X, preprocess(loss, D1.y));
  double kappa = 1.0;
  try {
    kappa = std::max(1.0, eigen_report(sigma, RankRule::fixed(target.rank())).kappa_hat);
  } catch (const DegenerateSpectrumError&) {
  }
  return default_hyperparams(target.dim(), kappa, target.rank(), n, m);
}

struct CellOutcome {
  NetworkParams params;
  double test_error = 0.0;
};

}  // namespace

std::vector<double> alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ParameterError("alpha_grid: need step > 0 and hi >= lo");
  std::vector<double> grid;
  const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= count; ++i) grid.push_back(lo + step * i);
  return grid;
}

AlphaSweepResult sweep_minimal_alpha(const AlphaSweepConfig& cfg) {
  if (cfg.alpha_grid.empty()) throw ParameterError("sweep_minimal_alpha: empty alpha grid");
  if (!std::is_sorted(cfg.alpha_grid.begin(), cfg.alpha_grid.end())) {
    throw ParameterError("sweep_minimal_alpha: alpha grid must be increasing");
  }
  if (cfg.eps_list.empty()) throw ParameterError("sweep_minimal_alpha: empty epsilon list");
  if (cfg.seeds < 1) throw ParameterError("sweep_minimal_alpha: seeds must be >= 1");
  cfg.adam.validate();
  const Activation act = Activation::from_name(cfg.activation);
  const LossFunction loss = LossFunction::from_name(cfg.loss, cfg.huber_delta);
  const double eps_min = *std::min_element(cfg.eps_list.begin(), cfg.eps_list.end());

  struct Cell {
    int d;
    int seed;
    std::vector<Fig1Row> rows;
  };
  std::vector<Cell> cells;
  for (int d : cfg.d_list) {
    for (int s = 0; s < cfg.seeds; ++s) cells.push_back({d, s, {}});
  }

  parallel_for(static_cast<int>(cells.size()), cfg.threads, [&](int idx) {
    Cell& cell = cells[idx];
    const MultiIndexTarget target = make_target(cfg.target, cell.d, SubspaceMode::axis_aligned, cfg.master_seed);
    std::vector<bool> done(cfg.eps_list.size(), false);
    for (double alpha : cfg.alpha_grid) {
      const int n = static_cast<int>(std::floor(std::pow(static_cast<double>(cell.d), alpha)));
      const std::uint64_t seed = cell_seed(cfg.master_seed, "fig1", cell.d, n, loss.name(), cell.seed);
      double err = std::numeric_limits<double>::infinity();
      if (cfg.mode == TrainMode::adam) {
        const Dataset D = generate_dataset(target, n, derive_seed(seed, SeedStream::dataset1));
        const Dataset eval = generate_dataset(target, cfg.n_test, derive_seed(seed, SeedStream::test_set));
        const NetworkParams init = init_kaiming(cfg.m, cell.d, derive_seed(seed, SeedStream::init));
        auto on_epoch = [&](int epoch, const NetworkParams& p) {
          if (epoch % cfg.eval_every != 0 && epoch != cfg.adam.epochs) return false;
          err = std::min(err, test_error_on(p, act, eval));
          return err <= eps_min;
        };
        train_adam(init, D, act, loss, cfg.adam, derive_seed(seed, SeedStream::shuffle), on_epoch);
      } else {
        const TrainPlan plan = algorithm1_plan(target, loss, n, cfg.m, seed);
        Algorithm1Options opts;
        opts.n_test = cfg.n_test;
        err = run_algorithm1(target, n, act, loss, plan, seed, opts).test_mse;
      }
      bool all_done = true;
      for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
        if (done[e]) continue;
        const bool ok = err <= cfg.eps_list[e];
        cell.rows.push_back({cell.d, alpha, cfg.eps_list[e], cell.seed, err, ok});
        done[e] = ok;
        all_done = all_done && ok;
      }
      if (all_done) break;
    }
  });

  AlphaSweepResult res;
  for (const auto& cell : cells) res.rows.insert(res.rows.end(), cell.rows.begin(), cell.rows.end());
  for (int d : cfg.d_list) {
    for (double eps : cfg.eps_list) {
      std::vector<double> minima;
      for (const auto& cell : cells) {
        if (cell.d != d) continue;
        for (const auto& row : cell.rows) {
          if (row.epsilon == eps && row.achieved) {
            minima.push_back(row.alpha);
            break;
          }
        }
      }
      Fig1AggRow agg;
      agg.d = d;
      agg.epsilon = eps;
      agg.n_seeds = static_cast<int>(minima.size());
      agg.mean_min_alpha = minima.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(minima);
      res.agg.push_back(agg);
    }
  }
  return res;
}

PhaseResult loss_phase_transition(const PhaseConfig& cfg) {
  if (cfg.seeds < 1) throw ParameterError("loss_phase_transition: seeds must be >= 1");
  cfg.adam.validate();
  const Activation act = Activation::from_name(cfg.activation);
  std::vector<LossFunction> losses;
  for (const auto& name : cfg.losses) losses.push_back(LossFunction::from_name(name, cfg.huber_delta));

  std::vector<Fig2Row> rows;
  for (std::size_t l = 0; l < losses.size(); ++l) {
    for (int d : cfg.d_list) {
      for (double ratio : cfg.ratio_grid) {
        for (int s = 0; s < cfg.seeds; ++s) rows.push_back({cfg.losses[l], d, ratio, s, 0.0});
      }
    }
  }

  parallel_for(static_cast<int>(rows.size()), cfg.threads, [&](int idx) {
    Fig2Row& row = rows[idx];
    const auto l = static_cast<std::size_t>(std::find(cfg.losses.begin(), cfg.losses.end(), row.loss) -
                                            cfg.losses.begin());
    const LossFunction& loss = losses[l];
    const MultiIndexTarget target = make_target(cfg.target, row.d, SubspaceMode::axis_aligned, cfg.master_seed);
    const int n = static_cast<int>(std::llround(row.ratio * row.d));
    if (n < 1) throw ParameterError("loss_phase_transition: ratio * d must be >= 1");
    const std::uint64_t seed = cell_seed(cfg.master_seed, "fig2", row.d, n, loss.name(), row.seed);
    Matrix W;
    if (cfg.mode == TrainMode::adam) {
      const Dataset D = generate_dataset(target, n, derive_seed(seed, SeedStream::dataset1));
      const NetworkParams init = init_kaiming(cfg.m, row.d, derive_seed(seed, SeedStream::init));
      W = train_adam(init, D, act, loss, cfg.adam, derive_seed(seed, SeedStream::shuffle)).params.W;
    } else {
      const TrainPlan plan = algorithm1_plan(target, loss, n, cfg.m, seed);
      Algorithm1Options opts;
      opts.n_test = 1000;
      W = run_algorithm1(target, n, act, loss, plan, seed, opts).stage1_W;
    }
    row.cos_best = cos_best(W, target.subspace());
  });

  PhaseResult res;
  res.rows = rows;
  for (const auto& name : cfg.losses) {
    for (int d : cfg.d_list) {
      for (double ratio : cfg.ratio_grid) {
        std::vector<double> vals;
        for (const auto& row : rows) {
          if (row.loss == name && row.d == d && row.ratio == ratio) vals.push_back(row.cos_best);
        }
        res.agg.push_back({name, d, ratio, stats::quantile(vals, 0.3), stats::quantile(vals, 0.5),
                           stats::quantile(vals, 0.7)});
      }
    }
  }
  return res;
}

NoiseResult noise_norm_scaling(const NoiseConfig& cfg) {
  if (cfg.seeds < 1) throw ParameterError("noise_norm_scaling: seeds must be >= 1");
  if (cfg.n_grid.size() < 2) throw ParameterError("noise_norm_scaling: need at least two sample sizes");
  const LossFunction loss = LossFunction::from_name(cfg.loss, cfg.huber_delta);
  const MultiIndexTarget target = make_target(cfg.target, cfg.d, SubspaceMode::axis_aligned, cfg.master_seed);
  const PopulationSigma pop =
      population_sigma(target, loss, cfg.n_mc, derive_seed(cfg.master_seed, SeedStream::population), cfg.center);

  NoiseResult res;
  res.population_op_stderr = pop.op_stderr;
  for (long long n : cfg.n_grid) {
    for (int s = 0; s < cfg.seeds; ++s) res.rows.push_back({cfg.d, n, s, 0.0});
  }
  parallel_for(static_cast<int>(res.rows.size()), cfg.threads, [&](int idx) {
    NoiseRow& row = res.rows[idx];
    const std::uint64_t seed = cell_seed(cfg.master_seed, "noise", row.d, row.n, loss.name(), row.seed);
    const Dataset D = generate_dataset(target, static_cast<int>(row.n), derive_seed(seed, SeedStream::dataset1));
    const SymMatrix hat = empirical_sigma(D.X, preprocess(loss, D.y, cfg.center));
    row.noise_op_norm = noise_norm(hat, pop.mean);
  });

  std::vector<double> log_n, log_med;
  for (long long n : cfg.n_grid) {
    std::vector<double> vals;
    for (const auto& row : res.rows) {
      if (row.n == n) vals.push_back(row.noise_op_norm);
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_med.push_back(std::log(stats::median(vals)));
  }
  res.slope = stats::slope(log_n, log_med);
  return res;
}


std::vector<PowerRow> power_check(const PowerConfig& cfg) {
  if (cfg.seeds < 1) throw ParameterError("power_check: seeds must be >= 1");
  if (cfg.T1_list.empty()) throw ParameterError("power_check: empty T1 list");
  const Activation act = Activation::from_name(cfg.activation);
  const LossFunction loss = LossFunction::from_name(cfg.loss, cfg.huber_delta);
  const MultiIndexTarget target = make_target(cfg.target, cfg.d, SubspaceMode::axis_aligned, cfg.master_seed);
  const PopulationSigma pop =
      population_sigma(target, loss, cfg.n_mc, derive_seed(cfg.master_seed, SeedStream::population));
  double kappa = 1.0;
  try {
    kappa = std::max(1.0, eigen_report(pop.mean, RankRule::fixed(target.rank())).kappa_hat);
  } catch (const DegenerateSpectrumError&) {
  }
  const double curvature = act.metadata().d2_at_zero;

  struct Job {
    int T1;
    double eps0;
    int seed;
  };
  std::vector<Job> jobs;
  for (int T1 : cfg.T1_list) {
    std::vector<double> levels = cfg.eps0_list;
    if (levels.empty()) {
      const double base = raw_eps0(cfg.d, cfg.n, cfg.m, T1);
      levels = {base, 0.5 * base};
    }
    for (double eps0 : levels) {
      for (int s = 0; s < cfg.seeds; ++s) jobs.push_back({T1, eps0, s});
    }
  }
  std::vector<PowerRow> rows(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int idx) {
    const Job& job = jobs[idx];
    // Data and init directions depend on the seed only, so eps0 levels differ by scale alone.
    const std::uint64_t seed = cell_seed(cfg.master_seed, "power", cfg.d, cfg.n, loss.name(), job.seed);
    PlanOverrides ov;
    ov.T1 = job.T1;
    ov.eps0 = job.eps0;
    const TrainPlan plan = default_hyperparams(cfg.d, kappa, target.rank(), cfg.n, cfg.m, ov);
    const Dataset D1 = generate_dataset(target, cfg.n, derive_seed(seed, SeedStream::dataset1));
    const NetworkParams init = init_symmetric(cfg.m, cfg.d, job.eps0, derive_seed(seed, SeedStream::init));
    const Stage1Result s1 = train_stage1(init, D1, act, loss, plan);
    const SymMatrix hat = empirical_sigma(D1.X, preprocess(loss, D1.y, plan.center));
    const Matrix emp = oracle_features(init.W, init.a, hat, plan.eta1, plan.T1, plan.eps0, curvature);
    const Matrix popo = oracle_features(init.W, init.a, pop.mean, plan.eta1, plan.T1, plan.eps0, curvature);
    PowerRow& row = rows[idx];
    row.d = cfg.d;
    row.n = cfg.n;
    row.T1 = job.T1;
    row.eps0 = job.eps0;
    row.seed = job.seed;
    row.max_rel_dev_empirical = deviation_report(s1.params.W, emp).max;
    row.max_rel_dev_population = deviation_report(s1.params.W, popo).max;
  });
  return rows;
}

void write_fig1_csv(std::ostream& out, const std::vector<Fig1Row>& rows) {
  out << "d,alpha,epsilon,seed,test_error,achieved\n";
  for (const auto& r : rows) {
    out << r.d << ',' << format_double(r.alpha) << ',' << format_double(r.epsilon) << ',' << r.seed << ','
        << format_double(r.test_error) << ',' << (r.achieved ? "true" : "false") << '\n';
  }
}

void write_fig1_agg_csv(std::ostream& out, const std::vector<Fig1AggRow>& rows) {
  out << "d,epsilon,mean_min_alpha,n_seeds\n";
  for (const auto& r : rows) {
    out << r.d << ',' << format_double(r.epsilon) << ','
        << (std::isnan(r.mean_min_alpha) ? std::string("none") : format_double(r.mean_min_alpha)) << ','
        << r.n_seeds << '\n';
  }
}

void write_fig2_csv(std::ostream& out, const std::vector<Fig2Row>& rows) {
  out << "loss,d,ratio,seed,cos_best\n";
  for (const auto& r : rows) {
    out << r.loss << ',' << r.d << ',' << format_double(r.ratio) << ',' << r.seed << ',' << format_double(r.cos_best)
        << '\n';
  }
}

void write_fig2_agg_csv(std::ostream& out, const std::vector<Fig2AggRow>& rows) {
  out << "loss,d,ratio,p30,p50,p70\n";
  for (const auto& r : rows) {
    out << r.loss << ',' << r.d << ',' << format_double(r.ratio) << ',' << format_double(r.p30) << ','
        << format_double(r.p50) << ',' << format_double(r.p70) << '\n';
  }
}

void write_noise_csv(std::ostream& out, const std::vector<NoiseRow>& rows) {
  out << "d,n,seed,noise_op_norm\n";
  for (const auto& r : rows) out << r.d << ',' << r.n << ',' << r.seed << ',' << format_double(r.noise_op_norm) << '\n';
}

void write_power_csv(std::ostream& out, const std::vector<PowerRow>& rows) {
  out << "d,n,T1,eps0,seed,max_rel_dev_empirical,max_rel_dev_population\n";
  for (const auto& r : rows) {
    out << r.d << ',' << r.n << ',' << r.T1 << ',' << format_double(r.eps0) << ',' << r.seed << ','
        << format_double(r.max_rel_dev_empirical) << ',' << format_double(r.max_rel_dev_population) << '\n';
  }
}

}  // namespace mindex
