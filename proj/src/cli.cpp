#include "mindex/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mindex/approx.hpp"
#include "mindex/experiments.hpp"
#include "mindex/metrics.hpp"
#include "mindex/random.hpp"
#include "mindex/spectral.hpp"
#include "mindex/trainer.hpp"

namespace mindex {

namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"train",        "sweep-alpha", "loss-compare", "spectral",
                                              "verify-approx", "power-check", "noise-scaling"};
  return names;
}

Json report_envelope(const RunConfig& cfg, Json results) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["effective_config"] = cfg.effective_config();
  doc["seed"] = cfg.integer("seed");
  doc["config_hash"] = cfg.hash_hex();
  doc["results"] = std::move(results);
  return doc;
}

namespace {

Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.str("output_dir"));
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const Json& doc) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  writer(f);
}

SubspaceMode subspace_mode(const RunConfig& cfg) {
  return cfg.str("subspace") == "random" ? SubspaceMode::random : SubspaceMode::axis_aligned;
}

MultiIndexTarget main_target(const RunConfig& cfg) {
  return make_target(cfg.str("target"), static_cast<int>(cfg.integer("d")), subspace_mode(cfg),
                     derive_seed(cfg.seed(), SeedStream::population));
}

int sample_size(const RunConfig& cfg) {
  if (auto n = cfg.opt_integer("n")) return static_cast<int>(*n);
  const double d = static_cast<double>(cfg.integer("d"));
  return static_cast<int>(std::floor(4.0 * std::pow(d, 1.5)));
}

LossFunction main_loss(const RunConfig& cfg) { return LossFunction::from_name(cfg.str("loss"), cfg.num("loss_delta")); }

AdamConfig adam_config(const RunConfig& cfg) {
  AdamConfig a;
  a.lr = cfg.num("adam.lr");
  a.batch = static_cast<int>(cfg.integer("adam.batch"));
  a.epochs = static_cast<int>(cfg.integer("adam.epochs"));
  return a;
}

PlanOverrides plan_overrides(const RunConfig& cfg) {
  PlanOverrides ov;
  if (auto v = cfg.opt_integer("T1")) ov.T1 = static_cast<int>(*v);
  ov.eta1 = cfg.opt_num("eta1");
  ov.beta1 = cfg.opt_num("beta1");
  ov.eps0 = cfg.opt_num("eps0");
  ov.eta2 = cfg.opt_num("eta2");
  ov.beta2 = cfg.num("beta2");
  ov.T2 = static_cast<int>(cfg.integer("T2"));
  ov.stage2_tol = cfg.num("stage2_tol");
  ov.C_eta = cfg.num("C_eta");
  ov.D = cfg.num("D");
  ov.C_eps = cfg.num("C_eps");
  ov.center = cfg.flag("center");
  return ov;
}

Json spectral_json(const SpectralReport& rep) {
  Json j;
  j["eigenvalues"] = to_json(rep.eigenvalues);
  j["r_hat"] = rep.r_hat;
  j["kappa_hat"] = rep.kappa_hat;
  j["degenerate"] = rep.degenerate;
  return j;
}

Json recovery_json(const Matrix& W, const HiddenSubspace& U) {
  Json j;
  try {
    const RecoveryReport rec = recovery_report(W, U, 0.0);
    j["cos_best"] = rec.cos_best;
    j["coverage_min"] = rec.coverage_min;
    j["per_direction"] = to_json(rec.per_direction);
    j["principal_angles"] = to_json(rec.principal_angles);
  } catch (const UndefinedMetricError&) {
    j["cos_best"] = nullptr;
    j["coverage_min"] = nullptr;
    j["per_direction"] = nullptr;
    j["principal_angles"] = nullptr;
  }
  return j;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const MultiIndexTarget target = main_target(cfg);
  const int n = sample_size(cfg);
  const int d = target.dim();
  const int m = static_cast<int>(cfg.integer("m"));
  const Activation act = Activation::from_name(cfg.str("activation"));
  const LossFunction loss = main_loss(cfg);
  const std::uint64_t seed = cfg.seed();
  const int n_test = static_cast<int>(cfg.integer("n_test"));

  // Spectrum of the stage-1 preprocessing matrix, on the same D1 the trainer draws.
  const Dataset D1 = generate_dataset(target, n, derive_seed(seed, SeedStream::dataset1));
  const SymMatrix hat = empirical_sigma(D1.X, preprocess(loss, D1.y, cfg.flag("center")));
  const SpectralReport spec = eigen_report(hat, RankRule::threshold());

  Json results;
  std::vector<std::string> warnings;
  NetworkParams final_params;
  double test_mse = 0.0, test_stderr = 0.0;
  if (cfg.str("mode") == "algorithm1") {
    if (!act.satisfies_smoothness_normalization()) {
      warnings.push_back("activation " + act.name() + " does not have sigma'(0) = 0, sigma''(0) = 1");
    }
    double kappa = 1.0;
    if (auto k = cfg.opt_num("kappa")) {
      kappa = *k;
    } else {
      const PopulationSigma pop = population_sigma(target, loss, cfg.integer("spectral.n_mc"),
                                                   derive_seed(seed, SeedStream::population), cfg.flag("center"));
      try {
        kappa = std::max(1.0, eigen_report(pop.mean, RankRule::fixed(target.rank())).kappa_hat);
      } catch (const DegenerateSpectrumError&) {
        warnings.push_back("population matrix is rank deficient; using kappa = 1");
      }
    }
    if (cfg.str("init") == "kaiming") throw ParameterError("algorithm1 mode requires symmetric initialization");
    const TrainPlan plan = default_hyperparams(d, kappa, target.rank(), n, m, plan_overrides(cfg));
    Algorithm1Options opts;
    opts.n_test = n_test;
    const TrainReport rep = run_algorithm1(target, n, act, loss, plan, seed, opts);
    warnings.insert(warnings.end(), rep.plan.warnings.begin(), rep.plan.warnings.end());
    final_params = rep.params;
    test_mse = rep.test_mse;
    test_stderr = rep.test_mse_stderr;
    Json p;
    p["kappa"] = kappa;
    p["T1"] = plan.T1;
    p["eta1"] = plan.eta1;
    p["beta1"] = plan.beta1;
    p["eps0"] = plan.eps0;
    p["eta2"] = rep.eta2_used;
    p["beta2"] = plan.beta2;
    p["T2"] = rep.stage2_steps;
    results["plan"] = p;
    results["stage1_losses"] = rep.stage1_losses;
    results["stage2_losses"] = rep.stage2_losses;
    results["norm_bound_violations"] = rep.norm_bound_violations;
    err << "train: " << std::fixed << std::setprecision(2) << rep.wall_seconds << " s\n";
  } else {
    const std::string init = cfg.str("init");
    NetworkParams start;
    if (init == "symmetric") {
      start = init_symmetric(m, d, cfg.opt_num("eps0").value_or(1e-3), derive_seed(seed, SeedStream::init));
    } else {
      start = init_kaiming(m, d, derive_seed(seed, SeedStream::init));
    }
    const AdamResult res = train_adam(start, D1, act, loss, adam_config(cfg), derive_seed(seed, SeedStream::shuffle));
    final_params = res.params;
    const ErrorEstimate e = test_error_estimate(final_params, act, target, n_test,
                                                derive_seed(seed, SeedStream::test_set));
    test_mse = e.value;
    test_stderr = e.stderr_;
    results["epoch_losses"] = res.epoch_losses;
  }

  Json rec = recovery_json(final_params.W, target.subspace());
  for (auto it = rec.begin(); it != rec.end(); ++it) results[it.key()] = it.value();
  results["n"] = n;
  results["test_mse"] = test_mse;
  results["test_mse_stderr"] = test_stderr;
  results["null_mse"] = target.link().second_moment();
  results["eigenvalues"] = to_json(spec.eigenvalues);
  results["r_hat"] = spec.r_hat;
  results["kappa_hat"] = spec.kappa_hat;
  results["warnings"] = warnings;
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  const fs::path path = output_dir(cfg) / "train_report.json";
  write_json(path, report_envelope(cfg, results));
  out << "test_mse " << test_mse << "  cos_best " << results["cos_best"] << "\n" << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_spectral(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const MultiIndexTarget target = main_target(cfg);
  const int n = sample_size(cfg);
  const LossFunction loss = main_loss(cfg);
  const bool center = cfg.flag("center");
  const Dataset D1 = generate_dataset(target, n, derive_seed(cfg.seed(), SeedStream::dataset1));
  const SymMatrix hat = empirical_sigma(D1.X, preprocess(loss, D1.y, center));
  const PopulationSigma pop = population_sigma(target, loss, cfg.integer("spectral.n_mc"),
                                               derive_seed(cfg.seed(), SeedStream::population), center);
  const RankRule rule = cfg.str("spectral.rank_rule") == "fixed" ? RankRule::fixed(target.rank())
                                                                 : RankRule::threshold(cfg.num("spectral.tau_rel"));
  const SpectralReport rep = eigen_report(hat, rule);

  Json results = spectral_json(rep);
  results["n"] = n;
  results["noise_norm"] = noise_norm(hat, pop.mean);
  results["population_op_stderr"] = pop.op_stderr;
  results["alignment_to_U"] = to_json(alignment_to_subspace(rep, target.subspace()));
  const SpectralReport pop_rep = eigen_report(pop.mean, RankRule::threshold(cfg.num("spectral.tau_rel")));
  results["population_eigenvalues"] = to_json(pop_rep.eigenvalues.head(std::min<Eigen::Index>(8, pop_rep.eigenvalues.size())));

  const fs::path path = output_dir(cfg) / "spectral_report.json";
  write_json(path, report_envelope(cfg, results));
  out << "r_hat " << rep.r_hat << "  kappa_hat " << rep.kappa_hat << "  noise_norm " << results["noise_norm"] << '\n'
      << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_verify_approx(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const int k_max = static_cast<int>(cfg.integer("approx.k_max"));
  const int order = static_cast<int>(cfg.integer("approx.quad_order"));
  const std::vector<double> grid = uniform_grid(static_cast<int>(cfg.integer("approx.grid")));
  Json rows = Json::array();
  out << std::setw(3) << "k" << "  " << std::setw(12) << "max_error" << "  " << std::setw(12) << "sup_abs_v" << '\n';
  bool ok = true;
  for (int k = 0; k <= k_max; ++k) {
    const double e = monomial_error(k, grid, order);
    const double sup = build_weight_fn(k).sup_abs();
    ok = ok && e <= 1e-8;
    out << std::setw(3) << k << "  " << std::setw(12) << std::scientific << std::setprecision(3) << e << "  "
        << std::setw(12) << sup << std::defaultfloat << '\n';
    rows.push_back({{"k", k}, {"max_error", e}, {"sup_abs_v", sup}});
  }
  const fs::path path = output_dir(cfg) / "verify_approx.json";
  write_json(path, report_envelope(cfg, {{"rows", rows}, {"all_within_1e-8", ok}}));
  return 0;
}

int cmd_sweep_alpha(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  AlphaSweepConfig c;
  c.d_list.clear();
  for (auto d : cfg.int_list("sweep.d_list")) c.d_list.push_back(static_cast<int>(d));
  c.alpha_grid = alpha_grid(cfg.num("sweep.alpha_min"), cfg.num("sweep.alpha_max"), cfg.num("sweep.alpha_step"));
  c.eps_list = cfg.num_list("sweep.eps_list");
  c.seeds = static_cast<int>(cfg.integer("sweep.seeds"));
  c.eval_every = static_cast<int>(cfg.integer("sweep.eval_every"));
  c.mode = train_mode_from_name(cfg.str("sweep.mode"));
  c.target = cfg.str("sweep.target");
  c.activation = cfg.str("sweep.activation");
  c.loss = cfg.str("sweep.loss");
  c.huber_delta = cfg.num("loss_delta");
  c.m = static_cast<int>(cfg.integer("sweep.m"));
  c.adam = adam_config(cfg);
  c.n_test = static_cast<int>(cfg.integer("n_test"));
  c.master_seed = cfg.seed();
  c.threads = thread_count();
  const AlphaSweepResult res = sweep_minimal_alpha(c);
  const fs::path dir = output_dir(cfg);
  write_csv(dir / "fig1.csv", [&](std::ostream& f) { write_fig1_csv(f, res.rows); });
  write_csv(dir / "fig1_agg.csv", [&](std::ostream& f) { write_fig1_agg_csv(f, res.agg); });
  write_json(dir / "fig1_manifest.json", report_envelope(cfg, {{"files", Json::array({"fig1.csv", "fig1_agg.csv"})}}));
  write_fig1_agg_csv(out, res.agg);
  return 0;
}

int cmd_loss_compare(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  PhaseConfig c;
  c.d_list.clear();
  for (auto d : cfg.int_list("phase.d_list")) c.d_list.push_back(static_cast<int>(d));
  c.ratio_grid = cfg.num_list("phase.ratios");
  c.losses = cfg.str_list("phase.losses");
  c.huber_delta = cfg.num("loss_delta");
  c.seeds = static_cast<int>(cfg.integer("phase.seeds"));
  c.mode = train_mode_from_name(cfg.str("phase.mode"));
  c.target = cfg.str("phase.target");
  c.activation = cfg.str("phase.activation");
  c.m = static_cast<int>(cfg.integer("phase.m"));
  c.adam = adam_config(cfg);
  c.master_seed = cfg.seed();
  c.threads = thread_count();
  const PhaseResult res = loss_phase_transition(c);
  const fs::path dir = output_dir(cfg);
  write_csv(dir / "fig2.csv", [&](std::ostream& f) { write_fig2_csv(f, res.rows); });
  write_csv(dir / "fig2_agg.csv", [&](std::ostream& f) { write_fig2_agg_csv(f, res.agg); });
  write_json(dir / "fig2_manifest.json", report_envelope(cfg, {{"files", Json::array({"fig2.csv", "fig2_agg.csv"})}}));
  write_fig2_agg_csv(out, res.agg);
  return 0;
}

int cmd_noise_scaling(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  NoiseConfig c;
  c.d = static_cast<int>(cfg.integer("noise.d"));
  c.n_grid = cfg.int_list("noise.n_grid");
  c.seeds = static_cast<int>(cfg.integer("noise.seeds"));
  c.target = cfg.str("noise.target");
  c.loss = cfg.str("noise.loss");
  c.huber_delta = cfg.num("loss_delta");
  c.n_mc = cfg.integer("noise.n_mc");
  c.center = cfg.flag("center");
  c.master_seed = cfg.seed();
  c.threads = thread_count();
  const NoiseResult res = noise_norm_scaling(c);
  const fs::path dir = output_dir(cfg);
  write_csv(dir / "noise.csv", [&](std::ostream& f) { write_noise_csv(f, res.rows); });
  write_json(dir / "noise_manifest.json",
             report_envelope(cfg, {{"files", Json::array({"noise.csv"})},
                                   {"slope", res.slope},
                                   {"population_op_stderr", res.population_op_stderr}}));
  out << "slope " << res.slope << '\n';
  return 0;
}

int cmd_power_check(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  PowerConfig c;
  c.d = static_cast<int>(cfg.integer("power.d"));
  c.n = static_cast<int>(cfg.integer("power.n"));
  c.T1_list.clear();
  for (auto t : cfg.int_list("power.T1_list")) c.T1_list.push_back(static_cast<int>(t));
  c.eps0_list = cfg.num_list("power.eps0_list");
  c.seeds = static_cast<int>(cfg.integer("power.seeds"));
  c.m = static_cast<int>(cfg.integer("power.m"));
  c.target = cfg.str("power.target");
  c.activation = cfg.str("power.activation");
  c.loss = cfg.str("power.loss");
  c.huber_delta = cfg.num("loss_delta");
  c.n_mc = cfg.integer("power.n_mc");
  c.master_seed = cfg.seed();
  c.threads = thread_count();
  const std::vector<PowerRow> rows = power_check(c);
  const fs::path dir = output_dir(cfg);
  write_csv(dir / "power.csv", [&](std::ostream& f) { write_power_csv(f, rows); });
  write_json(dir / "power_manifest.json", report_envelope(cfg, {{"files", Json::array({"power.csv"})}}));
  write_power_csv(out, rows);
  return 0;
}

std::string usage() {
  std::ostringstream u;
  u << "usage: mindex <subcommand> [--config FILE] [--seed N] [--out DIR] [--preset desk|full] [--set key=value]...\n"
    << "subcommands:";
  for (const auto& s : subcommands()) u << ' ' << s;
  u << '\n';
  return u.str();
}

}  // namespace

int dispatch(const std::string& subcommand, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (subcommand == "train") return cmd_train(cfg, out, err);
    if (subcommand == "spectral") return cmd_spectral(cfg, out, err);
    if (subcommand == "verify-approx") return cmd_verify_approx(cfg, out, err);
    if (subcommand == "sweep-alpha") return cmd_sweep_alpha(cfg, out, err);
    if (subcommand == "loss-compare") return cmd_loss_compare(cfg, out, err);
    if (subcommand == "noise-scaling") return cmd_noise_scaling(cfg, out, err);
    if (subcommand == "power-check") return cmd_power_check(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "unknown subcommand '" << subcommand << "'\n" << usage();
  return 2;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-wise training of two-layer networks on Gaussian multi-index targets"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  std::optional<long long> seed;
  std::optional<std::string> out_dir, preset;
  std::vector<std::string> sets;
  std::optional<long long> k_max, grid, quad_order;

  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file (key = value, or a JSON report)");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--preset", preset, "desk or full");
    sub->add_option("--set", sets, "override any config key: key=value")->allow_extra_args(false);
    if (name == "verify-approx") {
      sub->add_option("--k-max", k_max, "largest monomial degree");
      sub->add_option("--grid", grid, "number of z grid points on [-1, 1]");
      sub->add_option("--quad-order", quad_order, "Gauss-Legendre order per piece");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help() << usage();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << usage();
    return 2;
  }

  std::vector<std::pair<std::string, Json>> flags;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      err << "error: --set expects key=value, got '" << s << "'\n";
      return 2;
    }
    flags.emplace_back(s.substr(0, eq), parse_flag_value(s.substr(eq + 1)));
  }
  if (seed) flags.emplace_back("seed", *seed);
  if (out_dir) flags.emplace_back("output_dir", *out_dir);
  if (preset) flags.emplace_back("preset", *preset);
  if (k_max) flags.emplace_back("approx.k_max", *k_max);
  if (grid) flags.emplace_back("approx.grid", *grid);
  if (quad_order) flags.emplace_back("approx.quad_order", *quad_order);

  RunConfig cfg;
  try {
    cfg = parse_config(config_path, flags);
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  return dispatch(sub, cfg, out, err);
}

}  // namespace mindex
