#include "mindex/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mindex/metrics.hpp"
#include "mindex/random.hpp"

namespace mindex {

void TrainPlan::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string("TrainPlan: ") + name + " must be positive");
  };
  if (T1 < 1) throw ParameterError("TrainPlan: T1 must be >= 1");
  if (m < 2 || m % 2 != 0) throw ParameterError("TrainPlan: m must be even and positive");
  if (T2 < 1) throw ParameterError("TrainPlan: T2 must be >= 1");
  positive(eta1, "eta1");
  positive(beta1, "beta1");
  positive(eps0, "eps0");
  positive(beta2, "beta2");
  positive(C_eta, "C_eta");
  positive(D, "D");
  positive(C_eps, "C_eps");
  if (eta2 && !(*eta2 > 0.0)) throw ParameterError("TrainPlan: eta2 must be positive");
  if (stage2_tol < 0.0) throw ParameterError("TrainPlan: stage2_tol must be >= 0");
}

int default_T1(int d, double kappa) {
  if (d < 2) throw ParameterError("default_T1: d must be >= 2");
  if (!(kappa >= 1.0)) throw ParameterError("default_T1: kappa must be >= 1");
  const double logd = std::log(static_cast<double>(d));
  const double ratio = kappa == 1.0 ? logd : logd / std::log(kappa);
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(ratio))));
}

double default_eta1(int d, int r, int T1, double C_eta, double D) {
  if (d < 2 || r < 1 || T1 < 1) throw ParameterError("default_eta1: need d >= 2, r >= 1, T1 >= 1");
  const double iota = 4.0 * D * std::log(static_cast<double>(d));
  return std::pow(static_cast<double>(d) / (r * iota * iota), 1.0 / (2.0 * T1)) / C_eta;
}

double raw_eps0(int d, int n, int m, int T1, double C_eps) {
  const double dd = static_cast<double>(d);
  return std::pow(0.8, T1) / (C_eps * m * std::sqrt(static_cast<double>(n)) * std::pow(dd, 3.5));
}

double eps0_cap(int d, int m) { return 1.0 / (128.0 * m * std::pow(static_cast<double>(d), 3.5)); }

TrainPlan default_hyperparams(int d, double kappa, int r, int n, int m, const PlanOverrides& ov) {
  if (d < 2) throw ParameterError("default_hyperparams: d must be >= 2");
  if (!(kappa >= 1.0)) throw ParameterError("default_hyperparams: kappa must be >= 1");
  if (n < 1) throw ParameterError("default_hyperparams: n must be >= 1");
  TrainPlan plan;
  plan.m = m;
  plan.C_eta = ov.C_eta.value_or(plan.C_eta);
  plan.D = ov.D.value_or(plan.D);
  plan.C_eps = ov.C_eps.value_or(plan.C_eps);
  plan.T1 = ov.T1.value_or(default_T1(d, kappa));
  plan.eta1 = ov.eta1.value_or(default_eta1(d, r, plan.T1, plan.C_eta, plan.D));
  plan.beta1 = ov.beta1.value_or(1.0 / plan.eta1);
  if (ov.eps0) {
    plan.eps0 = *ov.eps0;
  } else {
    const double raw = raw_eps0(d, n, m, plan.T1, plan.C_eps);
    plan.eps0 = std::min(eps0_cap(d, m), raw);
    if (!(plan.eps0 >= kEps0Floor)) {
      std::ostringstream msg;
      msg << "eps0 = " << plan.eps0 << " is below the floor; using " << kEps0Floor;
      plan.warnings.push_back(msg.str());
      plan.eps0 = kEps0Floor;
    }
  }
  if (ov.eta2) plan.eta2 = *ov.eta2;
  plan.beta2 = ov.beta2.value_or(plan.beta2);
  plan.T2 = ov.T2.value_or(plan.T2);
  plan.stage2_tol = ov.stage2_tol.value_or(plan.stage2_tol);
  plan.center = ov.center.value_or(plan.center);
  plan.validate();
  return plan;
}

Stage2Preset closed_form_stage2_preset(double J, double U, double L, int m) {
  if (!(J > 0.0) || !(U > 0.0) || !(L > 0.0) || m < 1) {
    throw ParameterError("closed_form_stage2_preset: J, U, L and m must be positive");
  }
  Stage2Preset p;
  const double U2 = U * U;
  p.beta2 = J / U2;
  p.eta2 = U2 / (L * std::sqrt(static_cast<double>(m)) * U2 + 2.0 * J);
  const double steps = std::ceil((U2 * L * m / J) * std::log(U * m));
  p.T2 = static_cast<int>(std::clamp(steps, 1.0, 1e9));
  return p;
}

namespace {

double mean_loss(const LossFunction& loss, const Vector& out, const Eigen::Ref<const Vector>& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) total += loss.value(out(i), y(i));
  return total / static_cast<double>(out.size());
}

double max_row_norm(const Matrix& W) { return W.rows() == 0 ? 0.0 : W.rowwise().norm().maxCoeff(); }

}  // namespace

Stage1Result train_stage1(const NetworkParams& params, const Dataset& D1, const Activation& act,
                          const LossFunction& loss, const TrainPlan& plan, bool snapshot) {
  if (plan.T1 < 1) throw ParameterError("train_stage1: T1 must be >= 1");
  if (!(plan.eps0 > 0.0)) throw ParameterError("train_stage1: eps0 must be positive");
  if (D1.X.cols() != params.dim()) throw DimensionError("train_stage1: data dimension does not match W");
  if (D1.X.rows() == 0) throw ParameterError("train_stage1: empty dataset");

  const double offset = preprocess(loss, D1.y, plan.center).offset();
  const double d = static_cast<double>(params.dim());

  Stage1Result res;
  res.params = params;
  Matrix& W = res.params.W;
  Gradients grads;
  GradientWorkspace ws;
  auto record = [&](int t) {
    const double norm = max_row_norm(W);
    res.max_row_norms.push_back(norm);
    if (t < plan.T1 && norm > std::pow(d, t / (2.0 * plan.T1)) * plan.eps0 * (1.0 + 1e-12)) {
      ++res.norm_bound_violations;
    }
    if (snapshot) res.snapshots.push_back(W);
  };
  record(0);
  for (int t = 1; t <= plan.T1; ++t) {
    compute_gradients(res.params, act, loss, D1.X, D1.y, grads, ws, offset);
    res.losses.push_back(mean_loss(loss, ws.out, D1.y));
    if (t < plan.T1) {
      W -= plan.eta1 * (grads.W + plan.beta1 * W);
    } else {
      const double rate = plan.eta1 / plan.eps0;
      const double decay = plan.beta1 * plan.eps0;
      W -= rate * (grads.W + decay * W);
    }
    record(t);
  }
  return res;
}

NetworkParams reinit_second_stage(const NetworkParams& params, const Vector& a_init, std::uint64_t seed) {
  if (a_init.size() != params.width()) throw DimensionError("reinit_second_stage: a_init length mismatch");
  NetworkParams out = params;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (Eigen::Index j = 0; j < out.b.size(); ++j) out.b(j) = unif(rng);
  out.a = a_init;
  return out;
}

Stage2Result train_stage2(const NetworkParams& params, const Dataset& D2, const Activation& act,
                          const LossFunction& loss, const TrainPlan& plan) {
  if (D2.X.cols() != params.dim()) throw DimensionError("train_stage2: data dimension does not match W");
  const auto n = static_cast<double>(D2.X.rows());
  if (n == 0) throw ParameterError("train_stage2: empty dataset");
  if (plan.eta2 && *plan.eta2 < 0.0) throw ParameterError("train_stage2: eta2 must be >= 0");

  Matrix pre = D2.X * params.W.transpose();
  pre.rowwise() += params.b.transpose();
  Matrix phi;
  act.apply(pre, phi);

  const double beta2 = plan.beta2;
  auto objective = [&](const Vector& a, Vector& out) {
    out = phi * a;
    return mean_loss(loss, out, D2.y) + 0.5 * beta2 * a.squaredNorm();
  };
  auto gradient = [&](const Vector& a, const Vector& out) {
    Vector dl(out.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) dl(i) = loss.d1(out(i), D2.y(i));
    Vector g = phi.transpose() * dl / n;
    g += beta2 * a;
    return g;
  };

  Stage2Result res;
  res.params = params;
  Vector& a = res.params.a;
  const bool backtrack = !plan.eta2.has_value();
  double eta = 0.0;
  if (backtrack) {
    const Eigen::MatrixXd gram = (phi.transpose() * phi) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double lam = es.eigenvalues().size() ? std::max(0.0, es.eigenvalues().maxCoeff()) : 0.0;
    const double curv = loss.curvature_bound() > 0.0 ? loss.curvature_bound() : 1.0;
    eta = 1.0 / (curv * lam + beta2);
  } else {
    eta = *plan.eta2;
  }

  Vector out;
  double current = objective(a, out);
  Vector trial_out;
  for (int t = 0; t < plan.T2; ++t) {
    const Vector g = gradient(a, out);
    Vector next = a - eta * g;
    double value = objective(next, trial_out);
    if (backtrack) {
      for (int halvings = 0; halvings < 60 && value > current; ++halvings) {
        eta *= 0.5;
        next = a - eta * g;
        value = objective(next, trial_out);
      }
    }
    a = next;
    out.swap(trial_out);
    res.losses.push_back(value);
    ++res.steps;
    const double change = std::abs(current - value);
    current = value;
    if (plan.stage2_tol > 0.0 && change <= plan.stage2_tol * std::max(std::abs(value), 1e-300)) break;
  }
  res.eta2_used = eta;
  return res;
}

TrainReport run_algorithm1(const MultiIndexTarget& target, int n, const Activation& act, const LossFunction& loss,
                           const TrainPlan& plan, std::uint64_t seed, const Algorithm1Options& options) {
  plan.validate();
  if (n < 1) throw ParameterError("run_algorithm1: n must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const Dataset D1 = generate_dataset(target, n, derive_seed(seed, SeedStream::dataset1));
  const Dataset D2 = generate_dataset(target, n, derive_seed(seed, SeedStream::dataset2));

  TrainReport rep;
  rep.plan = plan;
  rep.seed = seed;
  rep.init = init_symmetric(plan.m, target.dim(), plan.eps0, derive_seed(seed, SeedStream::init));

  Stage1Result s1 = train_stage1(rep.init, D1, act, loss, plan, options.snapshots);
  rep.stage1_losses = std::move(s1.losses);
  rep.snapshots = std::move(s1.snapshots);
  rep.norm_bound_violations = s1.norm_bound_violations;
  rep.stage1_W = s1.params.W;
  if (s1.norm_bound_violations > 0) {
    rep.plan.warnings.push_back("stage-1 norm bound exceeded at " + std::to_string(s1.norm_bound_violations) +
                                " step(s)");
  }

  const NetworkParams reinit =
      reinit_second_stage(s1.params, rep.init.a, derive_seed(seed, SeedStream::bias_reinit));
  Stage2Result s2 = train_stage2(reinit, D2, act, loss, plan);
  rep.stage2_losses = std::move(s2.losses);
  rep.eta2_used = s2.eta2_used;
  rep.stage2_steps = s2.steps;
  rep.params = std::move(s2.params);

  const ErrorEstimate err =
      test_error_estimate(rep.params, act, target, options.n_test, derive_seed(seed, SeedStream::test_set));
  rep.test_mse = err.value;
  rep.test_mse_stderr = err.stderr_;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

void AdamConfig::validate() const {
  if (!(lr >= 0.0)) throw ParameterError("AdamConfig: lr must be >= 0");
  if (batch < 1) throw ParameterError("AdamConfig: batch must be >= 1");
  if (epochs < 1) throw ParameterError("AdamConfig: epochs must be >= 1");
  if (!(beta_m1 >= 0.0 && beta_m1 < 1.0) || !(beta_m2 >= 0.0 && beta_m2 < 1.0)) {
    throw ParameterError("AdamConfig: moment decay rates must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ParameterError("AdamConfig: eps must be positive");
}

namespace {

template <typename T>
struct Moments {
  T m, v;
  explicit Moments(const T& shape) : m(T::Zero(shape.rows(), shape.cols())), v(T::Zero(shape.rows(), shape.cols())) {}

  void step(T& param, const T& grad, const AdamConfig& cfg, double bias1, double bias2) {
    m = cfg.beta_m1 * m + (1.0 - cfg.beta_m1) * grad;
    v = cfg.beta_m2 * v + (1.0 - cfg.beta_m2) * grad.cwiseProduct(grad);
    const double step = cfg.lr / bias1;
    param.array() -= step * m.array() / ((v.array() / bias2).sqrt() + cfg.eps);
  }
};

}  // namespace

AdamResult train_adam(const NetworkParams& params, const Dataset& D, const Activation& act, const LossFunction& loss,
                      const AdamConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto n = static_cast<int>(D.X.rows());
  if (n == 0) throw ParameterError("train_adam: empty dataset");
  if (D.X.cols() != params.dim()) throw DimensionError("train_adam: data dimension does not match W");

  AdamResult res;
  res.params = params;
  NetworkParams& p = res.params;
  Moments<Matrix> mW(p.W);
  Moments<Vector> ma(p.a);
  Moments<Vector> mb(p.b);

  Rng rng(seed);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const int batch = std::min(cfg.batch, n);
  Matrix Xb(batch, D.X.cols());
  Vector yb(batch);
  Gradients grads;
  GradientWorkspace ws;
  long long step = 0;
  double pow1 = 1.0, pow2 = 1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int rows = std::min(batch, n - start);
      if (rows != Xb.rows()) {
        Xb.resize(rows, D.X.cols());
        yb.resize(rows);
      }
      for (int r = 0; r < rows; ++r) {
        Xb.row(r) = D.X.row(perm[start + r]);
        yb(r) = D.y(perm[start + r]);
      }
      compute_gradients(p, act, loss, Xb, yb, grads, ws);
      loss_sum += mean_loss(loss, ws.out, yb) * rows;
      ++step;
      pow1 *= cfg.beta_m1;
      pow2 *= cfg.beta_m2;
      const double bias1 = 1.0 - pow1, bias2 = 1.0 - pow2;
      mW.step(p.W, grads.W, cfg, bias1, bias2);
      ma.step(p.a, grads.a, cfg, bias1, bias2);
      mb.step(p.b, grads.b, cfg, bias1, bias2);
      if (rows != batch) {
        Xb.resize(batch, D.X.cols());
        yb.resize(batch);
      }
    }
    res.epoch_losses.push_back(loss_sum / n);
    res.epochs_run = epoch;
    if (on_epoch && on_epoch(epoch, p)) break;
  }
  return res;
}

}  // namespace mindex
