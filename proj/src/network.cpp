#include "mindex/network.hpp"

#include <cmath>

#include "mindex/random.hpp"

namespace mindex {

Activation Activation::from_name(const std::string& name) {
  if (name == "locally_quadratic") return locally_quadratic();
  if (name == "quadratic") return quadratic();
  if (name == "cosine") return cosine();
  if (name == "cubed_smooth") return cubed_smooth();
  throw ParameterError("unknown activation '" + name + "'");
}

double Activation::value(double t) const {
  switch (kind_) {
    case ActivationKind::locally_quadratic: {
      const double a = std::abs(t);
      return a < 1.0 ? t * t : 2.0 * a - 1.0;
    }
    case ActivationKind::quadratic:
      return t * t;
    case ActivationKind::cosine:
      return std::cos(t);
    case ActivationKind::cubed_smooth:
      return t * t * (0.5 + t / 6.0);
  }
  return 0.0;
}

double Activation::d1(double t) const {
  switch (kind_) {
    case ActivationKind::locally_quadratic:
      return std::abs(t) < 1.0 ? 2.0 * t : (t > 0.0 ? 2.0 : -2.0);
    case ActivationKind::quadratic:
      return 2.0 * t;
    case ActivationKind::cosine:
      return -std::sin(t);
    case ActivationKind::cubed_smooth:
      return t + 0.5 * t * t;
  }
  return 0.0;
}

double Activation::d2(double t) const {
  switch (kind_) {
    case ActivationKind::locally_quadratic:
      return std::abs(t) < 1.0 ? 2.0 : 0.0;
    case ActivationKind::quadratic:
      return 2.0;
    case ActivationKind::cosine:
      return -std::cos(t);
    case ActivationKind::cubed_smooth:
      return 1.0 + t;
  }
  return 0.0;
}

void Activation::apply(const Matrix& pre, Matrix& value, Matrix& deriv) const {
  value.resize(pre.rows(), pre.cols());
  deriv.resize(pre.rows(), pre.cols());
  const auto p = pre.array();
  switch (kind_) {
    case ActivationKind::quadratic:
      value.array() = p.square();
      deriv.array() = 2.0 * p;
      return;
    case ActivationKind::cosine:
      value.array() = p.cos();
      deriv.array() = -p.sin();
      return;
    case ActivationKind::cubed_smooth:
      value.array() = p.square() * (0.5 + p / 6.0);
      deriv.array() = p + 0.5 * p.square();
      return;
    case ActivationKind::locally_quadratic:
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        const double t = pre.data()[i];
        value.data()[i] = this->value(t);
        deriv.data()[i] = d1(t);
      }
      return;
  }
}

void Activation::apply(const Matrix& pre, Matrix& value) const {
  value.resize(pre.rows(), pre.cols());
  const auto p = pre.array();
  switch (kind_) {
    case ActivationKind::quadratic:
      value.array() = p.square();
      return;
    case ActivationKind::cosine:
      value.array() = p.cos();
      return;
    case ActivationKind::cubed_smooth:
      value.array() = p.square() * (0.5 + p / 6.0);
      return;
    case ActivationKind::locally_quadratic:
      for (Eigen::Index i = 0; i < pre.size(); ++i) value.data()[i] = this->value(pre.data()[i]);
      return;
  }
}

std::string Activation::name() const {
  switch (kind_) {
    case ActivationKind::locally_quadratic: return "locally_quadratic";
    case ActivationKind::quadratic: return "quadratic";
    case ActivationKind::cosine: return "cosine";
    case ActivationKind::cubed_smooth: return "cubed_smooth";
  }
  return "unknown";
}

Activation::Metadata Activation::metadata() const {
  switch (kind_) {
    case ActivationKind::locally_quadratic: return {0.0, 2.0, 2.0, 0.0};
    case ActivationKind::quadratic: return {0.0, 2.0, 0.0, std::nullopt};
    case ActivationKind::cosine: return {0.0, -1.0, 1.0, std::nullopt};
    case ActivationKind::cubed_smooth: return {0.0, 1.0, 1.0, std::nullopt};
  }
  return {0.0, 0.0, 0.0, std::nullopt};
}

NetworkParams init_symmetric(int m, int d, double eps0, std::uint64_t seed) {
  if (m < 2 || m % 2 != 0) throw ParameterError("init_symmetric: width m must be even and >= 2, got " + std::to_string(m));
  if (d < 1) throw DimensionError("init_symmetric: d must be >= 1");
  if (!(eps0 > 0.0)) throw ParameterError("init_symmetric: eps0 must be positive");
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  NetworkParams p;
  p.a.resize(m);
  p.b = Vector::Zero(m);
  p.W.resize(m, d);
  for (int j = 0; j < m / 2; ++j) {
    p.a(j) = coin(rng) ? 1.0 : -1.0;
    for (int k = 0; k < d; ++k) p.W(j, k) = normal(rng);
    p.W.row(j) *= eps0 / p.W.row(j).norm();
    const int pair = mirror_index(j, m);
    p.a(pair) = -p.a(j);
    p.W.row(pair) = p.W.row(j);
  }
  return p;
}

NetworkParams init_kaiming(int m, int d, std::uint64_t seed) {
  if (m < 1 || d < 1) throw DimensionError("init_kaiming: m and d must be >= 1");
  Rng rng(seed);
  const double w_bound = std::sqrt(6.0 / d);
  const double b_bound = 1.0 / std::sqrt(static_cast<double>(d));
  const double a_bound = std::sqrt(6.0 / m);
  std::uniform_real_distribution<double> uw(-w_bound, w_bound), ub(-b_bound, b_bound), ua(-a_bound, a_bound);
  NetworkParams p;
  p.W.resize(m, d);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < d; ++k) p.W(j, k) = uw(rng);
  }
  p.b.resize(m);
  for (int j = 0; j < m; ++j) p.b(j) = ub(rng);
  p.a.resize(m);
  for (int j = 0; j < m; ++j) p.a(j) = ua(rng);
  return p;
}

namespace {

// Output layer with mirror pairs summed first, so a symmetric initialization cancels exactly.
Vector mirror_sum(const Matrix& s, const Vector& a) {
  const Eigen::Index m = a.size();
  Vector out = Vector::Zero(s.rows());
  for (Eigen::Index j = 0; j < m / 2; ++j) {
    const Eigen::Index k = m - 1 - j;
    out.array() += a(j) * s.col(j).array() + a(k) * s.col(k).array();
  }
  if (m % 2 == 1) out += a(m / 2) * s.col(m / 2);
  return out;
}

// One matrix-vector product per neuron: identical rows give bitwise identical columns,
// which a blocked matrix product does not guarantee.
void preactivations(const Eigen::Ref<const Matrix>& X, const NetworkParams& params, Matrix& pre) {
  pre.resize(X.rows(), params.width());
  for (int j = 0; j < params.width(); ++j) {
    pre.col(j).noalias() = X * params.W.row(j).transpose();
    pre.col(j).array() += params.b(j);
  }
}

}  // namespace

double forward(const NetworkParams& params, const Activation& act, const Vector& x) {
  if (x.size() != params.dim()) throw DimensionError("forward: input length does not match d");
  Matrix s(1, params.width());
  for (int j = 0; j < params.width(); ++j) s(0, j) = act.value(params.W.row(j).dot(x.transpose()) + params.b(j));
  return mirror_sum(s, params.a)(0);
}

Vector forward_batch(const NetworkParams& params, const Activation& act, const Matrix& X) {
  if (X.cols() != params.dim()) throw DimensionError("forward_batch: input width does not match d");
  Matrix pre;
  preactivations(X, params, pre);
  Matrix s;
  act.apply(pre, s);
  return mirror_sum(s, params.a);
}

void compute_gradients(const NetworkParams& params, const Activation& act, const LossFunction& loss,
                       const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                       Gradients& grads, GradientWorkspace& ws, double dloss_offset) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw ParameterError("gradient: empty batch");
  if (y.size() != n) throw DimensionError("gradient: label count does not match batch");
  if (X.cols() != params.dim()) throw DimensionError("gradient: input width does not match d");
  preactivations(X, params, ws.pre);
  act.apply(ws.pre, ws.act, ws.dact);
  ws.out = mirror_sum(ws.act, params.a);
  ws.dloss.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) ws.dloss(i) = loss.d1(ws.out(i), y(i)) - dloss_offset;
  const double inv_n = 1.0 / static_cast<double>(n);
  grads.a.noalias() = ws.act.transpose() * ws.dloss;
  grads.a *= inv_n;
  // dpre(i, j) = l'_i a_j sigma'(w_j.x_i + b_j)
  ws.dpre = ws.dact.array() * (ws.dloss * params.a.transpose()).array();
  grads.W.noalias() = ws.dpre.transpose() * X;
  grads.W *= inv_n;
  grads.b = ws.dpre.colwise().sum().transpose() * inv_n;
}

Matrix grad_W(const NetworkParams& params, const Activation& act, const LossFunction& loss,
              const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, double dloss_offset) {
  Gradients g;
  GradientWorkspace ws;
  compute_gradients(params, act, loss, X, y, g, ws, dloss_offset);
  return g.W;
}

Vector grad_a(const NetworkParams& params, const Activation& act, const LossFunction& loss,
              const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, double dloss_offset) {
  Gradients g;
  GradientWorkspace ws;
  compute_gradients(params, act, loss, X, y, g, ws, dloss_offset);
  return g.a;
}

double empirical_loss(const NetworkParams& params, const Activation& act, const LossFunction& loss,
                      const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y) {
  const Vector f = forward_batch(params, act, X);
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) total += loss.value(f(i), y(i));
  return total / static_cast<double>(f.size());
}

}  // namespace mindex
