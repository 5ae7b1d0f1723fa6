#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mindex/losses.hpp"
#include "mindex/types.hpp"

namespace mindex {

enum class ActivationKind { locally_quadratic, quadratic, cosine, cubed_smooth };

// Scalar activation with its first two derivatives and the constants the
// stage-1 analysis refers to.
class Activation {
 public:
  struct Metadata {
    double d1_at_zero;
    double d2_at_zero;
    double third_derivative_bound;             // M (a.e. bound for piecewise kinds)
    std::optional<double> monomial_exponent;   // beta, where known
  };

  /// t^2 on |t| < 1, 2|t| - 1 outside; C^1 at |t| = 1.
  static Activation locally_quadratic() { return Activation(ActivationKind::locally_quadratic); }
  static Activation quadratic() { return Activation(ActivationKind::quadratic); }
  /// cos(t). sigma''(0) = -1, so only used in experiment mode.
  static Activation cosine() { return Activation(ActivationKind::cosine); }
  /// t^2/2 + t^3/6: sigma'(0) = 0, sigma''(0) = 1, sigma''' = 1.
  static Activation cubed_smooth() { return Activation(ActivationKind::cubed_smooth); }
  static Activation from_name(const std::string& name);

  explicit Activation(ActivationKind kind) : kind_(kind) {}

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;

  /// Elementwise sigma and sigma' over a matrix of pre-activations.
  void apply(const Matrix& pre, Matrix& value, Matrix& deriv) const;
  void apply(const Matrix& pre, Matrix& value) const;

  ActivationKind kind() const { return kind_; }
  std::string name() const;
  Metadata metadata() const;
  /// sigma'(0) = 0, sigma''(0) = 1 and C^3.
  bool satisfies_smoothness_normalization() const { return kind_ == ActivationKind::cubed_smooth; }

 private:
  ActivationKind kind_;
};

/// Theta = {a_j, b_j, w_j}; row j of W is w_j.
struct NetworkParams {
  Vector a;
  Vector b;
  Matrix W;

  int width() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
};

/// Mirrored pair of neuron j (0-based): m - 1 - j.
inline int mirror_index(int j, int m) { return m - 1 - j; }

/// First half: a_j Rademacher, w_j uniform on the sphere of radius eps0.
/// Second half mirrors it with a -> -a, w -> w. Biases are zero.
NetworkParams init_symmetric(int m, int d, double eps0, std::uint64_t seed);

/// Kaiming-uniform experiment-mode init: W ~ U(+-sqrt(6/d)), a ~ U(+-sqrt(6/m)),
/// b ~ U(+-1/sqrt(d)).
NetworkParams init_kaiming(int m, int d, std::uint64_t seed);

double forward(const NetworkParams& params, const Activation& act, const Vector& x);
Vector forward_batch(const NetworkParams& params, const Activation& act, const Matrix& X);

struct Gradients {
  Matrix W;
  Vector a;
  Vector b;
};

/// Reusable buffers for repeated gradient evaluation on same-shaped batches.
struct GradientWorkspace {
  Matrix pre, act, dact, dpre;
  Vector out, dloss;
};

/// Mean-gradient of (1/n) sum_i l(f(x_i), y_i) with respect to W, a and b.
/// `dloss_offset` is subtracted from every l'(f(x_i), y_i); the trainer uses it
/// to apply empirical centering of l'(0, y_i).
void compute_gradients(const NetworkParams& params, const Activation& act, const LossFunction& loss,
                       const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                       Gradients& grads, GradientWorkspace& ws, double dloss_offset = 0.0);

Matrix grad_W(const NetworkParams& params, const Activation& act, const LossFunction& loss,
              const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, double dloss_offset = 0.0);
Vector grad_a(const NetworkParams& params, const Activation& act, const LossFunction& loss,
              const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, double dloss_offset = 0.0);

/// (1/n) sum_i l(f(x_i), y_i).
double empirical_loss(const NetworkParams& params, const Activation& act, const LossFunction& loss,
                      const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y);

}  // namespace mindex
