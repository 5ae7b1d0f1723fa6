#pragma once

#include <string>

#include "mindex/types.hpp"

namespace mindex {

enum class LossKind { square, huber, pseudo_huber, l1 };

/// Scalar loss l(t, y) as a function of the residual t - y. All kinds vanish at
/// t = y and are convex in t.
class LossFunction {
 public:
  static LossFunction square() { return LossFunction(LossKind::square, 1.0); }
  static LossFunction huber(double delta = 1.0) { return LossFunction(LossKind::huber, delta); }
  static LossFunction pseudo_huber(double delta = 1.0) { return LossFunction(LossKind::pseudo_huber, delta); }
  static LossFunction l1() { return LossFunction(LossKind::l1, 1.0); }
  /// "square" | "huber" | "pseudo_huber" | "l1".
  static LossFunction from_name(const std::string& name, double delta = 1.0);

  LossFunction(LossKind kind, double delta);

  double value(double t, double y) const;
  /// dl/dt. The l1 subgradient at t = y is 0.
  double d1(double t, double y) const;
  /// d2l/dt2 (0 on the linear pieces; l1 returns 0 everywhere).
  double d2(double t, double y) const;
  /// Global upper bound on d2 over all (t, y).
  double curvature_bound() const;

  LossKind kind() const { return kind_; }
  double delta() const { return delta_; }
  std::string name() const;

 private:
  LossKind kind_;
  double delta_;
};

inline double loss_value(const LossFunction& loss, double t, double y) { return loss.value(t, y); }
inline double loss_d1(const LossFunction& loss, double t, double y) { return loss.d1(t, y); }

/// Preprocessing values l_i = l'(0, y_i), optionally mean-centered.
struct PreprocValues {
  Vector raw;
  Vector centered;
  bool centering_applied = true;

  const Vector& values() const { return centering_applied ? centered : raw; }
  /// Amount subtracted from every raw value (0 when centering is off).
  double offset() const { return centering_applied && raw.size() > 0 ? raw.mean() : 0.0; }
};

PreprocValues preprocess(const LossFunction& loss, const Vector& y, bool center = true);

}  // namespace mindex
