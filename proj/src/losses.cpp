#include "mindex/losses.hpp"

#include <cmath>

namespace mindex {

LossFunction::LossFunction(LossKind kind, double delta) : kind_(kind), delta_(delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ParameterError("loss_delta must be positive, got " + std::to_string(delta));
  }
}

LossFunction LossFunction::from_name(const std::string& name, double delta) {
  if (name == "square") return square();
  if (name == "huber") return huber(delta);
  if (name == "pseudo_huber") return pseudo_huber(delta);
  if (name == "l1") return l1();
  throw ParameterError("unknown loss '" + name + "'");
}

double LossFunction::value(double t, double y) const {
  const double r = t - y;
  switch (kind_) {
    case LossKind::square:
      return 0.5 * r * r;
    case LossKind::huber: {
      const double a = std::abs(r);
      return a <= delta_ ? 0.5 * r * r : delta_ * (a - 0.5 * delta_);
    }
    case LossKind::pseudo_huber: {
      const double s = r / delta_;
      return delta_ * delta_ * (std::sqrt(1.0 + s * s) - 1.0);
    }
    case LossKind::l1:
      return std::abs(r);
  }
  return 0.0;
}

double LossFunction::d1(double t, double y) const {
  const double r = t - y;
  switch (kind_) {
    case LossKind::square:
      return r;
    case LossKind::huber:
      return r > delta_ ? delta_ : (r < -delta_ ? -delta_ : r);
    case LossKind::pseudo_huber: {
      const double s = r / delta_;
      return r / std::sqrt(1.0 + s * s);
    }
    case LossKind::l1:
      return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
  }
  return 0.0;
}

double LossFunction::d2(double t, double y) const {
  const double r = t - y;
  switch (kind_) {
    case LossKind::square:
      return 1.0;
    case LossKind::huber:
      return std::abs(r) <= delta_ ? 1.0 : 0.0;
    case LossKind::pseudo_huber: {
      const double s = r / delta_;
      const double q = 1.0 + s * s;
      return 1.0 / (q * std::sqrt(q));
    }
    case LossKind::l1:
      return 0.0;
  }
  return 0.0;
}

double LossFunction::curvature_bound() const { return kind_ == LossKind::l1 ? 0.0 : 1.0; }

std::string LossFunction::name() const {
  switch (kind_) {
    case LossKind::square: return "square";
    case LossKind::huber: return "huber";
    case LossKind::pseudo_huber: return "pseudo_huber";
    case LossKind::l1: return "l1";
  }
  return "unknown";
}

PreprocValues preprocess(const LossFunction& loss, const Vector& y, bool center) {
  if (y.size() < 1) throw ParameterError("preprocess: need at least one label");
  PreprocValues out;
  out.raw.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out.raw(i) = loss.d1(0.0, y(i));
  out.centered = out.raw.array() - out.raw.mean();
  out.centering_applied = center;
  return out;
}

}  // namespace mindex
