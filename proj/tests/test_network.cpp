#include <cmath>

#include "doctest.h"
#include "mindex/network.hpp"
#include "mindex/random.hpp"

using namespace mindex;

namespace {

struct Instance {
  NetworkParams p;
  Matrix X;
  Vector y;
};

Instance small_instance(std::uint64_t seed, int m = 4, int d = 5, int n = 8) {
  Rng rng(seed);
  Instance inst;
  inst.p.W.resize(m, d);
  inst.p.a.resize(m);
  inst.p.b.resize(m);
  fill_gaussian(rng, inst.p.W);
  inst.p.W *= 0.4;
  fill_gaussian(rng, inst.p.a);
  fill_gaussian(rng, inst.p.b);
  inst.p.b *= 0.3;
  inst.X.resize(n, d);
  fill_gaussian(rng, inst.X);
  inst.y.resize(n);
  fill_gaussian(rng, inst.y);
  return inst;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// Central differences of the empirical loss in every parameter.
Gradients finite_difference(const Instance& inst, const Activation& act, const LossFunction& loss, double h) {
  Gradients g;
  g.W.resize(inst.p.W.rows(), inst.p.W.cols());
  g.a.resize(inst.p.a.size());
  g.b.resize(inst.p.b.size());
  auto L = [&](const NetworkParams& p) { return empirical_loss(p, act, loss, inst.X, inst.y); };
  for (Eigen::Index j = 0; j < inst.p.W.rows(); ++j) {
    for (Eigen::Index k = 0; k < inst.p.W.cols(); ++k) {
      NetworkParams up = inst.p, dn = inst.p;
      up.W(j, k) += h;
      dn.W(j, k) -= h;
      g.W(j, k) = (L(up) - L(dn)) / (2 * h);
    }
    NetworkParams up = inst.p, dn = inst.p;
    up.a(j) += h;
    dn.a(j) -= h;
    g.a(j) = (L(up) - L(dn)) / (2 * h);
    up = inst.p;
    dn = inst.p;
    up.b(j) += h;
    dn.b(j) -= h;
    g.b(j) = (L(up) - L(dn)) / (2 * h);
  }
  return g;
}

// Smallest distance of any pre-activation to the kinks at |t| = 1, or of any residual to 0.
double kink_margin(const Instance& inst, const Activation& act, const LossFunction& loss) {
  Matrix pre = inst.X * inst.p.W.transpose();
  pre.rowwise() += inst.p.b.transpose();
  double margin = 1e9;
  if (act.kind() == ActivationKind::locally_quadratic) {
    margin = std::min(margin, (pre.array().abs() - 1.0).abs().minCoeff());
  }
  if (loss.kind() == LossKind::l1 || loss.kind() == LossKind::huber) {
    const Vector r = forward_batch(inst.p, act, inst.X) - inst.y;
    const double kink = loss.kind() == LossKind::l1 ? 0.0 : loss.delta();
    margin = std::min(margin, (r.array().abs() - kink).abs().minCoeff());
  }
  return margin;
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("activation values and metadata") {
    const Activation lq = Activation::locally_quadratic();
    CHECK(lq.value(0.5) == 0.25);
    CHECK(lq.value(-3.0) == 5.0);
    CHECK(lq.value(1.0) == 1.0);
    CHECK(lq.d1(1.0 - 1e-12) == doctest::Approx(lq.d1(1.0 + 1e-12)));
    CHECK(Activation::cosine().metadata().d2_at_zero == -1.0);
    CHECK_FALSE(Activation::cosine().satisfies_smoothness_normalization());
    CHECK(Activation::from_name("quadratic").kind() == ActivationKind::quadratic);
    CHECK_THROWS_AS(Activation::from_name("relu"), ParameterError);
  }

  TEST_CASE("normalized activation has sigma'(0) = 0 and sigma''(0) = 1") {
    const Activation s = Activation::cubed_smooth();
    REQUIRE(s.satisfies_smoothness_normalization());
    // Central differences carry an O(h^2) truncation error.
    const double h = 1e-5;
    CHECK(std::abs((s.value(h) - s.value(-h)) / (2 * h)) <= 1e-8);
    CHECK(std::abs((s.d1(h) - s.d1(-h)) / (2 * h) - 1.0) <= 1e-8);
    CHECK(s.metadata().d1_at_zero == 0.0);
    CHECK(s.metadata().d2_at_zero == 1.0);
  }

  TEST_CASE("derivatives match central differences") {
    const double h = 1e-6;
    for (const auto& act : {Activation::quadratic(), Activation::cosine(), Activation::cubed_smooth(),
                            Activation::locally_quadratic()}) {
      for (double t : {-2.3, -0.4, 0.1, 0.77, 1.6}) {
        CHECK(act.d1(t) == doctest::Approx((act.value(t + h) - act.value(t - h)) / (2 * h)).epsilon(1e-6));
        CHECK(act.d2(t) == doctest::Approx((act.d1(t + h) - act.d1(t - h)) / (2 * h)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("symmetric initialization structure") {
    const NetworkParams p = init_symmetric(8, 20, 1e-3, 17);
    CHECK(p.b == Vector::Zero(8));
    CHECK(p.a.sum() == 0.0);
    for (int j = 0; j < 8; ++j) {
      CHECK(std::abs(p.a(j)) == 1.0);
      CHECK(p.a(j) == -p.a(mirror_index(j, 8)));
      CHECK(p.W.row(j) == p.W.row(mirror_index(j, 8)));
      CHECK(std::abs(p.W.row(j).norm() - 1e-3) <= 1e-14 * 1e-3 * 10);
    }
    CHECK_THROWS_AS(init_symmetric(5, 20, 1e-3, 1), ParameterError);
    CHECK_THROWS_AS(init_symmetric(4, 20, 0.0, 1), ParameterError);
  }

  TEST_CASE("symmetric initialization computes the zero function for every activation") {
    const NetworkParams p = init_symmetric(6, 10, 0.7, 3);
    Rng rng(4);
    Matrix X(25, 10);
    fill_gaussian(rng, X);
    for (const auto& act : {Activation::quadratic(), Activation::cosine(), Activation::cubed_smooth(),
                            Activation::locally_quadratic()}) {
      CHECK(forward_batch(p, act, X) == Vector::Zero(25));
    }
  }

  TEST_CASE("forward reference cases") {
    NetworkParams p;
    const double eps = 0.25;
    p.a = Vector(2);
    p.a << 1.0, -1.0;
    p.b = Vector(2);
    p.b << 1.0, 0.0;
    p.W = Matrix::Zero(2, 3);
    p.W(0, 0) = eps;
    p.W(1, 0) = eps;
    Vector x(3);
    x << 0.8, -2.0, 5.0;
    CHECK(forward(p, Activation::quadratic(), x) == doctest::Approx(2 * eps * x(0) + 1.0));
    p.b(1) = 1.0;
    CHECK(forward(p, Activation::quadratic(), x) == 0.0);
  }

  TEST_CASE("forward is linear in a") {
    Instance inst = small_instance(5);
    const Activation act = Activation::cubed_smooth();
    const Vector base = forward_batch(inst.p, act, inst.X);
    NetworkParams doubled = inst.p;
    doubled.a *= 2.0;
    CHECK(forward_batch(doubled, act, inst.X) == Vector(2.0 * base));
  }

  TEST_CASE("gradients agree with finite differences") {
    const std::vector<Activation> acts{Activation::quadratic(), Activation::cosine(), Activation::cubed_smooth(),
                                       Activation::locally_quadratic()};
    const std::vector<LossFunction> losses{LossFunction::square(), LossFunction::pseudo_huber(1.0),
                                           LossFunction::huber(1.0), LossFunction::l1()};
    int checked = 0;
    for (const auto& act : acts) {
      for (const auto& loss : losses) {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
          const Instance inst = small_instance(seed);
          if (kink_margin(inst, act, loss) < 1e-2) continue;
          Gradients g;
          GradientWorkspace ws;
          compute_gradients(inst.p, act, loss, inst.X, inst.y, g, ws);
          const Gradients fd = finite_difference(inst, act, loss, 1e-5);
          CHECK(rel_err(g.W, fd.W) <= 1e-5);
          CHECK(rel_err(g.a, fd.a) <= 1e-5);
          CHECK(rel_err(g.b, fd.b) <= 1e-5);
          ++checked;
        }
      }
    }
    CHECK(checked >= 60);
  }

  TEST_CASE("gradient at symmetric init with square loss") {
    const NetworkParams p = init_symmetric(4, 6, 0.1, 8);
    Rng rng(9);
    Matrix X(30, 6);
    fill_gaussian(rng, X);
    Vector y(30);
    fill_gaussian(rng, y);
    const Activation act = Activation::cubed_smooth();
    const Matrix g = grad_W(p, act, LossFunction::square(), X, y);
    for (int j = 0; j < 4; ++j) {
      Eigen::RowVectorXd expect = Eigen::RowVectorXd::Zero(6);
      for (int i = 0; i < 30; ++i) expect += y(i) * act.d1(p.W.row(j).dot(X.row(i))) * X.row(i);
      expect *= -p.a(j) / 30.0;
      CHECK((g.row(j) - expect).norm() <= 1e-14);
    }
  }

  TEST_CASE("zero loss derivative gives zero gradients") {
    Instance inst = small_instance(11, 4, 5, 1);
    const Activation act = Activation::cosine();
    inst.y = forward_batch(inst.p, act, inst.X);
    CHECK(grad_W(inst.p, act, LossFunction::square(), inst.X, inst.y) == Matrix::Zero(4, 5));
    CHECK(grad_a(inst.p, act, LossFunction::square(), inst.X, inst.y) == Vector::Zero(4));
  }

  TEST_CASE("grad_a for a constant activation") {
    // cos(0 * x + 0) = 1 for every neuron; with a = 0 the output is 0 and l' = -y.
    NetworkParams p;
    p.W = Matrix::Zero(3, 4);
    p.a = Vector::Zero(3);
    p.b = Vector::Zero(3);
    Matrix X = Matrix::Ones(1, 4);
    Vector y(1);
    y << 2.5;
    const Vector g = grad_a(p, Activation::cosine(), LossFunction::square(), X, y);
    CHECK(g == Vector::Constant(3, -2.5));
  }

  TEST_CASE("kaiming initialization bounds") {
    const NetworkParams p = init_kaiming(4, 50, 2);
    CHECK(p.W.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 50));
    CHECK(p.a.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 4));
    CHECK(p.b.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(50.0));
    CHECK(init_kaiming(4, 50, 2).W == p.W);
  }
}
