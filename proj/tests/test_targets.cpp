#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mindex/targets.hpp"

using namespace mindex;

namespace {

// Trapezoid rule against the standard normal density on [-14, 14]. For
// Gaussian-weighted polynomials it converges geometrically in the step size.
template <typename F>
double gaussian_expectation(F&& f) {
  const double h = 0.005;
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double s = 0.0;
  for (int i = -2800; i <= 2800; ++i) {
    const double z = i * h;
    s += f(z) * c * std::exp(-0.5 * z * z);
  }
  return s * h;
}

}  // namespace

TEST_SUITE("targets") {
  TEST_CASE("hermite closed forms") {
    for (double z : {-2.5, -1.0, 0.0, 0.3, 1.7}) {
      CHECK(hermite_poly(0, z) == doctest::Approx(1.0));
      CHECK(hermite_poly(1, z) == doctest::Approx(z));
      CHECK(hermite_poly(2, z) == doctest::Approx((z * z - 1.0) / std::sqrt(2.0)));
      CHECK(hermite_poly(4, z) == doctest::Approx((std::pow(z, 4) - 6 * z * z + 3.0) / std::sqrt(24.0)));
    }
  }

  TEST_CASE("hermite orthonormality under N(0,1)") {
    double worst = 0.0;
    for (int j = 0; j <= 6; ++j) {
      for (int k = 0; k <= 6; ++k) {
        const double e = gaussian_expectation([&](double z) { return hermite_poly(j, z) * hermite_poly(k, z); });
        worst = std::max(worst, std::abs(e - (j == k ? 1.0 : 0.0)));
      }
    }
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("subspace orthonormality") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const HiddenSubspace s = make_subspace(200, 5, SubspaceMode::random, seed);
      const Matrix gram = s.U * s.U.transpose();
      CHECK((gram - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const HiddenSubspace a = make_subspace(10, 3);
    CHECK(a.U == Matrix::Identity(3, 10));
    CHECK_THROWS_AS(make_subspace(3, 4), DimensionError);
  }

  TEST_CASE("link arity must match subspace rank") {
    CHECK_THROWS_AS(MultiIndexTarget(make_subspace(10, 3), LinkFunction::quad2d()), DimensionError);
  }

  TEST_CASE("quad2d has unit variance and second moment 1.9") {
    const LinkFunction g = LinkFunction::quad2d();
    // E[g^2] by the product trapezoid rule over (z1, z2).
    const double h = 0.02;
    const double c = 1.0 / (2.0 * std::numbers::pi);
    double s = 0.0;
    for (int i = -500; i <= 500; ++i) {
      for (int j = -500; j <= 500; ++j) {
        const double z[2] = {i * h, j * h};
        const double v = g(std::span<const double>(z, 2));
        s += v * v * c * std::exp(-0.5 * (z[0] * z[0] + z[1] * z[1]));
      }
    }
    // E[g] = 1.5 / sqrt(2.5), so the variance is 1.9 - 0.9 = 1.
    CHECK(s * h * h == doctest::Approx(1.9).epsilon(1e-9));
    CHECK(g.second_moment() == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(LinkFunction::hermite4sum().second_moment() == 2.0);
  }

  TEST_CASE("polynomial link second moment by Monte Carlo") {
    // g(z) = z1 * z2: E[g^2] = 1.
    const LinkFunction g = LinkFunction::polynomial(2, {{{1, 1}, 1.0}});
    CHECK(g.second_moment() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(g.degree() == 2);
  }

  TEST_CASE("targets depend only on the projection") {
    const MultiIndexTarget t = make_target("quad2d", 6, SubspaceMode::random, 9);
    Vector x = Vector::LinSpaced(6, -1.0, 1.5);
    const Vector u = t.subspace().direction(0);
    // Move x orthogonally to both hidden directions.
    Vector v = Vector::Ones(6);
    for (int k = 0; k < t.rank(); ++k) {
      const Vector dir = t.subspace().direction(k);
      v -= dir.dot(v) * dir;
    }
    CHECK(t(x) == doctest::Approx(t(Vector(x + 3.0 * v))));
    CHECK(u.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("reference values") {
    CHECK(hermite_poly(0, 7.3) == 1.0);
    CHECK(hermite_poly(2, 0.0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(hermite_poly(4, 0.0) == doctest::Approx(3.0 / std::sqrt(24.0)));
    Vector x = Vector::Zero(5);
    CHECK(make_target("quad2d", 5)(x) == 0.0);
    CHECK(make_target("hermite4sum", 5)(x) == doctest::Approx(6.0 / std::sqrt(24.0)));
    x(0) = 1.0;
    x(1) = 1.0;
    CHECK(make_target("quad2d", 5)(x) == doctest::Approx(1.5 / std::sqrt(2.5)));
    const HiddenSubspace full = make_subspace(3, 3, SubspaceMode::random, 4);
    CHECK((full.U.transpose() * full.U - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("dataset columns are standard normal") {
    const Dataset D = generate_dataset(make_target("quad2d", 4), 100000, 5);
    for (int k = 0; k < 4; ++k) {
      const double mean = D.X.col(k).mean();
      const double var = (D.X.col(k).array() - mean).square().mean();
      CHECK(std::abs(mean) <= 0.02);
      CHECK(var >= 0.97);
      CHECK(var <= 1.03);
    }
  }

  TEST_CASE("named targets") {
    CHECK(make_target("hermite:3", 8).rank() == 1);
    CHECK(make_target("hermite4sum", 8).link().name() == "hermite4sum");
    CHECK_THROWS_AS(make_target("nope", 8), ParameterError);
  }

  TEST_CASE("datasets are reproducible from the seed") {
    const MultiIndexTarget t = make_target("quad2d", 12);
    const Dataset a = generate_dataset(t, 50, 11);
    const Dataset b = generate_dataset(t, 50, 11);
    const Dataset c = generate_dataset(t, 50, 12);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    CHECK(a.X != c.X);
    for (int i = 0; i < 50; ++i) CHECK(a.y(i) == t(Vector(a.X.row(i).transpose())));
  }
}
