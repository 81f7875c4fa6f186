#include "afem/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace afem;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// Integral of x^a y^b over the reference triangle.
double monomial_integral(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

double apply(const std::vector<TriangleQuadPoint>& rule, int a, int b) {
  double s = 0.0;
  for (const auto& q : rule) s += q.weight * std::pow(q.xi, a) * std::pow(q.eta, b);
  return 0.5 * s;
}

}  // namespace

TEST_SUITE("quadrature") {

TEST_CASE("degree-4 rule integrates monomials of total degree <= 4 exactly") {
  const auto& rule = triangle_rule_degree4();
  CHECK(rule.size() == 6);
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) CHECK(apply(rule, a, b) == doctest::Approx(monomial_integral(a, b)).epsilon(1e-14));
  }
  CHECK(std::abs(apply(rule, 6, 0) - monomial_integral(6, 0)) > 1e-8);
}

TEST_CASE("collapsed Gauss rules are exact to degree 2n-2") {
  for (int n = 1; n <= 8; ++n) {
    const auto& rule = triangle_rule_collapsed(n);
    CHECK(rule.size() == static_cast<std::size_t>(n * n));
    for (int a = 0; a <= 2 * n - 2; ++a) {
      for (int b = 0; a + b <= 2 * n - 2; ++b) {
        CHECK(apply(rule, a, b) == doctest::Approx(monomial_integral(a, b)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("Gauss-Legendre on [0,1]") {
  for (int n = 1; n <= 10; ++n) {
    const auto& rule = gauss_legendre(n);
    double w = 0.0;
    for (const auto& q : rule) {
      CHECK(q.s > 0.0);
      CHECK(q.s < 1.0);
      w += q.weight;
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (const auto& q : rule) s += q.weight * std::pow(q.s, k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-14));
    }
  }
  CHECK(line_rule_3().size() == 3);
}

TEST_CASE("reference map") {
  const Vec2 a(1, 1), b(3, 1), c(1, 4);
  CHECK((map_to_triangle(a, b, c, 0, 0) - a).norm() == 0.0);
  CHECK((map_to_triangle(a, b, c, 1, 0) - b).norm() == 0.0);
  CHECK((map_to_triangle(a, b, c, 0, 1) - c).norm() == 0.0);
}

}  // TEST_SUITE
