#include "afem/problem.hpp"

#include <cmath>
#include <numbers>

namespace afem {

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec lshape_singular() {
  ProblemSpec p;
  p.name = "lshape_singular";
  auto angle = [](const Vec2& x) {
    double phi = std::atan2(x.y(), x.x());
    if (phi < 0.0) phi += 2.0 * kPi;
    return phi;
  };
  p.exact = [angle](const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * angle(x) / 3.0);
  };
  p.exact_gradient = [angle](const Vec2& x) -> Vec2 {
    const double r = x.norm();
    if (r == 0.0) return Vec2::Zero();
    const double phi = angle(x);
    const double s = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0);
    const double ur = s * std::sin(2.0 * phi / 3.0);
    const double ut = s * std::cos(2.0 * phi / 3.0);
    return {ur * std::cos(phi) - ut * std::sin(phi), ur * std::sin(phi) + ut * std::cos(phi)};
  };
  p.dirichlet = p.exact;
  p.initial_mesh = [] { return shapes::lshape_crisscross(); };
  return p;
}

ProblemSpec square_sine() {
  ProblemSpec p;
  p.name = "square_sine";
  p.exact = [](const Vec2& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); };
  p.exact_gradient = [](const Vec2& x) -> Vec2 {
    return {kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()), kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y())};
  };
  p.source = [](const Vec2& x, int) { return 2.0 * kPi * kPi * std::sin(kPi * x.x()) * std::sin(kPi * x.y()); };
  p.initial_mesh = [] { return shapes::unit_square_crisscross(); };
  return p;
}

ProblemSpec affine() {
  ProblemSpec p;
  p.name = "affine";
  p.exact = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - 3.0 * x.y(); };
  p.exact_gradient = [](const Vec2&) -> Vec2 { return {2.0, -3.0}; };
  p.dirichlet = p.exact;
  p.initial_mesh = [] { return shapes::unit_square_crisscross(); };
  return p;
}

ProblemSpec lshape_convection() {
  ProblemSpec p;
  p.name = "lshape_convection";
  p.convection = [](const Vec2&, int) -> Vec2 { return {1.0, 0.0}; };
  p.source = [](const Vec2&, int) { return 1.0; };
  p.initial_mesh = [] { return shapes::lshape_crisscross(); };
  return p;
}

ProblemSpec lshape_nonlinear() {
  ProblemSpec p;
  p.name = "lshape_nonlinear";
  p.alpha_nl = [](double t) { return 1.0 + std::exp(-t); };
  p.source = [](const Vec2&, int) { return 1.0; };
  p.initial_mesh = [] { return shapes::lshape_crisscross(); };
  return p;
}

ProblemSpec square_mixed() {
  ProblemSpec p;
  p.name = "square_mixed";
  p.exact = [](const Vec2& x) { return std::sin(2.0 * x.x()) * std::cosh(x.y()); };
  p.exact_gradient = [](const Vec2& x) -> Vec2 {
    return {2.0 * std::cos(2.0 * x.x()) * std::cosh(x.y()), std::sin(2.0 * x.x()) * std::sinh(x.y())};
  };
  p.source = [](const Vec2& x, int) { return 3.0 * std::sin(2.0 * x.x()) * std::cosh(x.y()); };
  p.dirichlet = p.exact;
  // Outward normal derivative on y = 0 and y = 1.
  p.neumann = [grad = p.exact_gradient](const Vec2& x) { return x.y() > 0.5 ? grad(x).y() : -grad(x).y(); };
  p.robin = [u = p.exact, grad = p.exact_gradient](const Vec2& x) { return grad(x).x() + u(x); };
  p.robin_alpha = [](const Vec2&) { return 1.0; };
  p.initial_mesh = [] {
    std::vector<Vec2> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
    std::vector<std::array<VertexId, 3>> t{{4, 0, 1}, {4, 1, 2}, {4, 2, 3}, {4, 3, 0}};
    auto b = label_boundary(v, t, [](const Vec2& m) {
      if (m.x() < 1e-12) return BoundaryKind::Dirichlet;
      if (m.x() > 1.0 - 1e-12) return BoundaryKind::Robin;
      return BoundaryKind::Neumann;
    });
    return new_initial_mesh(std::move(v), t, b);
  };
  return p;
}

}  // namespace

std::vector<std::string> problem_names() {
  return {"lshape_singular", "square_sine", "affine", "lshape_convection", "lshape_nonlinear", "square_mixed"};
}

ProblemSpec make_problem(const std::string& name) {
  if (name == "lshape_singular") return lshape_singular();
  if (name == "square_sine") return square_sine();
  if (name == "affine") return affine();
  if (name == "lshape_convection") return lshape_convection();
  if (name == "lshape_nonlinear") return lshape_nonlinear();
  if (name == "square_mixed") return square_mixed();
  throw ConfigError("unknown problem '" + name + "'");
}

}  // namespace afem
