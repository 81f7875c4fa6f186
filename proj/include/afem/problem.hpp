#pragma once

#include "afem/mesh.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace afem {

/// Coefficient callbacks take the point and the index of the initial-mesh
/// element containing it, so piecewise data can switch on that region.
using ScalarField = std::function<double(const Vec2&, int region)>;
using VectorField = std::function<Vec2(const Vec2&, int region)>;
using MatrixField = std::function<Eigen::Matrix2d(const Vec2&, int region)>;
using BoundaryField = std::function<double(const Vec2&)>;

/// -div(A grad u) + b.grad u + c u = f with mixed boundary data.
///
/// Robin facets carry grad u.n = phi_R - alpha u. Empty callbacks mean
/// A = I, b = 0, c = 0, f = 0, zero boundary data and alpha = 1.
struct ProblemSpec {
  std::string name;

  MatrixField diffusion;
  VectorField convection;
  ScalarField reaction;
  ScalarField source;

  BoundaryField dirichlet;
  BoundaryField neumann;
  BoundaryField robin;
  BoundaryField robin_alpha;

  /// Nonlinear flux alpha_nl(|grad u|^2) grad u; replaces `diffusion`.
  std::function<double(double)> alpha_nl;

  std::function<double(const Vec2&)> exact;
  std::function<Vec2(const Vec2&)> exact_gradient;

  std::function<Mesh()> initial_mesh;

  bool is_nonlinear() const { return static_cast<bool>(alpha_nl); }
  bool is_symmetric() const { return !convection; }
  bool has_exact() const { return exact && exact_gradient; }

  Eigen::Matrix2d A(const Vec2& x, int region) const {
    return diffusion ? diffusion(x, region) : Eigen::Matrix2d::Identity();
  }
  Vec2 b(const Vec2& x, int region) const { return convection ? convection(x, region) : Vec2::Zero(); }
  double c(const Vec2& x, int region) const { return reaction ? reaction(x, region) : 0.0; }
  double f(const Vec2& x, int region) const { return source ? source(x, region) : 0.0; }
  double g_D(const Vec2& x) const { return dirichlet ? dirichlet(x) : 0.0; }
  double phi_N(const Vec2& x) const { return neumann ? neumann(x) : 0.0; }
  double phi_R(const Vec2& x) const { return robin ? robin(x) : 0.0; }
  double alpha(const Vec2& x) const { return robin_alpha ? robin_alpha(x) : 1.0; }
};

/// Names accepted by `make_problem`.
std::vector<std::string> problem_names();

/// Registered benchmark problems:
///  lshape_singular    u = r^(2/3) sin(2 phi / 3) on the L-shape
///  square_sine        u = sin(pi x) sin(pi y) on the unit square
///  affine             u = 1 + 2x - 3y on the unit square
///  lshape_convection  A = I, b = (1,0), f = 1 on the L-shape
///  lshape_nonlinear   alpha_nl(t) = 1 + exp(-t), f = 1 on the L-shape
///  square_mixed       u = sin(2x) cosh(y) with Dirichlet, Neumann and Robin sides
ProblemSpec make_problem(const std::string& name);

}  // namespace afem
