#include "afem/assembly.hpp"
#include "afem/solve.hpp"

#include <doctest.h>

#include <Eigen/Dense>

using namespace afem;

namespace {

ProblemSpec poisson_one(std::function<Mesh()> mesh) {
  ProblemSpec p;
  p.name = "poisson_one";
  p.source = [](const Vec2&, int) { return 1.0; };
  p.initial_mesh = std::move(mesh);
  return p;
}

}  // namespace

TEST_SUITE("assembly") {

TEST_CASE("reference element stiffness") {
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  expected *= 0.5;
  const Eigen::Matrix3d k = local_stiffness({0, 0}, {1, 0}, {0, 1});
  CHECK((k - expected).norm() < 1e-15);
  // Translation and scaling invariance in 2D.
  const Eigen::Matrix3d k2 = local_stiffness({3, -1}, {5, -1}, {3, 1});
  CHECK((k2 - expected).norm() < 1e-14);
  CHECK_THROWS_AS(local_stiffness({0, 0}, {1, 1}, {2, 2}), AssemblyError);
}

TEST_CASE("barycentric gradients sum to zero") {
  const auto g = p1_gradients({0.1, 0.2}, {1.3, 0.4}, {0.5, 1.7});
  CHECK((g.col(0) + g.col(1) + g.col(2)).norm() < 1e-14);
}

TEST_CASE("criss-cross square has one free node with K = 4 and F = 1/3") {
  const Mesh m = shapes::unit_square_crisscross();
  const auto sys = assemble(m, poisson_one([] { return shapes::unit_square_crisscross(); }));
  REQUIRE(sys.size() == 1);
  CHECK(sys.matrix.coeff(0, 0) == doctest::Approx(4.0));
  CHECK(sys.rhs[0] == doctest::Approx(1.0 / 3.0));
  CHECK(sys.symmetric);
  const auto u = solve_exact(sys).u;
  CHECK(u.values[sys.free_nodes[0]] == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("affine solutions are reproduced exactly") {
  const ProblemSpec p = make_problem("affine");
  Mesh m = p.initial_mesh();
  for (int level = 0; level < 3; ++level) {
    const auto sys = assemble(m, p);
    const auto u = solve_exact(sys).u;
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      CHECK(u.values[static_cast<Eigen::Index>(v)] ==
            doctest::Approx(p.exact(m.vertex(static_cast<VertexId>(v)))).epsilon(1e-10));
    }
    CHECK(energy_norm_error(m, p, u) < 1e-9);
    m = uniform_refine(m);
  }
}

TEST_CASE("Scott-Zhang trace reproduces linear boundary data") {
  const Mesh m = uniform_refine(shapes::lshape_crisscross());
  const auto g = [](const Vec2& x) { return 0.5 - x.x() + 4.0 * x.y(); };
  const Eigen::VectorXd tr = scott_zhang_trace(m, g);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const auto id = static_cast<VertexId>(v);
    if (m.is_dirichlet_vertex(id)) {
      CHECK(tr[id] == doctest::Approx(g(m.vertex(id))).epsilon(1e-13));
    } else {
      CHECK(tr[id] == 0.0);
    }
  }
}

TEST_CASE("stiffness matrix is symmetric, convection is not") {
  const Mesh m = uniform_refine(shapes::lshape_crisscross());
  const auto sys = assemble(m, make_problem("lshape_singular"));
  CHECK(sys.symmetric);
  const Eigen::MatrixXd d(sys.matrix);
  CHECK((d - d.transpose()).norm() < 1e-13);
  const auto conv = assemble(m, make_problem("lshape_convection"));
  CHECK_FALSE(conv.symmetric);
  const Eigen::MatrixXd c(conv.matrix);
  CHECK((c - c.transpose()).norm() > 1e-3);
}

TEST_CASE("expand and restrict are inverse on free values") {
  const Mesh m = uniform_refine(shapes::unit_square_crisscross());
  const auto sys = assemble(m, make_problem("square_sine"));
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(sys.size(), 1.0, 2.0);
  const auto full = sys.expand(x);
  CHECK(full.belongs_to(m));
  CHECK((sys.restrict_to_free(full) - x).norm() == 0.0);
}

TEST_CASE("setup errors") {
  const Mesh m = shapes::unit_square_crisscross();
  ProblemSpec bad = poisson_one([] { return shapes::unit_square_crisscross(); });
  bad.reaction = [](const Vec2&, int) { return -100.0; };
  CHECK_THROWS_AS(assemble(m, bad), AssemblyError);
  CHECK_THROWS_AS(assemble(shapes::lshape_crisscross(), make_problem("lshape_nonlinear")), AssemblyError);
  CHECK_THROWS_AS(energy_norm_error(m, bad, DiscreteFunction::zeros(m)), AssemblyError);
}

TEST_CASE("mixed boundary conditions converge at first order under uniform refinement") {
  const ProblemSpec p = make_problem("square_mixed");
  Mesh m = uniform_refine(uniform_refine(p.initial_mesh()));
  std::vector<double> err;
  for (int level = 0; level < 4; ++level) {
    const auto sys = assemble(m, p);
    err.push_back(energy_norm_error(m, p, solve_exact(sys).u));
    m = uniform_refine(m);
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    CHECK(ratio > 1.85);
    CHECK(ratio < 2.15);
  }
}

TEST_CASE("energy norm of the interpolation error on a smooth problem") {
  const ProblemSpec p = make_problem("square_sine");
  const Mesh m1 = uniform_refine(uniform_refine(p.initial_mesh()));
  const Mesh m2 = uniform_refine(m1);
  const double e1 = energy_norm_error(m1, p, interpolate(m1, p.exact));
  const double e2 = energy_norm_error(m2, p, interpolate(m2, p.exact));
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  const SparseMatrix a = energy_matrix(m1, p);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m1.num_vertices()));
  CHECK(energy_norm(a, ones) < 1e-12);
}

}  // TEST_SUITE
