#include "afem/estimate.hpp"
#include "afem/solve.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

using namespace afem;

namespace {

Mesh refined_lshape(int times) {
  Mesh m = shapes::lshape_crisscross();
  for (int i = 0; i < times; ++i) m = uniform_refine(m);
  return m;
}

double energy_dist(const LinearSystem& sys, const DiscreteFunction& a, const DiscreteFunction& b) {
  const Eigen::VectorXd d = sys.restrict_to_free(a) - sys.restrict_to_free(b);
  return std::sqrt(d.dot(sys.matrix * d));
}

}  // namespace

TEST_SUITE("solve") {

TEST_CASE("CG matches a direct solve") {
  const Mesh m = refined_lshape(3);
  const auto sys = assemble(m, make_problem("lshape_singular"));
  const auto res = solve_exact(sys);
  CHECK(res.report.converged);
  CHECK(res.report.relative_residual <= 1e-12);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Eigen::SparseMatrix<double>(sys.matrix));
  const Eigen::VectorXd x = lu.solve(sys.rhs);
  CHECK((sys.restrict_to_free(res.u) - x).norm() <= 1e-9 * x.norm());
}

TEST_CASE("BiCGStab matches a direct solve on the convection problem") {
  const Mesh m = refined_lshape(3);
  const auto sys = assemble(m, make_problem("lshape_convection"));
  REQUIRE_FALSE(sys.symmetric);
  const auto res = solve_exact(sys);
  CHECK(res.report.converged);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Eigen::SparseMatrix<double>(sys.matrix));
  const Eigen::VectorXd x = lu.solve(sys.rhs);
  CHECK((sys.restrict_to_free(res.u) - x).norm() <= 1e-9 * x.norm());
}

TEST_CASE("Lanczos extremes agree with a dense eigensolver") {
  const Mesh m = refined_lshape(1);
  const auto sys = assemble(m, make_problem("lshape_convection"));
  const Eigen::MatrixXd a(sys.matrix);
  const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  const Eigen::VectorXd dinv = s.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = dinv.asDiagonal() * s * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  const auto n = static_cast<int>(a.rows());
  const auto lz = lanczos_extremes(sys.matrix, n + 5, 7, nullptr, true);
  CHECK(lz.lambda_min == doctest::Approx(eig.eigenvalues()[0]).epsilon(1e-6));
  CHECK(lz.lambda_max == doctest::Approx(eig.eigenvalues()[n - 1]).epsilon(1e-6));
  CHECK(lz.vector.size() == n);
  // A short run can only overestimate the smallest eigenvalue.
  const auto short_run = lanczos_extremes(sys.matrix, 5, 7);
  CHECK(short_run.lambda_min >= eig.eigenvalues()[0] * (1.0 - 1e-10));
}

TEST_CASE("inexact solve certifies its distance to the exact discrete solution") {
  const ProblemSpec p = make_problem("lshape_singular");
  const Mesh m = refined_lshape(4);
  const auto sys = assemble(m, p);
  const Estimator est(m, p, EstimatorKind::Residual);
  const auto exact = solve_exact(sys);
  for (double vartheta : {0.5, 0.1, 0.01}) {
    const auto res = solve_inexact(sys, [&](const DiscreteFunction& u) { return est.eta(u); }, vartheta);
    const double dist = energy_dist(sys, res.u, exact.u);
    CHECK(res.report.certified_bound >= dist);
    CHECK(res.report.certified_bound <= vartheta * res.report.eta_at_stop * (1.0 + 1e-12));
    CHECK(res.report.iterations < exact.report.iterations);
  }
  CHECK_THROWS_AS(solve_inexact(sys, [&](const DiscreteFunction& u) { return est.eta(u); }, 1.5), ConfigError);
  CHECK_THROWS_AS(solve_inexact(sys, {}, 0.1), ConfigError);
}

TEST_CASE("zero estimate falls back to the exact tolerance") {
  const Mesh m = refined_lshape(2);
  const auto sys = assemble(m, make_problem("lshape_singular"));
  const auto res = solve_inexact(sys, [](const DiscreteFunction&) { return 0.0; }, 0.1);
  CHECK(res.report.fell_back_to_exact);
  CHECK(res.report.relative_residual <= 1e-12);
}

TEST_CASE("warm start from the exact solution needs no iterations") {
  const Mesh m = refined_lshape(2);
  const auto sys = assemble(m, make_problem("lshape_singular"));
  const auto a = solve_exact(sys);
  const auto b = solve_exact(sys, {}, &a.u);
  CHECK(b.report.iterations <= 1);
}

TEST_CASE("Picard iteration reaches a fixed point") {
  const ProblemSpec p = make_problem("lshape_nonlinear");
  const Mesh m = refined_lshape(3);
  SolverConfig cfg;
  const auto res = solve_nonlinear(m, p, DiscreteFunction::zeros(m), cfg);
  CHECK(res.report.converged);
  CHECK(res.report.outer_iterations > 1);
  const auto sys = assemble(m, p, &res.u);
  const auto again = solve_exact(sys).u;
  CHECK((again.values - res.u.values).norm() <= 1e-8 * res.u.values.norm());
}

TEST_CASE("mode names") {
  CHECK(solve_mode_from_string(to_string(SolveMode::Inexact)) == SolveMode::Inexact);
  CHECK_THROWS_AS(solve_mode_from_string("approximate"), ConfigError);
}

}  // TEST_SUITE
