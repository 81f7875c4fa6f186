#pragma once

#include "afem/assembly.hpp"

#include <functional>
#include <optional>

namespace afem {

enum class SolveMode { Exact, Inexact };

std::string_view to_string(SolveMode mode);
SolveMode solve_mode_from_string(std::string_view name);

struct SolverConfig {
  SolveMode mode = SolveMode::Exact;
  /// Relative algebraic residual for exact solves.
  double tolerance = 1e-12;
  /// Inexact parameter: stop once the certified error bound is below vartheta * eta.
  double vartheta = 0.1;
  /// Krylov iteration cap; 0 picks max(3 n, 1000).
  int max_iterations = 0;
  /// Lanczos steps for the smallest-eigenvalue estimate behind the certified bound.
  int lanczos_steps = 30;
  /// Safety factor on the dual-norm bound.
  double safety = 2.0;
  std::uint64_t seed = 1;
  /// Outer (Picard) iteration controls.
  int picard_max_iterations = 100;
  double picard_tolerance = 1e-10;
};

struct SolveReport {
  int iterations = 0;
  int outer_iterations = 0;
  double residual_norm = 0.0;
  double relative_residual = 0.0;
  /// Certified upper bound on the energy distance to the exact discrete solution.
  double certified_bound = 0.0;
  /// Estimate of the smallest eigenvalue of the Jacobi-scaled (symmetric part of the) matrix.
  double lambda_min = 0.0;
  double eta_at_stop = 0.0;
  bool converged = false;
  bool fell_back_to_exact = false;
  double wall_time = 0.0;
  std::vector<double> residual_history;
};

struct SolveResult {
  DiscreteFunction u;
  SolveReport report;
  /// Nodal approximation of the lowest mode, reusable as a Lanczos start on the next mesh.
  Eigen::VectorXd lowest_mode;
};

using EstimatorCallback = std::function<double(const DiscreteFunction&)>;

/// Conjugate gradients (symmetric) or BiCGStab (nonsymmetric), Jacobi
/// preconditioned, to the exact-mode relative tolerance.
SolveResult solve_exact(const LinearSystem& system, const SolverConfig& config = {},
                        const DiscreteFunction* initial = nullptr, const Eigen::VectorXd* mode_hint = nullptr);

/// Stops as soon as the certified bound on dist(U, U~) drops below
/// vartheta * estimator(U~). A zero estimate with a positive bound falls back
/// to the exact tolerance.
SolveResult solve_inexact(const LinearSystem& system, const EstimatorCallback& estimator, double vartheta,
                          const SolverConfig& config = {}, const DiscreteFunction* initial = nullptr,
                          const Eigen::VectorXd* mode_hint = nullptr);

/// Dispatches on `config.mode`.
SolveResult solve_linear(const LinearSystem& system, const EstimatorCallback& estimator, const SolverConfig& config,
                         const DiscreteFunction* initial = nullptr, const Eigen::VectorXd* mode_hint = nullptr);

/// Picard iteration with frozen alpha_nl. Stops when the energy norm of the
/// increment is below vartheta * eta (inexact mode) or the Picard tolerance
/// relative to the iterate (exact mode).
SolveResult solve_nonlinear(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& initial,
                            const SolverConfig& config, const EstimatorCallback& estimator = {});

/// Smallest eigenvalue estimate of D^{-1/2} S D^{-1/2}, S the symmetric part
/// of `matrix` and D its diagonal, by a Lanczos run of `steps` steps.
struct LanczosResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Eigen::VectorXd vector;  // Ritz vector for lambda_min in the unscaled variables
};
LanczosResult lanczos_extremes(const SparseMatrix& matrix, int steps, std::uint64_t seed,
                               const Eigen::VectorXd* start = nullptr, bool want_vector = false);

}  // namespace afem
