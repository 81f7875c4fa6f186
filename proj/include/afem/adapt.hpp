#pragma once

#include "afem/estimate.hpp"
#include "afem/mark.hpp"
#include "afem/mesh.hpp"
#include "afem/modified_mesh_size.hpp"
#include "afem/problem.hpp"
#include "afem/solve.hpp"

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace afem {

struct StopRule {
  std::optional<std::size_t> max_elements = 200000;
  std::optional<double> eta_tolerance = 1e-8;
  std::optional<int> max_levels;
};

struct AdaptiveConfig {
  std::string problem = "lshape_singular";
  EstimatorKind estimator = EstimatorKind::Residual;
  MarkingStrategy marking = MarkingStrategy::Greedy;
  double theta = 0.5;
  /// Refine every element by `uniform_refine` instead of marking.
  bool uniform = false;
  SolverConfig solver;
  StopRule stop;
  /// Patch depth of the modified mesh size.
  int k = 2;
  std::optional<int> n_max;
  std::uint64_t seed = 1;
  /// Evaluate the other two estimators on every level.
  bool companions = false;
  /// In inexact mode also solve exactly on every level to audit the certified bound.
  bool audit_inexact = false;
  /// Keep meshes, solutions and indicators for the verification harness.
  bool keep_history = true;
  int vtk_every = 0;
  std::filesystem::path vtk_dir;

  void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Telemetry of one level.
struct LevelRecord {
  int level = 0;
  std::size_t elements = 0;
  std::size_t vertices = 0;
  std::size_t dofs = 0;
  double eta = kNaN;
  double error = kNaN;
  double osc = kNaN;
  std::size_t marked = 0;
  std::size_t refined = 0;
  double achieved_fraction = kNaN;
  /// dist(U_{l+1}, U_l) in the energy norm of the finer mesh.
  double dist_next = kNaN;
  int solver_iters = 0;
  int picard_iters = 0;
  double alg_residual = kNaN;
  double certified_bound = kNaN;
  double lambda_min = kNaN;
  double eta_residual = kNaN;
  double eta_facet = kNaN;
  double eta_zz = kNaN;
  /// Exact discrete solution audit for inexact runs.
  double eta_exact = kNaN;
  double dist_exact = kNaN;
  double shape_constant = kNaN;
  std::size_t hmod_violations = 0;
  double wall_time = 0.0;
  double solve_time = 0.0;
};

struct AdaptiveRun {
  AdaptiveConfig config;
  std::size_t initial_elements = 0;
  std::vector<LevelRecord> levels;
  std::string stop_reason;
  double total_time = 0.0;

  // History, filled when `keep_history` is set.
  std::vector<Mesh> meshes;
  std::vector<DiscreteFunction> solutions;
  /// Residual-estimator contributions per element on each level.
  std::vector<std::vector<double>> element_indicators;
  /// Elements handed to `refine` on each level except the last.
  std::vector<ElementSet> marked_elements;
  std::vector<std::size_t> marked_counts;

  std::vector<double> etas() const;
  std::vector<double> errors() const;
  std::vector<std::size_t> element_counts() const;
};

/// SOLVE, ESTIMATE, MARK, REFINE until the stop rule fires.
AdaptiveRun run_adaptive(const AdaptiveConfig& config, const Mesh& mesh0, const ProblemSpec& problem);
/// Uses the registered problem and its initial mesh.
AdaptiveRun run_adaptive(const AdaptiveConfig& config);

enum class RateQuantity { Estimator, Error };

struct RateFit {
  double slope = 0.0;     // s, so that q ~ (N - N0 + 1)^(-s)
  double ci_low = 0.0;    // 95% confidence interval
  double ci_high = 0.0;
  double std_error = 0.0;
  std::size_t points = 0;
};

/// Least squares of log q against log(N - N0 + 1) over the final half of the levels.
RateFit fit_rate(const AdaptiveRun& run, RateQuantity quantity);
RateFit fit_rate(const std::vector<std::size_t>& elements, std::size_t initial_elements,
                 const std::vector<double>& quantity);

/// eta_{l+j}^2 <= C rho^j eta_l^2 for all l, j.
struct Envelope {
  double rho = 1.0;
  double c = 1.0;
};
Envelope r_linear_envelope(const std::vector<double>& etas);

/// sup_l sum_{k>l} eta_k^2 / eta_l^2 and its growth over the run.
struct Summability {
  double sup = 0.0;
  double first_half_max = 0.0;
  double final_half_max = 0.0;
  bool non_growing = false;
  std::vector<double> per_level;
};
Summability summability_proxy(const std::vector<double>& etas);

/// Smallest q with eta_{l+1}^2 <= q eta_l^2 + C dist^2 once C is fixed by a
/// least-squares split; reports both.
struct ReductionFit {
  double q = 0.0;
  double c = 0.0;
};
ReductionFit estimator_reduction(const AdaptiveRun& run);

/// max over l < l' of eta_{l'} / eta_l.
double quasi_monotonicity(const std::vector<double>& etas);

/// (|T_l| - |T_0|) / sum_{k<l} |M_k| for every level l >= 1.
std::vector<double> closure_constants(const AdaptiveRun& run);

}  // namespace afem
