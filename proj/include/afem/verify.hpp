#pragma once

#include "afem/adapt.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace afem {

/// Where the worst case of a check was seen.
struct Witness {
  int level = -1;
  long index = -1;
};

struct CheckResult {
  std::string name;
  /// Measured constants, in report order.
  std::vector<std::pair<std::string, double>> constants;
  std::size_t samples = 0;
  double bound = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string notice;
  std::optional<Witness> witness;

  double constant(const std::string& key) const;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  /// No enabled check failed; skipped checks count as passed.
  bool passed() const;
  const CheckResult* find(const std::string& name) const;
  std::string to_json() const;
  std::string to_table() const;
};

/// Pass thresholds. The defaults are the golden values of the reference runs.
struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t a1_samples = 100;
  std::size_t a1_batches = 4;
  double a4_bound = 100.0;
  double pythagoras_tolerance = 1e-6;
  double kappa0 = 0.9;
  double equivalence_bound = 10.0;
  double closure_bound = 10.0;
  /// Allowed relative excess of the final-half summability proxy over the first half.
  double summability_slack = 0.1;
  /// Patch depth of the refined set in the discrete reliability check for
  /// problems with boundary data.
  int boundary_data_patch = 5;
};

CheckResult check_stability_A1(const AdaptiveRun& run, const ProblemSpec& problem, const VerifyOptions& options = {});
CheckResult check_reduction_A2(const AdaptiveRun& run, const ProblemSpec& problem);
CheckResult check_discrete_reliability_A4(const AdaptiveRun& run, const ProblemSpec& problem,
                                          const VerifyOptions& options = {});
CheckResult check_pythagoras(const AdaptiveRun& run, const ProblemSpec& problem, const VerifyOptions& options = {});
CheckResult check_doerfler_optimality(const AdaptiveRun& run, const VerifyOptions& options = {});

/// Residual against one of the other estimators, evaluated on the run's own meshes.
CheckResult check_estimator_equivalence(const AdaptiveRun& run, const ProblemSpec& problem, EstimatorKind other,
                                        const VerifyOptions& options = {});
/// Same, with `run_other` carrying the other estimator on an identical mesh sequence.
CheckResult check_estimator_equivalence(const AdaptiveRun& run_residual, const AdaptiveRun& run_other,
                                        const VerifyOptions& options = {});

/// error / eta over the levels l >= first_level; passes if max/min <= ratio_bound.
CheckResult check_reliability_efficiency(const AdaptiveRun& run, int first_level = 2, double ratio_bound = 20.0);

/// (1 - vartheta C) eta(U~) <= eta(U) <= (1 + vartheta C) eta(U~) on every audited level.
CheckResult check_inexact_bracket(const AdaptiveRun& run, double c_stab);

/// Closure constant, R-linear envelope, summability proxy, estimator
/// reduction and quasi-monotonicity.
std::vector<CheckResult> check_run_invariants(const AdaptiveRun& run, const VerifyOptions& options = {});

/// Exhaustive minimum cardinality reaching theta * total (same slack as the markers).
std::size_t brute_force_doerfler(std::span<const double> values, double theta);

struct MeshAxiomOptions {
  std::size_t sequences = 100;
  std::size_t steps = 10;
  std::uint64_t seed = 1;
  int k = 2;
  double closure_bound = 10.0;
};

/// Random refinement sequences from `mesh0`: son counts, closure, overlay and
/// modified mesh-size properties.
VerificationReport run_mesh_axiom_suite(const Mesh& mesh0, const MeshAxiomOptions& options = {});

/// All run checks that apply to the problem.
VerificationReport verify_run(const AdaptiveRun& run, const ProblemSpec& problem, const VerifyOptions& options = {});

}  // namespace afem
