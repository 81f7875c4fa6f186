#pragma once

#include "afem/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace afem {

/// Largest mesh-size ratio and largest element count over k-patches.
struct PatchConstants {
  double c_mb = 1.0;  // max h_T / h_T' for T' in the k-patch of T
  int c_patch = 1;    // max |patch of T|
};

PatchConstants measure_patch_constants(const Mesh& mesh, int k);

/// Patch constants over `mesh` and a seeded battery of random bisection
/// sequences started from it.
PatchConstants calibrate_patch_constants(const Mesh& mesh, int k, std::uint64_t seed = 0x5eed);

struct ModifiedMeshSizeOptions {
  int k = 2;
  /// Per-bisection reduction of h_T = |T|^{1/2}.
  double rho = 1.0 / std::sqrt(2.0);
  /// Overrides the calibrated bound on scalings between two resets.
  std::optional<int> n_max;
  std::uint64_t calibration_seed = 0x5eed;
};

/// Modified mesh size h(T,k) built along one refinement sequence.
///
/// Refined elements restart at h_T. Unrefined elements inside the k-patch of
/// the refined set are scaled by rho^(1/(n_max+1)). Everything else is kept.
class ModifiedMeshSize {
 public:
  static ModifiedMeshSize initial(const Mesh& mesh0, const ModifiedMeshSizeOptions& options = {});

  /// State for `fresh`, a one-step refinement of `old`.
  ModifiedMeshSize update(const Mesh& old, const Mesh& fresh) const;

  std::uint64_t mesh_id() const { return mesh_id_; }
  std::span<const double> values() const { return values_; }
  /// Number of patch scalings since the element was last created.
  std::span<const int> counters() const { return counters_; }

  int k() const { return k_; }
  int n_max() const { return n_max_; }
  double rho() const { return rho_; }
  double rho_htc() const { return rho_htc_; }
  /// Equivalence constant rho^(-n_max/(n_max+1)).
  double c_eq() const { return std::pow(rho_, -static_cast<double>(n_max_) / (n_max_ + 1)); }
  PatchConstants patch_constants() const { return constants_; }

 private:
  std::uint64_t mesh_id_ = 0;
  int k_ = 2;
  int n_max_ = 0;
  double rho_ = 0.0;
  double rho_htc_ = 0.0;
  PatchConstants constants_;
  std::vector<double> values_;
  std::vector<int> counters_;
};

/// Violation counts of the three defining properties for one update step.
struct ModifiedMeshSizeCheck {
  std::size_t equivalence = 0;
  std::size_t contraction = 0;
  std::size_t monotonicity = 0;
  std::size_t total() const { return equivalence + contraction + monotonicity; }
};

ModifiedMeshSizeCheck check_modified_mesh_size(const Mesh& old, const ModifiedMeshSize& old_state,
                                               const Mesh& fresh, const ModifiedMeshSize& fresh_state);

}  // namespace afem
