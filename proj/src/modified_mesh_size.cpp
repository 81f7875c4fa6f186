#include "afem/modified_mesh_size.hpp"

#include <algorithm>
#include <random>

namespace afem {

PatchConstants measure_patch_constants(const Mesh& mesh, int k) {
  PatchConstants pc;
  const auto h = mesh.mesh_sizes();
  for (std::size_t t = 0; t < mesh.num_elements(); ++t) {
    const auto p = patch(mesh, {static_cast<ElementId>(t)}, k);
    pc.c_patch = std::max(pc.c_patch, static_cast<int>(p.size()));
    for (ElementId s : p) pc.c_mb = std::max(pc.c_mb, h[t] / h[s]);
  }
  return pc;
}

PatchConstants calibrate_patch_constants(const Mesh& mesh, int k, std::uint64_t seed) {
  PatchConstants pc = measure_patch_constants(mesh, k);
  auto merge = [&](const Mesh& m) {
    const auto q = measure_patch_constants(m, k);
    pc.c_mb = std::max(pc.c_mb, q.c_mb);
    pc.c_patch = std::max(pc.c_patch, q.c_patch);
  };
  std::mt19937_64 rng(seed);
  constexpr int kSequences = 6;
  constexpr int kSteps = 8;
  for (int s = 0; s < kSequences; ++s) {
    Mesh m = mesh;
    // Even sequences mark random elements, odd ones chase a random point to
    // produce strong local grading.
    std::uniform_int_distribution<std::size_t> pick_root(0, mesh.num_elements() - 1);
    const auto focus_root = static_cast<ElementId>(pick_root(rng));
    const auto& ft = mesh.triangle(focus_root).v;
    const Vec2 focus = mesh.vertex(ft[0]);
    for (int step = 0; step < kSteps; ++step) {
      ElementSet marked;
      if (s % 2 == 0) {
        std::bernoulli_distribution coin(0.15);
        for (std::size_t t = 0; t < m.num_elements(); ++t) {
          if (coin(rng)) marked.push_back(static_cast<ElementId>(t));
        }
        if (marked.empty()) marked.push_back(0);
      } else {
        for (std::size_t t = 0; t < m.num_elements(); ++t) {
          const auto& v = m.triangle(static_cast<ElementId>(t)).v;
          if (m.vertex(v[0]) == focus || m.vertex(v[1]) == focus || m.vertex(v[2]) == focus) {
            marked.push_back(static_cast<ElementId>(t));
          }
        }
      }
      m = refine(m, marked);
      merge(m);
    }
  }
  return pc;
}

ModifiedMeshSize ModifiedMeshSize::initial(const Mesh& mesh0, const ModifiedMeshSizeOptions& options) {
  if (options.k < 0) throw MeshError("patch depth k must be nonnegative");
  if (!(options.rho > 0.0 && options.rho < 1.0)) throw MeshError("rho must lie in (0,1)");
  ModifiedMeshSize s;
  s.mesh_id_ = mesh0.id();
  s.k_ = options.k;
  s.rho_ = options.rho;
  s.constants_ = calibrate_patch_constants(mesh0, options.k, options.calibration_seed);
  if (options.n_max) {
    if (*options.n_max < 0) throw MeshError("n_max must be nonnegative");
    s.n_max_ = *options.n_max;
  } else {
    // Smallest N0 with c_mb^2 rho^N0 <= 1.
    int n0 = 0;
    double v = s.constants_.c_mb * s.constants_.c_mb;
    while (v > 1.0) {
      v *= s.rho_;
      ++n0;
    }
    s.n_max_ = n0 * s.constants_.c_patch;
  }
  s.rho_htc_ = std::pow(s.rho_, 1.0 / (s.n_max_ + 1));
  s.values_ = mesh0.mesh_sizes();
  s.counters_.assign(mesh0.num_elements(), 0);
  return s;
}

ModifiedMeshSize ModifiedMeshSize::update(const Mesh& old, const Mesh& fresh) const {
  if (old.id() != mesh_id_) throw MeshError("modified mesh size does not belong to the given mesh");
  if (fresh.parent_mesh_id() != old.id()) throw MeshError("mesh is not a one-step refinement");
  const auto refined = refined_elements(old, fresh);
  std::vector<std::uint8_t> in_patch(old.num_elements(), 0);
  for (ElementId t : patch(old, refined, k_)) in_patch[t] = 1;

  ModifiedMeshSize s = *this;
  s.mesh_id_ = fresh.id();
  s.values_.resize(fresh.num_elements());
  s.counters_.resize(fresh.num_elements());
  for (std::size_t t = 0; t < fresh.num_elements(); ++t) {
    const auto id = static_cast<ElementId>(t);
    const ElementId p = fresh.parent(id);
    if (!fresh.is_unrefined_copy(id)) {
      s.values_[t] = fresh.mesh_size(id);
      s.counters_[t] = 0;
    } else if (in_patch[p]) {
      s.values_[t] = values_[p] * rho_htc_;
      s.counters_[t] = counters_[p] + 1;
    } else {
      s.values_[t] = values_[p];
      s.counters_[t] = counters_[p];
    }
  }
  return s;
}

ModifiedMeshSizeCheck check_modified_mesh_size(const Mesh& old, const ModifiedMeshSize& old_state,
                                               const Mesh& fresh, const ModifiedMeshSize& fresh_state) {
  ModifiedMeshSizeCheck c;
  const auto refined = refined_elements(old, fresh);
  std::vector<std::uint8_t> in_patch(old.num_elements(), 0);
  for (ElementId t : patch(old, refined, old_state.k())) in_patch[t] = 1;
  const double c_eq = fresh_state.c_eq();
  const auto hv = fresh_state.values();
  const auto ho = old_state.values();
  for (std::size_t t = 0; t < fresh.num_elements(); ++t) {
    const auto id = static_cast<ElementId>(t);
    const double h = fresh.mesh_size(id);
    const int n = fresh_state.counters()[t];
    // The lower bound is tight when n == n_max, so the counter carries it there.
    if (hv[t] > h || n > fresh_state.n_max() || (n < fresh_state.n_max() && hv[t] < h / c_eq)) ++c.equivalence;
    const ElementId p = fresh.parent(id);
    if (hv[t] > ho[p]) ++c.monotonicity;
    if (in_patch[p] && hv[t] > old_state.rho_htc() * ho[p]) ++c.contraction;
  }
  return c;
}

}  // namespace afem
