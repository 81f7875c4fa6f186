#include "afem/adapt.hpp"

#include "afem/assembly.hpp"
#include "afem/mesh_io.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace afem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const char* estimator_field(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Residual: return "eta_residual";
    case EstimatorKind::Facet: return "eta_facet";
    case EstimatorKind::ZZ: return "eta_zz";
  }
  return "eta";
}

double& companion_slot(LevelRecord& r, EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Residual: return r.eta_residual;
    case EstimatorKind::Facet: return r.eta_facet;
    case EstimatorKind::ZZ: return r.eta_zz;
  }
  return r.eta_residual;
}

void write_snapshot(const AdaptiveConfig& config, int level, const Mesh& mesh, const DiscreteFunction& u,
                    const LocalIndicators& ind, const ModifiedMeshSize& hmod) {
  std::vector<double> per_element(mesh.num_elements(), 0.0);
  for (std::size_t i = 0; i < ind.size(); ++i) {
    const auto& el = ind.elements[i];
    const int n = el[1] == kNone ? 1 : 2;
    for (int j = 0; j < n; ++j) per_element[el[j]] += ind.values[i] / n;
  }
  std::vector<double> h = mesh.mesh_sizes();
  std::vector<double> hm(hmod.values().begin(), hmod.values().end());
  std::vector<double> nodal(u.values.data(), u.values.data() + u.values.size());
  std::filesystem::create_directories(config.vtk_dir);
  char name[64];
  std::snprintf(name, sizeof name, "level_%04d.vtk", level);
  write_vtk(config.vtk_dir / name, mesh,
            {{estimator_field(config.estimator), per_element}, {"h", h}, {"h_mod", hm}}, {{"U", nodal}});
}

}  // namespace

void AdaptiveConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0,1]");
  if (solver.mode == SolveMode::Inexact && !(solver.vartheta > 0.0)) throw ConfigError("vartheta must be positive");
  if (k < 0) throw ConfigError("k must be nonnegative");
  if (stop.max_levels && *stop.max_levels < 1) throw ConfigError("max_levels must be at least 1");
  if (!stop.max_elements && !stop.eta_tolerance && !stop.max_levels) {
    throw ConfigError("the stop rule needs at least one criterion");
  }
  if (vtk_every < 0) throw ConfigError("vtk_every must be nonnegative");
  if (vtk_every > 0 && vtk_dir.empty()) throw ConfigError("vtk_every needs an output directory");
  if (n_max && *n_max < 0) throw ConfigError("n_max must be nonnegative");
}

std::vector<double> AdaptiveRun::etas() const {
  std::vector<double> out;
  for (const auto& r : levels) out.push_back(r.eta);
  return out;
}

std::vector<double> AdaptiveRun::errors() const {
  std::vector<double> out;
  for (const auto& r : levels) out.push_back(r.error);
  return out;
}

std::vector<std::size_t> AdaptiveRun::element_counts() const {
  std::vector<std::size_t> out;
  for (const auto& r : levels) out.push_back(r.elements);
  return out;
}

AdaptiveRun run_adaptive(const AdaptiveConfig& config) {
  const ProblemSpec problem = make_problem(config.problem);
  return run_adaptive(config, problem.initial_mesh(), problem);
}

AdaptiveRun run_adaptive(const AdaptiveConfig& config, const Mesh& mesh0, const ProblemSpec& problem) {
  config.validate();
  const auto run_start = Clock::now();
  AdaptiveRun run;
  run.config = config;
  run.initial_elements = mesh0.num_elements();

  ModifiedMeshSizeOptions hopts;
  hopts.k = config.k;
  hopts.n_max = config.n_max;
  hopts.calibration_seed = config.seed;
  ModifiedMeshSize hmod = ModifiedMeshSize::initial(mesh0, hopts);

  SolverConfig solver = config.solver;
  solver.seed = config.seed;
  const bool inexact = solver.mode == SolveMode::Inexact;
  const bool audit = inexact && config.audit_inexact;

  Mesh mesh = mesh0;
  std::optional<DiscreteFunction> guess;
  Eigen::VectorXd mode_hint;
  DiscreteFunction previous;  // U_{l-1} prolongated to the current mesh

  for (int level = 0;; ++level) {
    const auto level_start = Clock::now();
    LevelRecord rec;
    rec.level = level;
    rec.elements = mesh.num_elements();
    rec.vertices = mesh.num_vertices();
    rec.shape_constant = mesh.shape_constant();

    // SOLVE
    Estimator est(mesh, problem, config.estimator);
    const EstimatorCallback callback = [&est](const DiscreteFunction& v) { return est.eta(v); };
    const DiscreteFunction start = guess ? *guess : DiscreteFunction::zeros(mesh);
    SolveResult sol;
    const auto solve_start = Clock::now();
    std::optional<LinearSystem> system;
    if (problem.is_nonlinear()) {
      sol = solve_nonlinear(mesh, problem, start, solver, callback);
      std::size_t free = 0;
      for (std::size_t v = 0; v < mesh.num_vertices(); ++v) free += mesh.is_dirichlet_vertex(static_cast<VertexId>(v)) ? 0 : 1;
      rec.dofs = free;
    } else {
      system = assemble(mesh, problem);
      rec.dofs = static_cast<std::size_t>(system->size());
      sol = solve_linear(*system, callback, solver, &start, mode_hint.size() ? &mode_hint : nullptr);
    }
    rec.solve_time = seconds_since(solve_start);
    if (!sol.report.converged) {
      throw SolverError("solver did not converge on level " + std::to_string(level));
    }
    rec.solver_iters = sol.report.iterations;
    rec.picard_iters = sol.report.outer_iterations;
    rec.alg_residual = sol.report.residual_norm;
    rec.certified_bound = sol.report.certified_bound;
    rec.lambda_min = sol.report.lambda_min;
    if (sol.lowest_mode.size() == static_cast<Eigen::Index>(mesh.num_vertices())) mode_hint = sol.lowest_mode;
    const DiscreteFunction& U = sol.u;

    // ESTIMATE
    const LocalIndicators ind = est.indicators(U);
    rec.eta = ind.eta();
    companion_slot(rec, config.estimator) = rec.eta;
    if (config.companions) {
      for (EstimatorKind other : {EstimatorKind::Residual, EstimatorKind::Facet, EstimatorKind::ZZ}) {
        if (other == config.estimator) continue;
        companion_slot(rec, other) = compute_indicators(mesh, problem, U, other).eta();
      }
    }
    if (problem.has_exact()) rec.error = energy_norm_error(mesh, problem, U);
    rec.osc = std::sqrt(oscillation(mesh, problem, U).total());

    const SparseMatrix energy = energy_matrix(mesh, problem);
    if (level > 0) {
      run.levels.back().dist_next = energy_norm(energy, U.values - previous.values);
    }
    if (audit) {
      SolveResult exact;
      if (problem.is_nonlinear()) {
        SolverConfig ex = solver;
        ex.mode = SolveMode::Exact;
        exact = solve_nonlinear(mesh, problem, U, ex);
      } else {
        SolverConfig ex = solver;
        ex.mode = SolveMode::Exact;
        exact = solve_exact(*system, ex, &U);
      }
      rec.eta_exact = est.eta(exact.u);
      rec.dist_exact = energy_norm(energy, exact.u.values - U.values);
    }

    if (config.keep_history) {
      run.meshes.push_back(mesh);
      run.solutions.push_back(U);
      run.element_indicators.push_back(config.estimator == EstimatorKind::Residual ? ind.values
                                                                                   : est.element_values(U));
    }
    if (config.vtk_every > 0 && level % config.vtk_every == 0) write_snapshot(config, level, mesh, U, ind, hmod);

    // Stop rule.
    std::string reason;
    if (config.stop.eta_tolerance && rec.eta < *config.stop.eta_tolerance) {
      reason = "eta below tolerance";
    } else if (config.stop.max_elements && rec.elements > *config.stop.max_elements) {
      reason = "element cap reached";
    } else if (config.stop.max_levels && level + 1 >= *config.stop.max_levels) {
      reason = "level cap reached";
    }

    // MARK
    ElementSet to_refine;
    if (reason.empty()) {
      if (config.uniform) {
        rec.marked = mesh.num_elements();
        rec.achieved_fraction = 1.0;
      } else {
        const MarkedSet marked = mark(ind, config.theta, config.marking);
        rec.marked = marked.size();
        rec.achieved_fraction = marked.achieved_fraction;
        to_refine = elements_to_refine(mesh, marked, ind);
        if (to_refine.empty()) reason = "nothing to mark";
      }
    }
    if (!reason.empty()) {
      rec.wall_time = seconds_since(level_start);
      run.levels.push_back(rec);
      run.stop_reason = reason;
      break;
    }

    // REFINE
    Mesh fine = config.uniform ? uniform_refine(mesh) : refine(mesh, to_refine);
    if (fine.num_elements() <= mesh.num_elements()) {
      throw MeshError("refinement produced no new elements");
    }
    rec.refined = config.uniform ? mesh.num_elements() : to_refine.size();
    if (config.keep_history) {
      run.marked_elements.push_back(config.uniform ? refined_elements(mesh, fine) : to_refine);
      run.marked_counts.push_back(rec.refined);
    }
    ModifiedMeshSize next_h = hmod.update(mesh, fine);
    rec.hmod_violations = check_modified_mesh_size(mesh, hmod, fine, next_h).total();
    hmod = std::move(next_h);

    previous = prolongate(fine, U);
    guess = previous;
    if (mode_hint.size()) mode_hint = prolongate(fine, DiscreteFunction{mesh.id(), mode_hint}).values;
    mesh = std::move(fine);
    rec.wall_time = seconds_since(level_start);
    run.levels.push_back(rec);
  }
  run.total_time = seconds_since(run_start);
  return run;
}

RateFit fit_rate(const AdaptiveRun& run, RateQuantity quantity) {
  std::vector<double> q = quantity == RateQuantity::Estimator ? run.etas() : run.errors();
  return fit_rate(run.element_counts(), run.initial_elements, q);
}

RateFit fit_rate(const std::vector<std::size_t>& elements, std::size_t initial_elements,
                 const std::vector<double>& quantity) {
  const std::size_t L = quantity.size();
  if (L < 6 || elements.size() != L) throw ConfigError("rate fit needs at least 6 levels");
  std::vector<double> x, y;
  for (std::size_t l = L / 2; l < L; ++l) {
    if (!(quantity[l] > 0.0) || !std::isfinite(quantity[l])) throw ConfigError("rate fit needs positive values");
    x.push_back(std::log(static_cast<double>(elements[l]) - static_cast<double>(initial_elements) + 1.0));
    y.push_back(std::log(quantity[l]));
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("rate fit needs distinct element counts");
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    sse += r * r;
  }
  RateFit fit;
  fit.slope = -slope;
  fit.points = x.size();
  const double dof = n - 2.0;
  fit.std_error = dof > 0.0 ? std::sqrt(sse / dof / sxx) : 0.0;
  const double t = dof > 0.0 ? boost::math::quantile(boost::math::students_t(dof), 0.975) : 0.0;
  fit.ci_low = fit.slope - t * fit.std_error;
  fit.ci_high = fit.slope + t * fit.std_error;
  return fit;
}

Envelope r_linear_envelope(const std::vector<double>& etas) {
  Envelope env;
  const std::size_t L = etas.size();
  if (L < 2) return env;
  // rho from the least-squares trend of log eta^2 over the level index.
  double mx = 0.0, my = 0.0;
  std::vector<double> y(L);
  for (std::size_t l = 0; l < L; ++l) {
    y[l] = 2.0 * std::log(std::max(etas[l], std::numeric_limits<double>::min()));
    mx += static_cast<double>(l);
    my += y[l];
  }
  mx /= static_cast<double>(L);
  my /= static_cast<double>(L);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    sxx += (static_cast<double>(l) - mx) * (static_cast<double>(l) - mx);
    sxy += (static_cast<double>(l) - mx) * (y[l] - my);
  }
  env.rho = std::exp(sxy / sxx);
  double c = 1.0;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t j = 1; l + j < L; ++j) {
      c = std::max(c, std::exp(y[l + j] - y[l] - static_cast<double>(j) * std::log(env.rho)));
    }
  }
  env.c = c;
  return env;
}

Summability summability_proxy(const std::vector<double>& etas) {
  Summability s;
  const std::size_t L = etas.size();
  s.per_level.assign(L, 0.0);
  double tail = 0.0;
  for (std::size_t l = L; l-- > 0;) {
    const double e2 = etas[l] * etas[l];
    s.per_level[l] = e2 > 0.0 ? tail / e2 : (tail > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    tail += e2;
  }
  for (std::size_t l = 0; l < L; ++l) {
    s.sup = std::max(s.sup, s.per_level[l]);
    if (l < L / 2) {
      s.first_half_max = std::max(s.first_half_max, s.per_level[l]);
    } else {
      s.final_half_max = std::max(s.final_half_max, s.per_level[l]);
    }
  }
  s.non_growing = std::isfinite(s.sup) && s.final_half_max <= s.first_half_max;
  return s;
}

ReductionFit estimator_reduction(const AdaptiveRun& run) {
  // For a fixed C the smallest admissible q is max (eta_{l+1}^2 - C d_l^2) / eta_l^2.
  // C is the smallest value on a log grid with q(C) < 1.
  const auto& lv = run.levels;
  std::vector<double> e0, e1, d;
  for (std::size_t l = 0; l + 1 < lv.size(); ++l) {
    if (!(lv[l].eta > 0.0) || !std::isfinite(lv[l].dist_next)) continue;
    e0.push_back(lv[l].eta * lv[l].eta);
    e1.push_back(lv[l + 1].eta * lv[l + 1].eta);
    d.push_back(lv[l].dist_next * lv[l].dist_next);
  }
  ReductionFit fit;
  if (e0.empty()) return fit;
  auto q_of = [&](double c) {
    double q = 0.0;
    for (std::size_t i = 0; i < e0.size(); ++i) q = std::max(q, (e1[i] - c * d[i]) / e0[i]);
    return q;
  };
  fit.c = 0.0;
  fit.q = q_of(0.0);
  if (fit.q < 1.0) return fit;
  for (double c = 1e-3; c <= 1e6; c *= std::pow(10.0, 0.125)) {
    const double q = q_of(c);
    if (q < 1.0) {
      fit.c = c;
      fit.q = q;
      return fit;
    }
  }
  fit.c = 1e6;
  fit.q = q_of(1e6);
  return fit;
}

double quasi_monotonicity(const std::vector<double>& etas) {
  double c = 1.0;
  double running_min = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < etas.size(); ++l) {
    if (running_min < std::numeric_limits<double>::infinity() && running_min > 0.0) {
      c = std::max(c, etas[l] / running_min);
    }
    running_min = std::min(running_min, etas[l]);
  }
  return c;
}

std::vector<double> closure_constants(const AdaptiveRun& run) {
  std::vector<double> out;
  double marked = 0.0;
  for (std::size_t l = 1; l < run.levels.size(); ++l) {
    marked += static_cast<double>(run.levels[l - 1].refined);
    const double grown = static_cast<double>(run.levels[l].elements) - static_cast<double>(run.initial_elements);
    out.push_back(marked > 0.0 ? grown / marked : 0.0);
  }
  return out;
}

}  // namespace afem
