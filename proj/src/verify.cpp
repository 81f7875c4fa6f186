#include "afem/verify.hpp"

#include "afem/assembly.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace afem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CheckResult skipped(std::string name, std::string why) {
  CheckResult r;
  r.name = std::move(name);
  r.skipped = true;
  r.passed = true;
  r.notice = std::move(why);
  return r;
}

bool has_history(const AdaptiveRun& run) {
  return run.meshes.size() == run.levels.size() && run.solutions.size() == run.levels.size() &&
         run.element_indicators.size() == run.levels.size();
}

// Element of the coarse mesh each unrefined copy in `fine` corresponds to, kNone for new elements.
std::vector<ElementId> copy_map(const Mesh& fine) {
  std::vector<ElementId> out(fine.num_elements(), kNone);
  for (std::size_t t = 0; t < fine.num_elements(); ++t) {
    const auto id = static_cast<ElementId>(t);
    if (fine.is_unrefined_copy(id)) out[t] = fine.parent(id);
  }
  return out;
}

// Elements of meshes[l] still present in meshes[l2].
std::vector<std::uint8_t> survivors(const std::vector<Mesh>& meshes, std::size_t l, std::size_t l2) {
  // Walk from the fine mesh down, carrying the coarse id of every surviving element.
  std::vector<ElementId> id(meshes[l2].num_elements());
  std::iota(id.begin(), id.end(), 0);
  for (std::size_t m = l2; m > l; --m) {
    const auto map = copy_map(meshes[m]);
    for (auto& t : id) t = t == kNone ? kNone : map[t];
  }
  std::vector<std::uint8_t> alive(meshes[l].num_elements(), 0);
  for (ElementId t : id) {
    if (t != kNone) alive[t] = 1;
  }
  return alive;
}

double sum_over(const std::vector<double>& v, const std::vector<std::uint8_t>& mask, std::uint8_t want) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i] == want) s += v[i];
  }
  return s;
}

bool uses_boundary_data(const ProblemSpec& problem, const Mesh& mesh) {
  return static_cast<bool>(problem.dirichlet) || mesh.has_boundary_kind(BoundaryKind::Neumann) ||
         mesh.has_boundary_kind(BoundaryKind::Robin);
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Lazily built per-level estimators and energy matrices.
class LevelCache {
 public:
  LevelCache(const AdaptiveRun& run, const ProblemSpec& problem) : run_(run), problem_(problem) {
    est_.resize(run.meshes.size());
    energy_.resize(run.meshes.size());
  }
  const Estimator& estimator(std::size_t l) {
    if (!est_[l]) est_[l] = std::make_unique<Estimator>(run_.meshes[l], problem_, EstimatorKind::Residual);
    return *est_[l];
  }
  const SparseMatrix& energy(std::size_t l) {
    if (!energy_[l]) energy_[l] = std::make_unique<SparseMatrix>(energy_matrix(run_.meshes[l], problem_));
    return *energy_[l];
  }

 private:
  const AdaptiveRun& run_;
  const ProblemSpec& problem_;
  std::vector<std::unique_ptr<Estimator>> est_;
  std::vector<std::unique_ptr<SparseMatrix>> energy_;
};

}  // namespace

double CheckResult::constant(const std::string& key) const {
  for (const auto& [k, v] : constants) {
    if (k == key) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string VerificationReport::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
  };
  nlohmann::json j;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["skipped"] = c.skipped;
    e["samples"] = c.samples;
    e["bound"] = num(c.bound);
    nlohmann::json consts = nlohmann::json::object();
    for (const auto& [k, v] : c.constants) consts[k] = num(v);
    e["constants"] = consts;
    if (!c.notice.empty()) e["notice"] = c.notice;
    if (c.witness) e["witness"] = {{"level", c.witness->level}, {"index", c.witness->index}};
    j["checks"].push_back(e);
  }
  return j.dump(2);
}

std::string VerificationReport::to_table() const {
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-28s %-6s %8s %12s  %s\n", "check", "result", "samples", "bound", "constants");
  out << line;
  for (const auto& c : checks) {
    std::string consts;
    for (const auto& [k, v] : c.constants) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s%s=%.4g", consts.empty() ? "" : " ", k.c_str(), v);
      consts += buf;
    }
    if (c.witness) consts += " @level " + std::to_string(c.witness->level) + " index " + std::to_string(c.witness->index);
    if (!c.notice.empty()) consts += " (" + c.notice + ")";
    std::snprintf(line, sizeof line, "%-28s %-6s %8zu %12.4g  ", c.name.c_str(),
                  c.skipped ? "skip" : (c.passed ? "pass" : "FAIL"), c.samples, c.bound);
    out << line << consts << '\n';
  }
  return out.str();
}

CheckResult check_stability_A1(const AdaptiveRun& run, const ProblemSpec& problem, const VerifyOptions& options) {
  if (run.levels.size() < 2 || !has_history(run)) return skipped("stability_A1", "needs two recorded levels");
  CheckResult r;
  r.name = "stability_A1";
  LevelCache cache(run, problem);
  std::mt19937_64 rng(options.seed);
  const std::size_t pairs = run.levels.size() - 1;
  std::uniform_int_distribution<std::size_t> pick(0, pairs - 1);
  const std::size_t batches = std::max<std::size_t>(1, options.a1_batches);
  std::vector<double> batch_max(batches, 0.0);
  double worst = 0.0;
  for (std::size_t s = 0; s < options.a1_samples; ++s) {
    const std::size_t l = pick(rng);
    // Odd samples compare two functions on the same mesh, so S is the whole mesh.
    const bool same = s % 2 == 1;
    const std::size_t lf = same ? l : l + 1;
    const Mesh& coarse = run.meshes[l];
    const Mesh& fine = run.meshes[lf];
    DiscreteFunction v{coarse.id(), gaussian(rng, coarse.num_vertices())};
    v.values /= energy_norm(cache.energy(l), v.values);
    Eigen::VectorXd w = gaussian(rng, fine.num_vertices());
    const double wn = energy_norm(cache.energy(lf), w);
    if (!(wn > 0.0)) continue;
    w /= wn;
    const DiscreteFunction v_on_fine = same ? v : prolongate(fine, v);
    const DiscreteFunction vhat{fine.id(), v_on_fine.values + w};
    const auto eta_c = cache.estimator(l).element_values(v);
    const auto eta_f = cache.estimator(lf).element_values(vhat);
    double sc = 0.0, sf = 0.0;
    if (same) {
      sc = std::accumulate(eta_c.begin(), eta_c.end(), 0.0);
      sf = std::accumulate(eta_f.begin(), eta_f.end(), 0.0);
    } else {
      const auto map = copy_map(fine);
      for (std::size_t t = 0; t < map.size(); ++t) {
        if (map[t] == kNone) continue;
        sf += eta_f[t];
        sc += eta_c[map[t]];
      }
    }
    const double ratio = std::abs(std::sqrt(sf) - std::sqrt(sc));  // ||vhat - v|| = 1
    ++r.samples;
    auto& bm = batch_max[s * batches / options.a1_samples];
    bm = std::max(bm, ratio);
    if (!(ratio <= worst)) {
      worst = ratio;
      r.witness = Witness{static_cast<int>(l), static_cast<long>(s)};
    }
  }
  const double med = median(batch_max);
  const double top = *std::max_element(batch_max.begin(), batch_max.end());
  r.constants = {{"C_stab", worst}, {"batch_median", med}};
  r.bound = 2.0 * med;
  r.passed = std::isfinite(worst) && r.samples > 0 && top < 2.0 * med;
  if (r.passed) r.witness.reset();
  return r;
}

CheckResult check_reduction_A2(const AdaptiveRun& run, const ProblemSpec& problem) {
  (void)problem;
  if (run.levels.size() < 2 || !has_history(run)) return skipped("reduction_A2", "needs two recorded levels");
  CheckResult r;
  r.name = "reduction_A2";
  const double q = 1.0 / std::sqrt(2.0);
  double c_red = 0.0;
  bool ok = true;
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    const auto alive = survivors(run.meshes, l, l + 1);
    const auto map = copy_map(run.meshes[l + 1]);
    double fresh = 0.0;
    for (std::size_t t = 0; t < map.size(); ++t) {
      if (map[t] == kNone) fresh += run.element_indicators[l + 1][t];
    }
    const double refined = sum_over(run.element_indicators[l], alive, 0);
    const double excess = fresh - q * refined;
    const double d = run.levels[l].dist_next;
    ++r.samples;
    double c = 0.0;
    if (excess > 0.0) c = d > 0.0 ? excess / (d * d) : kInf;
    if (!std::isfinite(c)) ok = false;
    if (!(c <= c_red)) {
      c_red = c;
      r.witness = Witness{static_cast<int>(l), -1};
    }
  }
  r.constants = {{"C_red", c_red}, {"rho_red", q}};
  r.bound = kInf;
  r.passed = ok;
  if (ok) r.witness.reset();
  return r;
}

CheckResult check_discrete_reliability_A4(const AdaptiveRun& run, const ProblemSpec& problem,
                                          const VerifyOptions& options) {
  if (run.levels.size() < 2 || !has_history(run)) return skipped("discrete_reliability_A4", "needs two recorded levels");
  CheckResult r;
  r.name = "discrete_reliability_A4";
  r.bound = options.a4_bound;
  const std::size_t L = run.levels.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t l = 0; l + 1 < L; ++l) pairs.emplace_back(l, l + 1);
  if (L >= 3) {
    std::mt19937_64 rng(options.seed ^ 0xa4);
    std::uniform_int_distribution<std::size_t> pick(0, L - 3);
    for (int i = 0; i < 3; ++i) {
      const std::size_t l = pick(rng);
      std::uniform_int_distribution<std::size_t> pick2(l + 2, L - 1);
      pairs.emplace_back(l, pick2(rng));
    }
  }
  const bool patched = uses_boundary_data(problem, run.meshes[0]);
  LevelCache cache(run, problem);
  double worst = 0.0;
  bool ok = true;
  for (const auto& [l, l2] : pairs) {
    double dist2 = 0.0;
    if (l2 == l + 1) {
      dist2 = run.levels[l].dist_next * run.levels[l].dist_next;
    } else {
      DiscreteFunction u = run.solutions[l];
      for (std::size_t m = l + 1; m <= l2; ++m) u = prolongate(run.meshes[m], u);
      const double d = energy_norm(cache.energy(l2), run.solutions[l2].values - u.values);
      dist2 = d * d;
    }
    auto alive = survivors(run.meshes, l, l2);
    if (patched) {
      ElementSet refined;
      for (std::size_t t = 0; t < alive.size(); ++t) {
        if (!alive[t]) refined.push_back(static_cast<ElementId>(t));
      }
      for (ElementId t : patch(run.meshes[l], refined, options.boundary_data_patch)) alive[t] = 0;
    }
    const double denom = sum_over(run.element_indicators[l], alive, 0);
    ++r.samples;
    double ratio = 0.0;
    if (dist2 > 0.0) ratio = denom > 0.0 ? dist2 / denom : kInf;
    if (!std::isfinite(ratio) || ratio > options.a4_bound) ok = false;
    if (!(ratio <= worst)) {
      worst = ratio;
      r.witness = Witness{static_cast<int>(l), static_cast<long>(l2)};
    }
  }
  r.constants = {{"C_drel", worst}};
  if (patched) r.notice = "refined set enlarged by its patch of depth " + std::to_string(options.boundary_data_patch);
  r.passed = ok;
  if (ok) r.witness.reset();
  return r;
}

CheckResult check_pythagoras(const AdaptiveRun& run, const ProblemSpec& problem, const VerifyOptions& options) {
  if (!problem.is_symmetric() || problem.is_nonlinear()) return skipped("pythagoras", "needs a symmetric linear problem");
  if (!problem.has_exact()) return skipped("pythagoras", "needs a manufactured solution");
  if (run.levels.size() < 2) return skipped("pythagoras", "needs two recorded levels");
  CheckResult r;
  r.name = "pythagoras";
  r.bound = options.pythagoras_tolerance;
  double worst = 0.0;
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    const double e0 = run.levels[l].error, e1 = run.levels[l + 1].error, d = run.levels[l].dist_next;
    const double dev = std::abs((e1 * e1 + d * d) / (e0 * e0) - 1.0);
    ++r.samples;
    if (!(dev <= worst)) {
      worst = dev;
      r.witness = Witness{static_cast<int>(l), -1};
    }
  }
  r.constants = {{"max_deviation", worst}};
  const bool enforced = run.config.solver.mode == SolveMode::Exact && !problem.dirichlet;
  if (!enforced) {
    r.notice = run.config.solver.mode == SolveMode::Exact ? "reported only: Dirichlet data changes between levels"
                                                          : "reported only: inexact solves";
    r.passed = std::isfinite(worst) || std::isnan(worst);
  } else {
    r.passed = worst <= options.pythagoras_tolerance;
  }
  if (r.passed) r.witness.reset();
  return r;
}

CheckResult check_doerfler_optimality(const AdaptiveRun& run, const VerifyOptions& options) {
  if (run.levels.size() < 2 || !has_history(run)) return skipped("doerfler_optimality", "needs two recorded levels");
  CheckResult r;
  r.name = "doerfler_optimality";
  double theta0 = kInf;
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    const auto& e0 = run.element_indicators[l];
    const auto& e1 = run.element_indicators[l + 1];
    const double t0 = std::accumulate(e0.begin(), e0.end(), 0.0);
    const double t1 = std::accumulate(e1.begin(), e1.end(), 0.0);
    if (!(t0 > 0.0) || t1 > options.kappa0 * t0) continue;
    const auto alive = survivors(run.meshes, l, l + 1);
    const double part = sum_over(e0, alive, 0) / t0;
    ++r.samples;
    if (part < theta0) {
      theta0 = part;
      r.witness = Witness{static_cast<int>(l), -1};
    }
  }
  if (r.samples == 0) {
    auto s = skipped("doerfler_optimality", "no level contracted by kappa0");
    s.constants = {{"kappa0", options.kappa0}};
    return s;
  }
  r.constants = {{"theta0", theta0}, {"kappa0", options.kappa0}};
  r.passed = theta0 > 0.0;
  if (r.passed) r.witness.reset();
  return r;
}

namespace {

CheckResult equivalence_from(std::string name, const std::vector<double>& residual, const std::vector<double>& other,
                             double bound) {
  CheckResult r;
  r.name = std::move(name);
  r.bound = bound;
  double worst = 1.0;
  std::size_t degenerate = 0;
  for (std::size_t l = 0; l < residual.size(); ++l) {
    double c = 1.0;
    if (residual[l] == 0.0 && other[l] == 0.0) {
      ++degenerate;
    } else if (residual[l] == 0.0 || other[l] == 0.0) {
      c = kInf;
    } else {
      const double q = other[l] / residual[l];
      c = std::max(q, 1.0 / q);
    }
    ++r.samples;
    if (!(c <= worst)) {
      worst = c;
      r.witness = Witness{static_cast<int>(l), -1};
    }
  }
  r.constants = {{"C_equiv", worst}};
  if (degenerate) r.notice = std::to_string(degenerate) + " level(s) with both estimators zero, ratio taken as 1";
  r.passed = worst <= bound;
  if (r.passed) r.witness.reset();
  return r;
}

}  // namespace

CheckResult check_estimator_equivalence(const AdaptiveRun& run, const ProblemSpec& problem, EstimatorKind other,
                                        const VerifyOptions& options) {
  const std::string name = "equivalence_" + std::string(to_string(other));
  if (other == EstimatorKind::Residual) throw ConfigError("equivalence needs an estimator other than the residual one");
  if (run.config.estimator != EstimatorKind::Residual) throw ConfigError("equivalence needs a residual-estimator run");
  std::vector<double> res, oth;
  for (std::size_t l = 0; l < run.levels.size(); ++l) {
    res.push_back(run.levels[l].eta);
    double v = other == EstimatorKind::Facet ? run.levels[l].eta_facet : run.levels[l].eta_zz;
    if (std::isnan(v)) {
      if (!has_history(run)) return skipped(name, "needs companion estimators or the run history");
      try {
        v = compute_indicators(run.meshes[l], problem, run.solutions[l], other).eta();
      } catch (const MeshError& e) {
        return skipped(name, e.what());
      }
    }
    oth.push_back(v);
  }
  return equivalence_from(name, res, oth, options.equivalence_bound);
}

CheckResult check_estimator_equivalence(const AdaptiveRun& run_residual, const AdaptiveRun& run_other,
                                        const VerifyOptions& options) {
  const auto& a = run_residual;
  const auto& b = run_other;
  if (a.config.estimator != EstimatorKind::Residual) throw ConfigError("first run must use the residual estimator");
  if (a.levels.size() != b.levels.size()) throw MeshError("mesh sequences differ in length");
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    if (a.levels[l].elements != b.levels[l].elements) throw MeshError("mesh sequences differ");
    if (l < a.meshes.size() && l < b.meshes.size()) {
      const auto ta = a.meshes[l].triangles(), tb = b.meshes[l].triangles();
      const auto va = a.meshes[l].vertices(), vb = b.meshes[l].vertices();
      if (!std::equal(ta.begin(), ta.end(), tb.begin(), tb.end(),
                      [](const Triangle& x, const Triangle& y) { return x.v == y.v; }) ||
          !std::equal(va.begin(), va.end(), vb.begin(), vb.end())) {
        throw MeshError("mesh sequences differ");
      }
    }
  }
  return equivalence_from("equivalence_" + std::string(to_string(b.config.estimator)), a.etas(), b.etas(),
                          options.equivalence_bound);
}

CheckResult check_reliability_efficiency(const AdaptiveRun& run, int first_level, double ratio_bound) {
  CheckResult r;
  r.name = "reliability_efficiency";
  r.bound = ratio_bound;
  double lo = kInf, hi = 0.0;
  for (std::size_t l = static_cast<std::size_t>(std::max(0, first_level)); l < run.levels.size(); ++l) {
    const auto& rec = run.levels[l];
    if (std::isnan(rec.error)) return skipped(r.name, "needs a manufactured solution");
    if (!(rec.eta > 0.0)) continue;
    const double q = rec.error / rec.eta;
    ++r.samples;
    if (q < lo) lo = q;
    if (q > hi) {
      hi = q;
      r.witness = Witness{static_cast<int>(l), -1};
    }
  }
  if (r.samples == 0) return skipped(r.name, "no level with a positive estimator");
  r.constants = {{"c", lo}, {"C", hi}, {"C_over_c", hi / lo}};
  r.passed = lo > 0.0 && hi / lo <= ratio_bound;
  if (r.passed) r.witness.reset();
  return r;
}

CheckResult check_inexact_bracket(const AdaptiveRun& run, double c_stab) {
  CheckResult r;
  r.name = "inexact_bracket";
  const double vt = run.config.solver.vartheta;
  r.bound = vt * c_stab;
  double worst = 0.0;  // largest |eta(U)/eta(U~) - 1| / (vartheta C)
  double certified = 0.0;
  bool ok = true;
  for (std::size_t l = 0; l < run.levels.size(); ++l) {
    const auto& rec = run.levels[l];
    if (std::isnan(rec.eta_exact)) continue;
    ++r.samples;
    const bool in = (1.0 - vt * c_stab) * rec.eta <= rec.eta_exact && rec.eta_exact <= (1.0 + vt * c_stab) * rec.eta;
    if (rec.eta > 0.0) {
      worst = std::max(worst, std::abs(rec.eta_exact / rec.eta - 1.0));
      certified = std::max(certified, rec.dist_exact / (vt * rec.eta));
    }
    if (!in && ok) {
      ok = false;
      r.witness = Witness{static_cast<int>(l), -1};
    }
  }
  if (r.samples == 0) return skipped(r.name, "no audited inexact level");
  r.constants = {{"C_stab", c_stab}, {"max_relative_gap", worst}, {"max_dist_over_vartheta_eta", certified}};
  r.passed = ok;
  return r;
}

std::vector<CheckResult> check_run_invariants(const AdaptiveRun& run, const VerifyOptions& options) {
  std::vector<CheckResult> out;
  const auto etas = run.etas();
  const std::size_t L = etas.size();

  if (!run.config.uniform && L >= 3) {
    CheckResult c;
    c.name = "closure_constant";
    c.bound = options.closure_bound;
    const auto cm = closure_constants(run);
    double first = 0.0, final = 0.0;
    for (std::size_t i = 0; i < cm.size(); ++i) {
      double& half = i < cm.size() / 2 ? first : final;
      half = std::max(half, cm[i]);
    }
    c.samples = cm.size();
    c.constants = {{"C_mesh", std::max(first, final)}, {"first_half_max", first}, {"final_half_max", final}};
    c.passed = final <= first && std::max(first, final) <= options.closure_bound;
    if (!c.passed) c.witness = Witness{static_cast<int>(L - 1), -1};
    out.push_back(c);
  } else {
    out.push_back(skipped("closure_constant", run.config.uniform ? "uniform refinement" : "needs three levels"));
  }

  if (L >= 2) {
    const auto env = r_linear_envelope(etas);
    CheckResult c;
    c.name = "r_linear_envelope";
    c.bound = 1.0;
    c.samples = L;
    c.constants = {{"rho", env.rho}, {"C", env.c}};
    c.passed = env.rho < 1.0;
    out.push_back(c);

    const auto s = summability_proxy(etas);
    CheckResult u;
    u.name = "summability";
    u.samples = L;
    u.bound = (1.0 + options.summability_slack) * s.first_half_max;
    const double growth = s.first_half_max > 0.0 ? s.final_half_max / s.first_half_max - 1.0 : 0.0;
    u.constants = {{"sup", s.sup},
                   {"first_half_max", s.first_half_max},
                   {"final_half_max", s.final_half_max},
                   {"growth", growth}};
    u.passed = std::isfinite(s.sup) && s.final_half_max <= u.bound;
    out.push_back(u);

    const auto red = estimator_reduction(run);
    CheckResult e;
    e.name = "estimator_reduction";
    e.bound = 1.0;
    e.samples = L - 1;
    e.constants = {{"q", red.q}, {"C", red.c}};
    e.passed = red.q < 1.0;
    out.push_back(e);

    CheckResult m;
    m.name = "quasi_monotonicity";
    m.samples = L;
    m.bound = kInf;
    m.constants = {{"C_mon", quasi_monotonicity(etas)}};
    m.passed = std::isfinite(m.constants[0].second);
    out.push_back(m);
  }
  return out;
}

std::size_t brute_force_doerfler(std::span<const double> values, double theta) {
  if (values.size() > 20) throw ConfigError("brute force is limited to 20 values");
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0,1]");
  double total = 0.0;
  for (double v : values) total += v;
  if (total == 0.0) return 0;
  const double target = theta * total * (1.0 - 1e-12);
  const std::uint32_t n = static_cast<std::uint32_t>(values.size());
  std::size_t best = n;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size >= best) continue;
    double s = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) s += values[i];
    }
    if (s >= target) best = size;
  }
  return best;
}

VerificationReport run_mesh_axiom_suite(const Mesh& mesh0, const MeshAxiomOptions& options) {
  std::mt19937_64 rng(options.seed);
  ModifiedMeshSizeOptions hopts;
  hopts.k = options.k;
  const ModifiedMeshSize h0 = ModifiedMeshSize::initial(mesh0, hopts);

  std::size_t son_violations = 0, son_checks = 0;
  std::size_t closure_violations = 0;
  double c_mesh = 0.0;
  std::size_t overlay_violations = 0, overlay_checks = 0;
  std::size_t conformity_violations = 0;
  ModifiedMeshSizeCheck hcheck;
  std::size_t hsteps = 0;
  std::optional<Witness> son_w, closure_w, overlay_w, h_w;

  std::vector<Mesh> previous_sequence;
  for (std::size_t s = 0; s < options.sequences; ++s) {
    std::vector<Mesh> seq{mesh0};
    ModifiedMeshSize h = h0;
    double marked_total = 0.0;
    for (std::size_t step = 0; step < options.steps; ++step) {
      const Mesh& cur = seq.back();
      const std::size_t n = cur.num_elements();
      std::uniform_int_distribution<std::size_t> count(1, std::max<std::size_t>(1, n / 4));
      std::vector<ElementId> ids(n);
      std::iota(ids.begin(), ids.end(), 0);
      const std::size_t m = count(rng);
      for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> j(i, n - 1);
        std::swap(ids[i], ids[j(rng)]);
      }
      ElementSet marked(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(marked.begin(), marked.end());
      Mesh fine = refine(cur, marked);
      marked_total += static_cast<double>(m);

      try {
        fine.validate();
      } catch (const MeshError&) {
        ++conformity_violations;
      }

      // Sons: 2..4 per refined element, every marked element refined.
      std::vector<int> sons(n, 0);
      for (std::size_t t = 0; t < fine.num_elements(); ++t) {
        const auto id = static_cast<ElementId>(t);
        if (!fine.is_unrefined_copy(id)) ++sons[fine.parent(id)];
      }
      for (std::size_t t = 0; t < n; ++t) {
        const bool bad = (sons[t] != 0 && (sons[t] < 2 || sons[t] > 4));
        if (bad) {
          ++son_violations;
          if (!son_w) son_w = Witness{static_cast<int>(step), static_cast<long>(t)};
        }
      }
      for (ElementId t : marked) {
        if (sons[t] == 0) {
          ++son_violations;
          if (!son_w) son_w = Witness{static_cast<int>(step), static_cast<long>(t)};
        }
      }
      ++son_checks;
      if (fine.num_elements() > 4 * n) ++son_violations;

      // Modified mesh size.
      ModifiedMeshSize hn = h.update(cur, fine);
      const auto c = check_modified_mesh_size(cur, h, fine, hn);
      hcheck.equivalence += c.equivalence;
      hcheck.contraction += c.contraction;
      hcheck.monotonicity += c.monotonicity;
      if (c.total() && !h_w) h_w = Witness{static_cast<int>(step), static_cast<long>(s)};
      ++hsteps;
      h = std::move(hn);

      seq.push_back(std::move(fine));
      const double grown = static_cast<double>(seq.back().num_elements() - mesh0.num_elements());
      const double cm = grown / marked_total;
      c_mesh = std::max(c_mesh, cm);
      if (cm > options.closure_bound) {
        ++closure_violations;
        if (!closure_w) closure_w = Witness{static_cast<int>(step), static_cast<long>(s)};
      }
    }

    // |T_j \ T_l| <= |T_l| - |T_j| for every pair along the sequence.
    for (std::size_t j = 0; j < seq.size(); ++j) {
      for (std::size_t l = j + 1; l < seq.size(); ++l) {
        const auto alive = survivors(seq, j, l);
        const auto gone = static_cast<long>(std::count(alive.begin(), alive.end(), 0));
        const long grown = static_cast<long>(seq[l].num_elements()) - static_cast<long>(seq[j].num_elements());
        ++son_checks;
        if (gone > grown) {
          ++son_violations;
          if (!son_w) son_w = Witness{static_cast<int>(l), static_cast<long>(s)};
        }
      }
    }

    // Overlay against a random mesh of the previous sequence, and with itself.
    if (!previous_sequence.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, previous_sequence.size() - 1);
      std::uniform_int_distribution<std::size_t> mine(0, seq.size() - 1);
      const Mesh& a = seq[mine(rng)];
      const Mesh& b = previous_sequence[pick(rng)];
      const Mesh o = overlay(a, b);
      ++overlay_checks;
      const auto bound = a.num_elements() + b.num_elements() - mesh0.num_elements();
      bool bad = o.num_elements() > bound || o.num_elements() < std::max(a.num_elements(), b.num_elements());
      try {
        o.validate();
      } catch (const MeshError&) {
        bad = true;
      }
      if (bad) {
        ++overlay_violations;
        if (!overlay_w) overlay_w = Witness{-1, static_cast<long>(s)};
      }
    }
    {
      const Mesh o = overlay(seq.back(), seq.back());
      ++overlay_checks;
      if (o.num_elements() != seq.back().num_elements()) {
        ++overlay_violations;
        if (!overlay_w) overlay_w = Witness{-1, static_cast<long>(s)};
      }
    }
    previous_sequence = std::move(seq);
  }

  VerificationReport rep;
  auto add = [&](std::string name, std::size_t violations, std::size_t samples,
                 std::vector<std::pair<std::string, double>> consts, std::optional<Witness> w) {
    CheckResult c;
    c.name = std::move(name);
    c.samples = samples;
    c.bound = 0.0;
    c.constants = std::move(consts);
    c.constants.emplace_back("violations", static_cast<double>(violations));
    c.passed = violations == 0;
    if (!c.passed) c.witness = w;
    rep.checks.push_back(std::move(c));
  };
  add("conformity", conformity_violations, options.sequences * options.steps, {}, std::nullopt);
  add("son_count", son_violations, son_checks, {}, son_w);
  add("closure", closure_violations, options.sequences * options.steps,
      {{"C_mesh", c_mesh}, {"closure_bound", options.closure_bound}}, closure_w);
  add("overlay", overlay_violations, overlay_checks, {}, overlay_w);
  add("modified_mesh_size", hcheck.total(), hsteps,
      {{"equivalence", static_cast<double>(hcheck.equivalence)},
       {"contraction", static_cast<double>(hcheck.contraction)},
       {"monotonicity", static_cast<double>(hcheck.monotonicity)},
       {"n_max", static_cast<double>(h0.n_max())}},
      h_w);
  return rep;
}

VerificationReport verify_run(const AdaptiveRun& run, const ProblemSpec& problem, const VerifyOptions& options) {
  VerificationReport rep;
  const CheckResult a1 = check_stability_A1(run, problem, options);
  rep.checks.push_back(a1);
  rep.checks.push_back(check_reduction_A2(run, problem));
  rep.checks.push_back(check_discrete_reliability_A4(run, problem, options));
  rep.checks.push_back(check_pythagoras(run, problem, options));
  rep.checks.push_back(check_doerfler_optimality(run, options));
  if (run.config.estimator == EstimatorKind::Residual) {
    rep.checks.push_back(check_estimator_equivalence(run, problem, EstimatorKind::Facet, options));
    rep.checks.push_back(check_estimator_equivalence(run, problem, EstimatorKind::ZZ, options));
  }
  if (problem.has_exact()) rep.checks.push_back(check_reliability_efficiency(run));
  if (run.config.solver.mode == SolveMode::Inexact && run.config.audit_inexact && !a1.skipped) {
    rep.checks.push_back(check_inexact_bracket(run, a1.constant("C_stab")));
  }
  for (auto& c : check_run_invariants(run, options)) rep.checks.push_back(std::move(c));
  return rep;
}

}  // namespace afem
