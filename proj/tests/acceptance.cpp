// Acceptance runs: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "afem/mark.hpp"
#include "afem/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

using namespace afem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AdaptiveConfig base(const std::string& problem, std::size_t max_elements) {
  AdaptiveConfig c;
  c.problem = problem;
  c.stop.max_elements = max_elements;
  c.stop.eta_tolerance.reset();
  return c;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Ratio of the other estimator to the residual one, folded to >= 1, worst over levels.
double worst_equivalence(const AdaptiveRun& run) {
  double worst = 1.0;
  for (const auto& r : run.levels) {
    for (double other : {r.eta_facet, r.eta_zz}) {
      if (!(other > 0.0) || !(r.eta > 0.0)) return std::numeric_limits<double>::infinity();
      worst = std::max({worst, other / r.eta, r.eta / other});
    }
  }
  return worst;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  // 1. L-shape rates, adaptive and uniform.
  AdaptiveConfig lcfg = base("lshape_singular", 200000);
  lcfg.companions = true;
  lcfg.keep_history = false;
  const auto t1 = std::chrono::steady_clock::now();
  const AdaptiveRun lshape = run_adaptive(lcfg);
  const double lshape_time = seconds_since(t1);
  const RateFit lfit = fit_rate(lshape, RateQuantity::Estimator);
  AdaptiveConfig ucfg = base("lshape_singular", 200000);
  ucfg.uniform = true;
  ucfg.keep_history = false;
  const AdaptiveRun uniform = run_adaptive(ucfg);
  const RateFit ufit = fit_rate(uniform, RateQuantity::Estimator);
  report(1,
         lfit.slope >= 0.42 && lfit.slope <= 0.58 && ufit.slope >= 0.28 && ufit.slope <= 0.40 && lshape_time <= 60.0,
         "adaptive s=" + fmt("%.4f", lfit.slope) + " (N=" + std::to_string(lshape.levels.back().elements) +
             ", " + fmt("%.1f s", lshape_time) + "), uniform s=" + fmt("%.4f", ufit.slope));

  // 2. Pythagoras on square_sine.
  AdaptiveConfig scfg = base("square_sine", 100000);
  scfg.companions = true;
  scfg.keep_history = false;
  const AdaptiveRun sine = run_adaptive(scfg);
  double pyth = 0.0;
  for (std::size_t l = 0; l + 1 < sine.levels.size(); ++l) {
    const double e0 = sine.levels[l].error, e1 = sine.levels[l + 1].error, d = sine.levels[l].dist_next;
    pyth = std::max(pyth, std::abs(e1 * e1 + d * d - e0 * e0) / (e0 * e0));
  }
  report(2, sine.levels.size() >= 2 && pyth <= 1e-6,
         "max relative deviation " + fmt("%.3e", pyth) + " over " + std::to_string(sine.levels.size() - 1) + " steps");

  // 3. Mesh axioms.
  {
    const auto t3 = std::chrono::steady_clock::now();
    MeshAxiomOptions opt;
    opt.sequences = 100;
    opt.steps = 10;
    const auto rep = run_mesh_axiom_suite(shapes::lshape_crisscross(), opt);
    const double secs = seconds_since(t3);
    double violations = 0.0;
    for (const auto& c : rep.checks) violations += c.constant("violations");
    report(3, rep.passed() && violations == 0.0 && secs <= 10.0,
           fmt("%.0f violations", violations) + " in " + fmt("%.2f s", secs) +
               ", C_mesh=" + fmt("%.3f", rep.find("closure")->constant("C_mesh")));
  }

  // 4. Doerfler minimality.
  {
    std::mt19937_64 rng(20);
    std::uniform_int_distribution<int> len(1, 16);
    std::lognormal_distribution<double> val(0.0, 1.5);
    std::size_t mismatches = 0, bin_excess = 0, cases = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> v(static_cast<std::size_t>(len(rng)));
      for (auto& x : v) x = val(rng);
      for (int t = 1; t <= 9; ++t) {
        const double theta = 0.1 * t;
        const std::size_t g = mark_greedy(v, theta).size();
        const std::size_t b = mark_binning(v, theta).size();
        ++cases;
        if (g != brute_force_doerfler(v, theta)) ++mismatches;
        if (b > 2 * g) ++bin_excess;
        if (g > 0) worst_ratio = std::max(worst_ratio, static_cast<double>(b) / static_cast<double>(g));
      }
    }
    report(4, mismatches == 0 && bin_excess == 0,
           std::to_string(cases) + " cases, " + std::to_string(mismatches) + " greedy mismatches, binning/greedy <= " +
               fmt("%.2f", worst_ratio));
  }

  // 5. Estimator equivalence on the L-shape and square_sine runs.
  {
    const double wl = worst_equivalence(lshape), ws = worst_equivalence(sine);
    report(5, wl <= 10.0 && ws <= 10.0, "worst factor L-shape " + fmt("%.3f", wl) + ", square_sine " + fmt("%.3f", ws));
  }

  // 6. Inexact solver.
  {
    AdaptiveConfig icfg = base("lshape_singular", 200000);
    icfg.solver.mode = SolveMode::Inexact;
    icfg.solver.vartheta = 0.1;
    icfg.audit_inexact = true;
    const AdaptiveRun inexact = run_adaptive(icfg);
    const RateFit ifit = fit_rate(inexact, RateQuantity::Estimator);
    const auto a1 = check_stability_A1(inexact, make_problem("lshape_singular"));
    const double c_stab = a1.constant("C_stab");
    const auto bracket = check_inexact_bracket(inexact, c_stab);
    const double diff = std::abs(ifit.slope - lfit.slope);
    report(6, diff <= 0.05 && !a1.skipped && bracket.passed && bracket.samples == inexact.levels.size(),
           "s_inexact=" + fmt("%.4f", ifit.slope) + " |diff|=" + fmt("%.4f", diff) + ", C_stab=" +
               fmt("%.3f", c_stab) + ", bracket " + (bracket.passed ? "holds" : "violated") + " on " +
               std::to_string(bracket.samples) + " levels");
  }

  // 7. Reliability and efficiency on square_sine.
  {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t l = 2; l < sine.levels.size(); ++l) {
      const double q = sine.levels[l].error / sine.levels[l].eta;
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    report(7, lo > 0.0 && hi / lo <= 20.0,
           "error/eta in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], C/c=" + fmt("%.3f", hi / lo));
  }

  // 8. Nonsymmetric run.
  {
    AdaptiveConfig ccfg = base("lshape_convection", 100000);
    ccfg.keep_history = false;
    const AdaptiveRun conv = run_adaptive(ccfg);
    const auto etas = conv.etas();
    const auto s = summability_proxy(etas);
    const auto env = r_linear_envelope(etas);
    report(8, std::isfinite(s.sup) && s.non_growing && env.rho < 1.0 && all_finite(etas),
           "summability sup=" + fmt("%.3f", s.sup) + " (first half " + fmt("%.3f", s.first_half_max) +
               ", final half " + fmt("%.3f", s.final_half_max) + "), rho=" + fmt("%.4f", env.rho));
  }

  // 9. Nonlinear run.
  {
    AdaptiveConfig ncfg = base("lshape_nonlinear", 50000);
    ncfg.keep_history = false;
    bool converged = true;
    std::string detail;
    try {
      const AdaptiveRun nl = run_adaptive(ncfg);
      int max_picard = 0;
      for (const auto& r : nl.levels) {
        if (r.picard_iters < 1) converged = false;
        max_picard = std::max(max_picard, r.picard_iters);
      }
      const RateFit nfit = fit_rate(nl, RateQuantity::Estimator);
      converged = converged && nfit.slope >= 0.40 && nfit.slope <= 0.60;
      detail = "s=" + fmt("%.4f", nfit.slope) + ", Picard converged on " + std::to_string(nl.levels.size()) +
               " levels (max " + std::to_string(max_picard) + " iterations)";
    } catch (const SolverError& e) {
      converged = false;
      detail = e.what();
    }
    report(9, converged, detail);
  }

  // 10. Theta sweep.
  {
    double lo = 1e9, hi = -1e9;
    std::string detail;
    for (double theta : {0.1, 0.3, 0.5, 0.7}) {
      AdaptiveConfig tcfg = base("lshape_singular", 100000);
      tcfg.theta = theta;
      tcfg.keep_history = false;
      const double s = fit_rate(run_adaptive(tcfg), RateQuantity::Estimator).slope;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      detail += fmt("theta=%.1f", theta) + fmt(" s=%.4f; ", s);
    }
    report(10, hi - lo <= 0.1, detail + "spread " + fmt("%.4f", hi - lo));
  }

  std::printf("total %.1f s, %d failure(s)\n", seconds_since(start), failures);
  return failures == 0 ? 0 : 1;
}
