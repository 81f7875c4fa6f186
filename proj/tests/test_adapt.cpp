#include "afem/adapt.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

using namespace afem;

namespace {

AdaptiveConfig small_config(std::size_t max_elements) {
  AdaptiveConfig c;
  c.stop.max_elements = max_elements;
  return c;
}

}  // namespace

TEST_SUITE("adapt") {

TEST_CASE("affine problem stops on the first level") {
  AdaptiveConfig c = small_config(10000);
  c.problem = "affine";
  const auto run = run_adaptive(c);
  REQUIRE(run.levels.size() == 1);
  CHECK(run.stop_reason == "eta below tolerance");
  CHECK(run.levels[0].eta < 1e-8);
  CHECK(run.levels[0].error < 1e-8);
}

TEST_CASE("stop rules") {
  SUBCASE("element cap") {
    const auto run = run_adaptive(small_config(500));
    CHECK(run.stop_reason == "element cap reached");
    CHECK(run.levels.back().elements > 500);
    for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) CHECK(run.levels[l].elements <= 500);
  }
  SUBCASE("level cap") {
    AdaptiveConfig c;
    c.stop.max_elements.reset();
    c.stop.max_levels = 4;
    const auto run = run_adaptive(c);
    CHECK(run.levels.size() == 4);
    CHECK(run.stop_reason == "level cap reached");
  }
  SUBCASE("eta tolerance") {
    AdaptiveConfig c = small_config(1000000);
    c.stop.eta_tolerance = 0.05;
    const auto run = run_adaptive(c);
    CHECK(run.stop_reason == "eta below tolerance");
    CHECK(run.levels.back().eta < 0.05);
    CHECK(run.levels[run.levels.size() - 2].eta >= 0.05);
  }
  SUBCASE("invalid configurations") {
    AdaptiveConfig c;
    c.stop = {};
    c.stop.max_elements.reset();
    c.stop.eta_tolerance.reset();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    AdaptiveConfig d;
    d.theta = 0.0;
    CHECK_THROWS_AS(run_adaptive(d), ConfigError);
    AdaptiveConfig e;
    e.vtk_every = 2;
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }
}

TEST_CASE("uniform mode quadruples the element count") {
  AdaptiveConfig c = small_config(5000);
  c.uniform = true;
  const auto run = run_adaptive(c);
  REQUIRE(run.levels.size() >= 3);
  for (std::size_t l = 1; l < run.levels.size(); ++l) {
    CHECK(run.levels[l].elements == 4 * run.levels[l - 1].elements);
  }
}

TEST_CASE("marking everything bisects every element at least once") {
  AdaptiveConfig c = small_config(5000);
  c.theta = 1.0;
  const auto run = run_adaptive(c);
  for (std::size_t l = 1; l < run.levels.size(); ++l) {
    const double growth = static_cast<double>(run.levels[l].elements) / static_cast<double>(run.levels[l - 1].elements);
    CHECK(growth >= 2.0);
    CHECK(growth <= 4.0);
    CHECK(run.levels[l - 1].marked == run.levels[l - 1].elements);
  }
}

TEST_CASE("history, telemetry fields and determinism") {
  const auto a = run_adaptive(small_config(2000));
  const auto b = run_adaptive(small_config(2000));
  REQUIRE(a.levels.size() == b.levels.size());
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    CHECK(a.levels[l].elements == b.levels[l].elements);
    CHECK(a.levels[l].eta == b.levels[l].eta);
  }
  CHECK(a.meshes.size() == a.levels.size());
  CHECK(a.solutions.size() == a.levels.size());
  CHECK(a.element_indicators.size() == a.levels.size());
  CHECK(a.marked_elements.size() + 1 == a.levels.size());
  CHECK(a.initial_elements == 12);
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    const auto& r = a.levels[l];
    CHECK(r.level == static_cast<int>(l));
    CHECK(r.elements == a.meshes[l].num_elements());
    CHECK(r.vertices == a.meshes[l].num_vertices());
    CHECK(r.dofs < r.vertices);
    CHECK(r.error <= r.eta);
    CHECK(r.hmod_violations == 0);
    if (l + 1 < a.levels.size()) {
      CHECK(std::isfinite(r.dist_next));
      CHECK(r.achieved_fraction >= 0.5 * (1.0 - 1e-12));
      CHECK(r.refined >= r.marked);
    }
  }
  AdaptiveConfig lean = small_config(2000);
  lean.keep_history = false;
  const auto c = run_adaptive(lean);
  CHECK(c.meshes.empty());
  CHECK(c.levels.size() == a.levels.size());
  CHECK(c.levels.back().eta == a.levels.back().eta);
}

TEST_CASE("L-shape estimator sequence matches the stored reference") {
  const auto run = run_adaptive(small_config(3000));
  const std::filesystem::path golden = std::filesystem::path(AFEM_GOLDEN_DIR) / "lshape_eta.txt";
  if (std::getenv("AFEM_UPDATE_GOLDEN")) {
    std::ofstream out(golden);
    out.precision(17);
    for (const auto& r : run.levels) out << r.elements << ' ' << r.eta << '\n';
  }
  std::ifstream in(golden);
  REQUIRE(in.good());
  std::size_t n = 0;
  double eta = 0.0;
  std::size_t l = 0;
  while (in >> n >> eta) {
    REQUIRE(l < run.levels.size());
    CHECK(run.levels[l].elements == n);
    CHECK(run.levels[l].eta == doctest::Approx(eta).epsilon(1e-9));
    ++l;
  }
  CHECK(l == run.levels.size());
  for (std::size_t i = 3; i < run.levels.size(); ++i) CHECK(run.levels[i].eta < run.levels[i - 1].eta);
}

TEST_CASE("inexact runs record the certified bound and the audit") {
  AdaptiveConfig c = small_config(3000);
  c.solver.mode = SolveMode::Inexact;
  c.solver.vartheta = 0.1;
  c.audit_inexact = true;
  const auto run = run_adaptive(c);
  for (const auto& r : run.levels) {
    CHECK(std::isfinite(r.certified_bound));
    CHECK(r.certified_bound <= 0.1 * r.eta * (1.0 + 1e-9));
    CHECK(r.dist_exact <= r.certified_bound);
    CHECK(std::isfinite(r.eta_exact));
    CHECK(r.lambda_min > 0.0);
  }
}

TEST_CASE("companion estimators and VTK snapshots") {
  const auto dir = std::filesystem::temp_directory_path() / "afem_test_vtk";
  std::filesystem::remove_all(dir);
  AdaptiveConfig c = small_config(800);
  c.companions = true;
  c.vtk_every = 2;
  c.vtk_dir = dir;
  const auto run = run_adaptive(c);
  for (const auto& r : run.levels) {
    CHECK(r.eta_residual == doctest::Approx(r.eta));
    CHECK(r.eta_facet > 0.0);
    CHECK(r.eta_zz > 0.0);
  }
  CHECK(std::filesystem::exists(dir / "level_0000.vtk"));
  CHECK(std::filesystem::exists(dir / "level_0002.vtk"));
  CHECK_FALSE(std::filesystem::exists(dir / "level_0001.vtk"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("rate fit on synthetic sequences") {
  std::vector<std::size_t> n;
  for (int l = 0; l < 12; ++l) n.push_back(10u << l);
  SUBCASE("exact power law") {
    std::vector<double> q;
    for (auto x : n) q.push_back(3.0 * std::pow(static_cast<double>(x - 10 + 1), -0.5));
    const auto fit = fit_rate(n, 10, q);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.points == 6);
    CHECK(fit.ci_high - fit.ci_low < 1e-9);
  }
  SUBCASE("noisy power law") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.03);
    std::vector<double> q;
    for (auto x : n) q.push_back(std::pow(static_cast<double>(x - 9), -0.5) * std::exp(noise(rng)));
    const auto fit = fit_rate(n, 10, q);
    CHECK(std::abs(fit.slope - 0.5) < 0.05);
    CHECK(fit.ci_low < fit.slope);
    CHECK(fit.ci_high > fit.slope);
  }
  SUBCASE("constant quantity") {
    const auto fit = fit_rate(n, 10, std::vector<double>(n.size(), 2.0));
    CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("too few levels") {
    CHECK_THROWS_AS(fit_rate(std::vector<std::size_t>{1, 2, 3}, 1, {1.0, 0.5, 0.25}), ConfigError);
  }
}

TEST_CASE("envelope, summability and quasi-monotonicity oracles") {
  std::vector<double> geo;
  for (int l = 0; l < 10; ++l) geo.push_back(std::pow(0.5, l));
  const auto env = r_linear_envelope(geo);
  CHECK(env.rho == doctest::Approx(0.25));
  CHECK(env.c == doctest::Approx(1.0));
  const auto s = summability_proxy(geo);
  double tail = 0.0;
  for (int k = 1; k < 10; ++k) tail += std::pow(0.25, k);
  CHECK(s.sup == doctest::Approx(tail));
  CHECK(s.per_level.back() == 0.0);
  CHECK(s.non_growing);
  CHECK(quasi_monotonicity(geo) == 1.0);
  CHECK(quasi_monotonicity({1.0, 0.5, 0.8, 0.4}) == doctest::Approx(1.6));
  const auto flat = summability_proxy(std::vector<double>(8, 1.0));
  CHECK(flat.sup == doctest::Approx(7.0));
  CHECK(flat.non_growing);
}

TEST_CASE("closure constants and estimator reduction on a real run") {
  const auto run = run_adaptive(small_config(5000));
  const auto cc = closure_constants(run);
  REQUIRE(cc.size() + 1 == run.levels.size());
  for (double c : cc) {
    CHECK(c >= 1.0);
    CHECK(c <= 10.0);
  }
  const auto red = estimator_reduction(run);
  CHECK(red.q < 1.0);
  CHECK(red.c >= 0.0);
}

}  // TEST_SUITE
