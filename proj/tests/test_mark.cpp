#include "afem/mark.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace afem;

namespace {

// Smallest subset size reaching theta * total, by exhaustive search.
std::size_t minimal_size(const std::vector<double>& v, double theta) {
  const double target = theta * std::accumulate(v.begin(), v.end(), 0.0);
  std::size_t best = v.size();
  for (std::uint32_t mask = 0; mask < (1u << v.size()); ++mask) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (mask & (1u << i)) {
        s += v[i];
        ++n;
      }
    }
    if (s >= target * (1.0 - 1e-12)) best = std::min(best, n);
  }
  return best;
}

double marked_sum(const std::vector<double>& v, const MarkedSet& m) {
  double s = 0.0;
  for (auto i : m.indices) s += v[i];
  return s;
}

}  // namespace

TEST_SUITE("mark") {

TEST_CASE("small hand examples") {
  const std::vector<double> v{4, 1, 1, 1, 1};
  const auto m = mark_greedy(v, 0.5);
  CHECK(m.indices == std::vector<std::size_t>{0});
  CHECK(m.achieved_fraction == doctest::Approx(0.5));
  CHECK(mark_greedy(v, 1.0).size() == 5);
  CHECK(mark_greedy(std::vector<double>(6, 0.0), 0.5).size() == 0);
  // Ties go to the lower position.
  CHECK(mark_greedy(std::vector<double>{1, 1, 1, 1}, 0.5).indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("greedy marking is minimal on random lists") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 12);
    for (auto& x : v) x = std::pow(dist(rng), 3);
    const double theta = 0.05 + 0.9 * dist(rng);
    const auto m = mark_greedy(v, theta);
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    CHECK(marked_sum(v, m) >= theta * total * (1.0 - 1e-12));
    CHECK(m.size() == minimal_size(v, theta));
    CHECK(std::is_sorted(m.indices.begin(), m.indices.end()));
  }
}

TEST_CASE("binning marking reaches the target with at most twice the minimal size") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 14);
    for (auto& x : v) x = std::exp(8.0 * dist(rng));
    const double theta = 0.05 + 0.95 * dist(rng);
    const auto m = mark_binning(v, theta);
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    CHECK(marked_sum(v, m) >= theta * total * (1.0 - 1e-12));
    CHECK(m.size() <= 2 * minimal_size(v, theta));
    CHECK(m.strategy == MarkingStrategy::Binning);
  }
}

TEST_CASE("binning on large lists") {
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> dist(0.0, 2.0);
  std::vector<double> v(100000);
  for (auto& x : v) x = dist(rng);
  const auto g = mark_greedy(v, 0.3);
  const auto b = mark_binning(v, 0.3);
  CHECK(b.size() >= g.size());
  CHECK(b.size() <= 2 * g.size());
}

TEST_CASE("argument checks") {
  const std::vector<double> v{1, 2};
  CHECK_THROWS_AS(mark_greedy(v, 0.0), ConfigError);
  CHECK_THROWS_AS(mark_greedy(v, 1.1), ConfigError);
  CHECK_THROWS_AS(mark_binning(std::vector<double>{1, -1}, 0.5), ConfigError);
  CHECK_THROWS_AS(mark_greedy(std::vector<double>{1, std::nan("")}, 0.5), ConfigError);
  CHECK_THROWS_AS(marking_strategy_from_string("random"), ConfigError);
  CHECK(marking_strategy_from_string("binning") == MarkingStrategy::Binning);
}

TEST_CASE("facet indices map to both neighbours") {
  const Mesh m = shapes::unit_square_crisscross();
  LocalIndicators ind;
  ind.mesh_id = m.id();
  ind.push(IndexKind::Element, 0, 1.0, 0);
  ind.push(IndexKind::Facet, 7, 5.0, 1, 2);
  ind.push(IndexKind::Element, 3, 0.5, 3);
  const auto marked = mark(ind, 0.5, MarkingStrategy::Greedy);
  CHECK(marked.indices == std::vector<std::size_t>{1});
  CHECK(elements_to_refine(m, marked, ind) == ElementSet{1, 2});
  LocalIndicators other = ind;
  other.mesh_id = m.id() + 1000;
  CHECK_THROWS_AS(elements_to_refine(m, marked, other), MeshError);
}

}  // TEST_SUITE
