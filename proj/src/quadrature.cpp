#include "afem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace afem {

const std::vector<TriangleQuadPoint>& triangle_rule_degree4() {
  static const std::vector<TriangleQuadPoint> rule = [] {
    constexpr double a = 0.445948490915965;
    constexpr double wa = 0.223381589678011;
    constexpr double b = 0.091576213509771;
    constexpr double wb = 0.109951743655322;
    return std::vector<TriangleQuadPoint>{
        {a, a, wa}, {1 - 2 * a, a, wa}, {a, 1 - 2 * a, wa},
        {b, b, wb}, {1 - 2 * b, b, wb}, {b, 1 - 2 * b, wb},
    };
  }();
  return rule;
}

namespace {

std::vector<LineQuadPoint> compute_gauss_legendre(int n) {
  // Newton iteration on P_n, then map [-1,1] to [0,1].
  std::vector<LineQuadPoint> out(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      if (n == 1) dp = 1.0;
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[n - 1 - i] = {0.5 * (x + 1.0), 0.5 * w};
  }
  return out;
}

std::mutex g_rule_mutex;

}  // namespace

const std::vector<LineQuadPoint>& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss rule needs at least one point");
  static std::map<int, std::vector<LineQuadPoint>> cache;
  std::lock_guard lock(g_rule_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

const std::vector<TriangleQuadPoint>& triangle_rule_collapsed(int n) {
  const auto& g = gauss_legendre(n);
  static std::map<int, std::vector<TriangleQuadPoint>> cache;
  std::lock_guard lock(g_rule_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<TriangleQuadPoint> rule;
  // (u,v) in the unit square -> (u, v(1-u)); Jacobian (1-u), area factor 2.
  for (const auto& pu : g) {
    for (const auto& pv : g) {
      rule.push_back({pu.s, pv.s * (1.0 - pu.s), 2.0 * pu.weight * pv.weight * (1.0 - pu.s)});
    }
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace afem
