#pragma once

#include "afem/types.hpp"

#include <vector>

namespace afem {

/// Point in barycentric-free reference coordinates of the triangle
/// (0,0),(1,0),(0,1); weights sum to 1.
struct TriangleQuadPoint {
  double xi;
  double eta;
  double weight;
};

/// Point on [0,1]; weights sum to 1.
struct LineQuadPoint {
  double s;
  double weight;
};

/// Six-point rule, exact for polynomials of degree 4.
const std::vector<TriangleQuadPoint>& triangle_rule_degree4();

/// Collapsed Gauss rule with n x n points, exact for degree 2n-2.
const std::vector<TriangleQuadPoint>& triangle_rule_collapsed(int n);

/// Gauss-Legendre rule on [0,1] with n points (exact for degree 2n-1).
const std::vector<LineQuadPoint>& gauss_legendre(int n);

/// Three-point Gauss rule on [0,1].
inline const std::vector<LineQuadPoint>& line_rule_3() { return gauss_legendre(3); }

/// Maps a reference point to the triangle (a,b,c).
inline Vec2 map_to_triangle(const Vec2& a, const Vec2& b, const Vec2& c, double xi, double eta) {
  return a + xi * (b - a) + eta * (c - a);
}

}  // namespace afem
