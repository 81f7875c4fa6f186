#include "afem/mesh.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

using namespace afem;

namespace {

double total_area(const Mesh& m) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.num_elements(); ++t) a += m.area(static_cast<ElementId>(t));
  return a;
}

ElementSet random_marks(const Mesh& m, std::mt19937_64& rng, double fraction) {
  ElementSet out;
  std::bernoulli_distribution coin(fraction);
  for (std::size_t t = 0; t < m.num_elements(); ++t) {
    if (coin(rng)) out.push_back(static_cast<ElementId>(t));
  }
  if (out.empty()) out.push_back(0);
  return out;
}

std::vector<ElementId> children_count(const Mesh& coarse, const Mesh& fine) {
  std::vector<ElementId> n(coarse.num_elements(), 0);
  for (std::size_t t = 0; t < fine.num_elements(); ++t) ++n[fine.parent(static_cast<ElementId>(t))];
  return n;
}

// Leaves of the union of two closed lineage sets, counted independently of `overlay`.
std::size_t union_leaf_count(const Mesh& a, const Mesh& b) {
  std::unordered_set<Lineage, LineageHash> all;
  for (const Mesh* m : {&a, &b}) {
    for (const auto& l : m->lineage()) {
      for (int d = 0; d <= l.depth; ++d) all.insert(l.ancestor(d));
    }
  }
  std::size_t leaves = 0;
  for (const auto& l : all) {
    if (!all.count(l.child(0))) ++leaves;
  }
  return leaves;
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("standard shapes are valid with the expected areas") {
  struct Case {
    Mesh mesh;
    std::size_t elements;
    double area;
  };
  const Case cases[] = {{shapes::unit_square(), 2, 1.0},
                        {shapes::unit_square_crisscross(), 4, 1.0},
                        {shapes::lshape(), 6, 3.0},
                        {shapes::lshape_crisscross(), 12, 3.0},
                        {shapes::reference_triangle(), 1, 0.5}};
  for (const auto& c : cases) {
    CHECK_NOTHROW(c.mesh.validate());
    CHECK(c.mesh.num_elements() == c.elements);
    CHECK(total_area(c.mesh) == doctest::Approx(c.area).epsilon(1e-14));
    for (std::size_t t = 0; t < c.mesh.num_elements(); ++t) CHECK(c.mesh.area(static_cast<ElementId>(t)) > 0.0);
  }
}

TEST_CASE("initial refinement edge is the longest edge") {
  const Mesh m = shapes::unit_square();
  for (std::size_t t = 0; t < m.num_elements(); ++t) {
    const auto& v = m.triangle(static_cast<ElementId>(t)).v;
    const double ref = (m.vertex(v[1]) - m.vertex(v[2])).norm();
    CHECK(ref == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("bisection of the reference triangle") {
  const Mesh m = shapes::reference_triangle();
  const Mesh f = refine(m, {0});
  CHECK(f.num_elements() == 2);
  CHECK(f.num_vertices() == 4);
  for (ElementId t : {0, 1}) {
    CHECK(f.area(t) == doctest::Approx(0.25));
    // The new vertex is the newest vertex of both children.
    CHECK(f.triangle(t).v[0] == 3);
  }
  const Vec2 mid = 0.5 * (m.vertex(m.triangle(0).v[1]) + m.vertex(m.triangle(0).v[2]));
  CHECK((f.vertex(3) - mid).norm() < 1e-15);
  CHECK_NOTHROW(f.validate());
}

TEST_CASE("marking one triangle of the two-triangle square refines the neighbour by closure") {
  const Mesh m = shapes::unit_square();
  const Mesh f = refine(m, {0});
  CHECK(f.num_elements() == 4);
  CHECK_NOTHROW(f.validate());
  CHECK(refined_elements(m, f) == ElementSet{0, 1});
}

TEST_CASE("criss-cross square: a boundary refinement edge needs no closure") {
  const Mesh m = shapes::unit_square_crisscross();
  const Mesh f = refine(m, {2});
  CHECK(f.num_elements() == 5);
  CHECK(refined_elements(m, f) == ElementSet{2});
  // Marking a child whose refinement edge is interior pulls in the neighbour.
  const Mesh g = refine(f, new_elements(f));
  CHECK_NOTHROW(g.validate());
  CHECK(g.num_elements() > 7);
}

TEST_CASE("uniform refinement halves every edge") {
  for (const Mesh& m : {shapes::unit_square_crisscross(), shapes::lshape_crisscross()}) {
    const Mesh f = uniform_refine(m);
    CHECK(f.num_elements() == 4 * m.num_elements());
    CHECK(f.num_vertices() == m.num_vertices() + m.num_edges());
    for (std::size_t t = 0; t < f.num_elements(); ++t) {
      const auto id = static_cast<ElementId>(t);
      CHECK(f.area(id) == doctest::Approx(m.area(f.parent(id)) / 4.0));
      CHECK(f.generation(id) == 2);
    }
    CHECK_NOTHROW(f.validate());
  }
}

TEST_CASE("random refinements: sons, area, conformity, nestedness") {
  std::mt19937_64 rng(42);
  Mesh m = shapes::lshape_crisscross();
  for (int step = 0; step < 12; ++step) {
    const ElementSet marked = random_marks(m, rng, 0.2);
    const Mesh f = refine(m, marked);
    CHECK_NOTHROW(f.validate());
    const auto sons = children_count(m, f);
    std::vector<double> area(m.num_elements(), 0.0);
    for (std::size_t t = 0; t < f.num_elements(); ++t) {
      const auto id = static_cast<ElementId>(t);
      area[f.parent(id)] += f.area(id);
    }
    for (std::size_t t = 0; t < m.num_elements(); ++t) {
      CHECK(area[t] == doctest::Approx(m.area(static_cast<ElementId>(t))).epsilon(1e-12));
      CHECK(((sons[t] == 1) || (sons[t] >= 2 && sons[t] <= 4)));
    }
    for (ElementId t : marked) CHECK(sons[t] >= 2);
    const auto refined = refined_elements(m, f);
    CHECK(new_elements(f).size() == f.num_elements() - m.num_elements() + refined.size());
    // |T \ T'| <= |T'| - |T|
    CHECK(refined.size() <= f.num_elements() - m.num_elements());
    // Old vertex ids are kept.
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      CHECK(f.vertex(static_cast<VertexId>(v)) == m.vertex(static_cast<VertexId>(v)));
    }
    m = f;
  }
}

TEST_CASE("shape regularity stays bounded under repeated corner refinement") {
  Mesh m = shapes::lshape_crisscross();
  const double c0 = m.shape_constant();
  double worst = c0;
  for (int i = 0; i < 30; ++i) {
    ElementSet marked;
    for (std::size_t t = 0; t < m.num_elements(); ++t) {
      const auto& v = m.triangle(static_cast<ElementId>(t)).v;
      for (VertexId x : v) {
        if (m.vertex(x).norm() < 1e-14) marked.push_back(static_cast<ElementId>(t));
      }
    }
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    m = refine(m, marked);
    worst = std::max(worst, m.shape_constant());
  }
  CHECK_NOTHROW(m.validate());
  // NVB produces finitely many similarity classes; the constant never exceeds twice the initial one here.
  CHECK(worst <= 2.0 * c0);
}

TEST_CASE("lineage navigation") {
  Lineage root{3, 0, {0, 0}};
  const Lineage a = root.child(1).child(0).child(1);
  CHECK(a.depth == 3);
  CHECK(a.ancestor(0) == root);
  CHECK(a.ancestor(2) == root.child(1).child(0));
  CHECK(root.is_ancestor_of(a));
  CHECK(root.child(1).is_ancestor_of(a));
  CHECK_FALSE(root.child(0).is_ancestor_of(a));
  CHECK(a.is_ancestor_of(a));
}

TEST_CASE("overlay") {
  const Mesh m0 = shapes::unit_square();
  SUBCASE("idempotent") {
    const Mesh a = refine(refine(m0, {0}), {1, 2});
    CHECK(overlay(a, a).num_elements() == a.num_elements());
  }
  SUBCASE("with the initial mesh") {
    const Mesh a = refine(m0, {1});
    const Mesh o = overlay(m0, a);
    CHECK(o.num_elements() == a.num_elements());
    std::multiset<std::array<double, 2>> ca, co;
    for (std::size_t t = 0; t < a.num_elements(); ++t) {
      const auto& v = a.triangle(static_cast<ElementId>(t)).v;
      const Vec2 c = (a.vertex(v[0]) + a.vertex(v[1]) + a.vertex(v[2])) / 3.0;
      ca.insert({std::round(c.x() * 1e12), std::round(c.y() * 1e12)});
    }
    for (std::size_t t = 0; t < o.num_elements(); ++t) {
      const auto& v = o.triangle(static_cast<ElementId>(t)).v;
      const Vec2 c = (o.vertex(v[0]) + o.vertex(v[1]) + o.vertex(v[2])) / 3.0;
      co.insert({std::round(c.x() * 1e12), std::round(c.y() * 1e12)});
    }
    CHECK(ca == co);
  }
  SUBCASE("cardinality bound and independent leaf count") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
      Mesh a = shapes::lshape_crisscross(), b = a;
      const std::size_t n0 = a.num_elements();
      for (int s = 0; s < 4; ++s) a = refine(a, random_marks(a, rng, 0.3));
      for (int s = 0; s < 4; ++s) b = refine(b, random_marks(b, rng, 0.3));
      const Mesh o = overlay(a, b);
      CHECK_NOTHROW(o.validate());
      CHECK(o.num_elements() <= a.num_elements() + b.num_elements() - n0);
      CHECK(o.num_elements() == union_leaf_count(a, b));
      CHECK(total_area(o) == doctest::Approx(3.0));
    }
  }
  SUBCASE("two single-element refinements of the square") {
    const Mesh a = refine(m0, {0});
    const Mesh a2 = refine(a, {0});
    const Mesh b2 = refine(a, {3});
    const Mesh o = overlay(a2, b2);
    CHECK(o.num_elements() <= a2.num_elements() + b2.num_elements() - m0.num_elements());
    CHECK(o.num_elements() == union_leaf_count(a2, b2));
  }
}

TEST_CASE("vertex patches") {
  const Mesh m = shapes::unit_square_crisscross();
  CHECK(patch(m, {1}, 0) == ElementSet{1});
  // All four triangles share the centre vertex.
  CHECK(patch(m, {1}, 1) == ElementSet{0, 1, 2, 3});
  const Mesh f = uniform_refine(uniform_refine(m));
  const auto p1 = patch(f, {0}, 1);
  const auto p2 = patch(f, {0}, 2);
  CHECK(std::includes(p2.begin(), p2.end(), p1.begin(), p1.end()));
  CHECK(p2.size() > p1.size());
  for (ElementId t : p1) {
    // Every member of the first patch shares a vertex with element 0.
    const auto& a = f.triangle(0).v;
    const auto& b = f.triangle(t).v;
    bool shares = false;
    for (VertexId x : a) shares = shares || std::find(b.begin(), b.end(), x) != b.end();
    CHECK(shares);
  }
}

TEST_CASE("prolongation reproduces linear functions") {
  const Mesh m = shapes::lshape_crisscross();
  const Mesh f = refine(m, {0, 5, 7});
  auto lin = [](const Vec2& x) { return 0.5 - 2.0 * x.x() + 3.0 * x.y(); };
  Eigen::VectorXd c(static_cast<Eigen::Index>(m.num_vertices()));
  for (std::size_t v = 0; v < m.num_vertices(); ++v) c[static_cast<Eigen::Index>(v)] = lin(m.vertex(static_cast<VertexId>(v)));
  const Eigen::VectorXd p = prolongate(f, c);
  for (std::size_t v = 0; v < f.num_vertices(); ++v) {
    CHECK(p[static_cast<Eigen::Index>(v)] == doctest::Approx(lin(f.vertex(static_cast<VertexId>(v)))).epsilon(1e-14));
  }
}

TEST_CASE("boundary labels follow refinement") {
  const Mesh m = shapes::unit_square_crisscross(BoundaryKind::Neumann);
  const Mesh f = uniform_refine(m);
  std::size_t boundary = 0;
  for (const auto& e : f.edges()) {
    if (!e.is_boundary()) continue;
    ++boundary;
    REQUIRE(e.label.has_value());
    CHECK(*e.label == BoundaryKind::Neumann);
  }
  CHECK(boundary == 8);
  CHECK(f.max_boundary_facets_per_element() == 1);
  CHECK(shapes::unit_square().max_boundary_facets_per_element() == 2);
}

TEST_CASE("invalid initial meshes are rejected") {
  const std::vector<Vec2> v = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const auto bd = [](const std::vector<std::array<VertexId, 3>>& t, std::span<const Vec2> x) {
    return label_boundary(x, t, [](const Vec2&) { return BoundaryKind::Dirichlet; });
  };
  SUBCASE("clockwise triangle") {
    const std::vector<std::array<VertexId, 3>> t = {{0, 2, 1}};
    CHECK_THROWS_AS(new_initial_mesh(v, t, bd({{0, 1, 2}}, v)), MeshError);
  }
  SUBCASE("edge shared by three triangles") {
    const std::vector<Vec2> w = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, -1}};
    const std::vector<std::array<VertexId, 3>> t = {{0, 1, 2}, {1, 3, 2}, {0, 4, 1}, {0, 1, 3}};
    CHECK_THROWS_AS(new_initial_mesh(w, t, {}), MeshError);
  }
  SUBCASE("unlabelled boundary facet") {
    const std::vector<std::array<VertexId, 3>> t = {{0, 1, 3}, {0, 3, 2}};
    auto b = bd(t, v);
    b.pop_back();
    CHECK_THROWS_AS(new_initial_mesh(v, t, b), MeshError);
  }
  SUBCASE("degenerate triangle") {
    const std::vector<Vec2> w = {{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(new_initial_mesh(w, {{0, 1, 2}}, {}), MeshError);
  }
}

}  // TEST_SUITE
