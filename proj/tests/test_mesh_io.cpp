#include "afem/discrete_function.hpp"
#include "afem/mesh_io.hpp"
#include "afem/problem.hpp"

#include <doctest.h>

#include <sstream>

using namespace afem;

TEST_SUITE("mesh_io") {

TEST_CASE("mesh text round trip keeps triangles, tags and labels") {
  const Mesh m = refine(shapes::lshape_crisscross(), {0, 3, 8});
  std::stringstream buf;
  write_mesh(buf, m);
  const Mesh r = read_mesh(buf);
  REQUIRE(r.num_vertices() == m.num_vertices());
  REQUIRE(r.num_elements() == m.num_elements());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    CHECK(r.vertex(static_cast<VertexId>(v)) == m.vertex(static_cast<VertexId>(v)));
  }
  for (std::size_t t = 0; t < m.num_elements(); ++t) {
    CHECK(r.triangle(static_cast<ElementId>(t)).v == m.triangle(static_cast<ElementId>(t)).v);
  }
  CHECK(r.boundary_facets().size() == m.boundary_facets().size());
  // Same refinement edges: refining the copy gives the same geometry.
  const Mesh a = uniform_refine(m), b = uniform_refine(r);
  REQUIRE(a.num_vertices() == b.num_vertices());
  for (std::size_t v = 0; v < a.num_vertices(); ++v) {
    CHECK(a.vertex(static_cast<VertexId>(v)) == b.vertex(static_cast<VertexId>(v)));
  }
}

TEST_CASE("mixed boundary labels survive the round trip") {
  const Mesh m = make_problem("square_mixed").initial_mesh();
  std::stringstream buf;
  write_mesh(buf, m);
  const Mesh r = read_mesh(buf);
  for (auto kind : {BoundaryKind::Dirichlet, BoundaryKind::Neumann, BoundaryKind::Robin}) {
    CHECK(r.has_boundary_kind(kind) == m.has_boundary_kind(kind));
  }
}

TEST_CASE("malformed mesh files are rejected") {
  for (const char* text : {"", "afem-mesh v2\n", "afem-mesh v1\n3\n0 0\n1 0\n", "afem-mesh v1\n3\n0 0 1 0 0 1\n1\n0 1 2 7\n0\n",
                           "afem-mesh v1\n3\n0 0 1 0 0 1\n1\n0 1 2 0\n3\n0 1 D\n1 2 D\n2 0 X\n"}) {
    std::stringstream in(text);
    CHECK_THROWS_AS(read_mesh(in), MeshError);
  }
}

TEST_CASE("hand-written mesh file") {
  std::stringstream in(
      "afem-mesh v1\n4\n0 0\n1 0\n1 1\n0 1\n2\n0 1 2 2\n0 2 3 0\n4\n0 1 D\n1 2 N\n2 3 R\n3 0 D\n");
  const Mesh m = read_mesh(in);
  CHECK(m.num_elements() == 2);
  CHECK(m.has_boundary_kind(BoundaryKind::Robin));
  // Refinement edge index 2 of (0,1,2) is the edge (v2, v0), the diagonal.
  const auto& t = m.triangle(0).v;
  CHECK(((t[1] == 2 && t[2] == 0) || (t[1] == 0 && t[2] == 2)));
}

TEST_CASE("legacy VTK output") {
  const Mesh m = shapes::unit_square_crisscross();
  std::stringstream out;
  write_vtk(out, m, {{"eta", {1, 2, 3, 4}}}, {{"U", std::vector<double>(5, 0.5)}});
  const std::string s = out.str();
  CHECK(s.rfind("# vtk DataFile Version 3.0", 0) == 0);
  CHECK(s.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(s.find("POINTS 5 double") != std::string::npos);
  CHECK(s.find("CELLS 4 16") != std::string::npos);
  CHECK(s.find("CELL_DATA 4") != std::string::npos);
  CHECK(s.find("SCALARS eta double 1") != std::string::npos);
  CHECK(s.find("POINT_DATA 5") != std::string::npos);
  std::stringstream bad;
  CHECK_THROWS_AS(write_vtk(bad, m, {{"eta", {1, 2}}}), MeshError);
}

TEST_CASE("discrete function I/O round trips exactly") {
  const Mesh m = uniform_refine(shapes::lshape_crisscross());
  const DiscreteFunction u = interpolate(m, [](const Vec2& x) { return std::sin(3.0 * x.x()) + x.y() / 7.0; });
  {
    std::stringstream buf;
    write_function_text(buf, u);
    const DiscreteFunction r = read_function_text(buf);
    CHECK(r.mesh_id == u.mesh_id);
    CHECK(r.values == u.values);
  }
  {
    std::stringstream buf;
    write_function_binary(buf, u);
    const DiscreteFunction r = read_function_binary(buf);
    CHECK(r.mesh_id == u.mesh_id);
    CHECK(r.values == u.values);
  }
  std::stringstream junk("not a function");
  CHECK_THROWS(read_function_binary(junk));
  CHECK_THROWS_AS(u.require(shapes::lshape_crisscross()), MeshError);
}

}  // TEST_SUITE
