#include "afem/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace afem {

namespace {

template <typename T>
T read_value(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw MeshError(std::string("mesh file: expected ") + what);
  return value;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  std::string header;
  std::getline(in, header);
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();
  if (header != "afem-mesh v1") throw MeshError("mesh file: missing 'afem-mesh v1' header");

  const auto nv = read_value<long>(in, "vertex count");
  if (nv <= 0) throw MeshError("mesh file: vertex count must be positive");
  std::vector<Vec2> vertices(static_cast<std::size_t>(nv));
  for (auto& p : vertices) {
    p.x() = read_value<double>(in, "x coordinate");
    p.y() = read_value<double>(in, "y coordinate");
  }
  const auto nt = read_value<long>(in, "triangle count");
  if (nt <= 0) throw MeshError("mesh file: triangle count must be positive");
  std::vector<std::array<VertexId, 3>> tris(static_cast<std::size_t>(nt));
  std::vector<int> ref(static_cast<std::size_t>(nt));
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (auto& v : tris[t]) v = read_value<VertexId>(in, "vertex id");
    ref[t] = read_value<int>(in, "refinement edge index");
  }
  const auto nb = read_value<long>(in, "boundary facet count");
  if (nb < 0) throw MeshError("mesh file: negative boundary facet count");
  std::vector<BoundaryFacet> boundary;
  boundary.reserve(static_cast<std::size_t>(nb));
  for (long i = 0; i < nb; ++i) {
    const auto a = read_value<VertexId>(in, "facet vertex");
    const auto b = read_value<VertexId>(in, "facet vertex");
    const auto label = read_value<std::string>(in, "facet label");
    boundary.push_back({a, b, boundary_kind_from_string(label)});
  }
  return new_initial_mesh_tagged(std::move(vertices), tris, ref, boundary);
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "afem-mesh v1\n" << mesh.num_vertices() << '\n' << std::setprecision(17);
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  out << mesh.num_elements() << '\n';
  // Stored order keeps v[0] newest, so the refinement edge (v1,v2) has index 1.
  for (const auto& t : mesh.triangles()) out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << " 1\n";
  const auto facets = mesh.boundary_facets();
  out << facets.size() << '\n';
  for (const auto& f : facets) out << f.a << ' ' << f.b << ' ' << to_string(f.kind) << '\n';
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  write_mesh(out, mesh);
}

void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<CellField>& cell_fields,
               const std::vector<CellField>& point_fields) {
  out << "# vtk DataFile Version 3.0\nafem mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n" << std::setprecision(17);
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
  out << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (std::size_t t = 0; t < mesh.num_elements(); ++t) out << "5\n";
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << mesh.num_elements() << '\n';
    for (const auto& [name, values] : cell_fields) {
      if (values.size() != mesh.num_elements()) throw MeshError("cell field '" + name + "' has wrong length");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : values) out << v << '\n';
    }
  }
  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& [name, values] : point_fields) {
      if (values.size() != mesh.num_vertices()) throw MeshError("point field '" + name + "' has wrong length");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : values) out << v << '\n';
    }
  }
}

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<CellField>& cell_fields,
               const std::vector<CellField>& point_fields) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write VTK file " + path.string());
  write_vtk(out, mesh, cell_fields, point_fields);
}

}  // namespace afem
