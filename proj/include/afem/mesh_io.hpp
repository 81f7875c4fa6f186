#pragma once

#include "afem/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace afem {

/// Reads the `afem-mesh v1` text format and returns a validated initial mesh
/// with the stored refinement edges.
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::filesystem::path& path);

/// Writes the current refinement edges, so reading back gives a mesh with the
/// same triangles and tags (as a new initial mesh).
void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

using CellField = std::pair<std::string, std::vector<double>>;

/// Legacy VTK unstructured grid with per-cell scalar fields and an optional
/// per-vertex field.
void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<CellField>& cell_fields,
               const std::vector<CellField>& point_fields = {});
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<CellField>& cell_fields,
               const std::vector<CellField>& point_fields = {});

}  // namespace afem
