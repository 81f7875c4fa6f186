#pragma once

#include "afem/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace afem {

/// Position of an element in the bisection forest rooted at the initial mesh.
///
/// Bit i of `bits` records which child was taken at depth i (0 = the child
/// containing the old refinement-edge start, 1 = the other one).
struct Lineage {
  static constexpr int kMaxDepth = 128;

  std::int32_t root = 0;
  std::uint16_t depth = 0;
  std::array<std::uint64_t, 2> bits{0, 0};

  Lineage child(int which) const;
  Lineage ancestor(int at_depth) const;
  bool is_ancestor_of(const Lineage& other) const;
  bool operator==(const Lineage&) const = default;
};

struct LineageHash {
  std::size_t operator()(const Lineage& l) const noexcept;
};

/// Vertex triple of a triangle. v[0] is the newest vertex; the refinement
/// edge is (v[1], v[2]). Orientation is counter-clockwise.
struct Triangle {
  std::array<VertexId, 3> v;
};

struct BoundaryFacet {
  VertexId a;
  VertexId b;
  BoundaryKind kind;
};

/// A mesh edge. `elements[1] == kNone` marks a boundary facet.
struct Edge {
  VertexId a;  // a < b
  VertexId b;
  std::array<ElementId, 2> elements{kNone, kNone};
  std::optional<BoundaryKind> label;

  bool is_boundary() const { return elements[1] == kNone; }
  double length(std::span<const Vec2> vertices) const;
};

/// Coarsest data every descendant mesh refers back to.
struct InitialMesh {
  std::uint64_t id = 0;
  std::vector<Vec2> vertices;
  std::vector<Triangle> triangles;
  std::vector<BoundaryFacet> boundary;
};

/// Element set of one mesh, stored sorted and without duplicates.
using ElementSet = std::vector<ElementId>;

/// Conforming triangulation with newest-vertex-bisection tags.
///
/// Meshes are immutable once built. `refine`, `uniform_refine` and `overlay`
/// return new meshes; vertex ids of the coarser mesh are kept, new vertices
/// are appended.
class Mesh {
 public:
  Mesh() = default;

  std::uint64_t id() const { return id_; }
  std::uint64_t parent_mesh_id() const { return parent_mesh_id_; }
  const std::shared_ptr<const InitialMesh>& initial() const { return initial_; }

  std::span<const Vec2> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Lineage> lineage() const { return lineage_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const Triangle& triangle(ElementId t) const { return triangles_[t]; }
  const Vec2& vertex(VertexId v) const { return vertices_[v]; }

  /// Edge opposite local vertex i of element t.
  EdgeId element_edge(ElementId t, int i) const { return element_edges_[t][i]; }
  const std::array<EdgeId, 3>& element_edges(ElementId t) const { return element_edges_[t]; }
  std::span<const ElementId> vertex_elements(VertexId v) const;

  double area(ElementId t) const { return areas_[t]; }
  /// h_T = |T|^{1/2}.
  double mesh_size(ElementId t) const;
  double diameter(ElementId t) const;
  std::vector<double> mesh_sizes() const;

  /// Bisection depth below the initial element.
  int generation(ElementId t) const { return lineage_[t].depth; }
  /// Index of the element of the parent mesh that contains t (kNone for initial meshes).
  ElementId parent(ElementId t) const { return parent_.empty() ? kNone : parent_[t]; }
  /// Number of vertices the parent mesh had; later vertices are edge midpoints.
  std::size_t parent_vertex_count() const { return parent_vertex_count_; }
  /// Endpoints of the parent edge a new vertex bisects.
  std::array<VertexId, 2> vertex_parents(VertexId v) const;

  /// Element t exists unchanged in the parent mesh.
  bool is_unrefined_copy(ElementId t) const;

  std::optional<BoundaryKind> vertex_boundary_kind(VertexId v) const;
  bool is_dirichlet_vertex(VertexId v) const { return dirichlet_vertex_[v]; }
  bool has_boundary_kind(BoundaryKind kind) const;
  int max_boundary_facets_per_element() const;

  /// Full structural check, including a quadratic-time hanging-node scan of
  /// the boundary. Throws MeshError.
  void validate() const;

  /// max diam(T)^2 / |T|.
  double shape_constant() const;

  /// Raw data for `build`.
  struct Data {
    std::shared_ptr<const InitialMesh> initial;
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<Lineage> lineage;
    std::vector<BoundaryFacet> boundary;
    std::uint64_t parent_mesh_id = 0;
    std::vector<ElementId> parent;
    std::vector<std::uint8_t> copied;
    std::size_t parent_vertex_count = 0;
    std::vector<std::array<VertexId, 2>> vertex_parents;
  };

  /// Builds the connectivity. Used by the refinement routines and the file
  /// reader; regular users go through `new_initial_mesh`.
  static Mesh build(Data data);

  std::vector<BoundaryFacet> boundary_facets() const;

 private:
  std::uint64_t id_ = 0;
  std::uint64_t parent_mesh_id_ = 0;
  std::shared_ptr<const InitialMesh> initial_;
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Lineage> lineage_;
  std::vector<ElementId> parent_;
  std::vector<std::uint8_t> copied_;
  std::size_t parent_vertex_count_ = 0;
  std::vector<std::array<VertexId, 2>> vertex_parents_;

  std::vector<Edge> edges_;
  std::vector<std::array<EdgeId, 3>> element_edges_;
  std::vector<std::int32_t> vertex_element_offsets_;
  std::vector<ElementId> vertex_element_list_;
  std::vector<double> areas_;
  std::vector<std::uint8_t> dirichlet_vertex_;
  std::vector<std::int8_t> vertex_boundary_;
};

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

/// Validated initial mesh. The refinement edge of every triangle is its
/// longest edge; ties go to the edge whose opposite vertex has the lowest id.
Mesh new_initial_mesh(std::vector<Vec2> vertices, const std::vector<std::array<VertexId, 3>>& triangles,
                      const std::vector<BoundaryFacet>& boundary);

/// Same, with the refinement edge given per triangle as the local index r of
/// edge (v[r], v[(r+1)%3]).
Mesh new_initial_mesh_tagged(std::vector<Vec2> vertices,
                             const std::vector<std::array<VertexId, 3>>& triangles,
                             const std::vector<int>& refinement_edges,
                             const std::vector<BoundaryFacet>& boundary);

/// Labels every boundary facet of a triangle list through a callback on the
/// facet midpoint.
std::vector<BoundaryFacet> label_boundary(std::span<const Vec2> vertices,
                                          const std::vector<std::array<VertexId, 3>>& triangles,
                                          const std::function<BoundaryKind(const Vec2&)>& label);

/// Bisects every marked element at least once and closes the mesh.
Mesh refine(const Mesh& mesh, const ElementSet& marked);

/// Three bisections per element, so every edge is halved.
Mesh uniform_refine(const Mesh& mesh);

/// Coarsest common refinement of two descendants of the same initial mesh.
Mesh overlay(const Mesh& a, const Mesh& b);

/// k-th vertex patch of a seed set.
ElementSet patch(const Mesh& mesh, const ElementSet& seed, int k);

/// Elements of `coarse` that were bisected on the way to `fine`, where `fine`
/// is a one-step refinement of `coarse`.
ElementSet refined_elements(const Mesh& coarse, const Mesh& fine);

/// Elements of `fine` that do not exist in its parent mesh.
ElementSet new_elements(const Mesh& fine);

/// Nodal values of a coarse P1 function on the one-step refinement `fine`.
Eigen::VectorXd prolongate(const Mesh& fine, const Eigen::VectorXd& coarse_values);

/// Standard test geometries.
namespace shapes {
/// Unit square split along the diagonal from (0,0) to (1,1).
Mesh unit_square(BoundaryKind kind = BoundaryKind::Dirichlet);
/// Unit square with a centre vertex, four triangles.
Mesh unit_square_crisscross(BoundaryKind kind = BoundaryKind::Dirichlet);
/// (-1,1)^2 minus [0,1)x(-1,0], six triangles.
Mesh lshape();
/// L-shape built from three criss-cross squares, twelve triangles.
Mesh lshape_crisscross();
/// The reference triangle (0,0),(1,0),(0,1).
Mesh reference_triangle(BoundaryKind kind = BoundaryKind::Dirichlet);
}  // namespace shapes

}  // namespace afem
