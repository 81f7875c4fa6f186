#include "afem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace afem {

namespace {

std::atomic<std::uint64_t> g_next_mesh_id{1};

std::uint64_t edge_key(VertexId a, VertexId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Local edge i of a triangle joins v[(i+1)%3] and v[(i+2)%3].
std::array<VertexId, 2> local_edge(const Triangle& t, int i) {
  return {t.v[(i + 1) % 3], t.v[(i + 2) % 3]};
}

}  // namespace

Lineage Lineage::child(int which) const {
  if (depth >= kMaxDepth) throw MeshError("bisection depth limit exceeded");
  Lineage c = *this;
  if (which != 0) c.bits[depth / 64] |= (std::uint64_t{1} << (depth % 64));
  ++c.depth;
  return c;
}

Lineage Lineage::ancestor(int at_depth) const {
  Lineage a;
  a.root = root;
  a.depth = static_cast<std::uint16_t>(at_depth);
  for (int w = 0; w < 2; ++w) {
    int lo = w * 64;
    if (at_depth >= lo + 64) {
      a.bits[w] = bits[w];
    } else if (at_depth > lo) {
      a.bits[w] = bits[w] & ((std::uint64_t{1} << (at_depth - lo)) - 1);
    }
  }
  return a;
}

bool Lineage::is_ancestor_of(const Lineage& other) const {
  return root == other.root && depth <= other.depth && other.ancestor(depth) == *this;
}

std::size_t LineageHash::operator()(const Lineage& l) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(l.root) + 1);
  h ^= l.depth + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= l.bits[0] * 0xff51afd7ed558ccdULL + (h << 6) + (h >> 2);
  h ^= l.bits[1] * 0xc4ceb9fe1a85ec53ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

double Edge::length(std::span<const Vec2> vertices) const {
  return (vertices[a] - vertices[b]).norm();
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::span<const ElementId> Mesh::vertex_elements(VertexId v) const {
  const auto begin = vertex_element_offsets_[v];
  const auto end = vertex_element_offsets_[v + 1];
  return {vertex_element_list_.data() + begin, static_cast<std::size_t>(end - begin)};
}

double Mesh::mesh_size(ElementId t) const { return std::sqrt(areas_[t]); }

double Mesh::diameter(ElementId t) const {
  double d = 0.0;
  for (EdgeId e : element_edges_[t]) d = std::max(d, edges_[e].length(vertices_));
  return d;
}

std::vector<double> Mesh::mesh_sizes() const {
  std::vector<double> h(num_elements());
  for (std::size_t t = 0; t < h.size(); ++t) h[t] = std::sqrt(areas_[t]);
  return h;
}

std::array<VertexId, 2> Mesh::vertex_parents(VertexId v) const {
  if (static_cast<std::size_t>(v) < parent_vertex_count_ || vertex_parents_.empty()) return {v, v};
  return vertex_parents_[v - parent_vertex_count_];
}

bool Mesh::is_unrefined_copy(ElementId t) const { return !copied_.empty() && copied_[t] != 0; }

std::optional<BoundaryKind> Mesh::vertex_boundary_kind(VertexId v) const {
  if (vertex_boundary_[v] < 0) return std::nullopt;
  return static_cast<BoundaryKind>(vertex_boundary_[v]);
}

bool Mesh::has_boundary_kind(BoundaryKind kind) const {
  return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.label == kind; });
}

int Mesh::max_boundary_facets_per_element() const {
  int worst = 0;
  for (const auto& ee : element_edges_) {
    int n = 0;
    for (EdgeId e : ee) n += edges_[e].is_boundary() ? 1 : 0;
    worst = std::max(worst, n);
  }
  return worst;
}

std::vector<BoundaryFacet> Mesh::boundary_facets() const {
  std::vector<BoundaryFacet> out;
  for (const auto& e : edges_) {
    if (e.is_boundary()) out.push_back({e.a, e.b, *e.label});
  }
  return out;
}

double Mesh::shape_constant() const {
  double worst = 0.0;
  for (std::size_t t = 0; t < num_elements(); ++t) {
    const double d = diameter(static_cast<ElementId>(t));
    worst = std::max(worst, d * d / areas_[t]);
  }
  return worst;
}

Mesh Mesh::build(Data data) {
  Mesh m;
  m.id_ = g_next_mesh_id.fetch_add(1);
  m.parent_mesh_id_ = data.parent_mesh_id;
  m.initial_ = std::move(data.initial);
  m.vertices_ = std::move(data.vertices);
  m.triangles_ = std::move(data.triangles);
  m.lineage_ = std::move(data.lineage);
  m.parent_ = std::move(data.parent);
  m.copied_ = std::move(data.copied);
  m.parent_vertex_count_ = data.parent_vertex_count;
  m.vertex_parents_ = std::move(data.vertex_parents);

  const std::size_t nt = m.triangles_.size();
  const std::size_t nv = m.vertices_.size();
  if (nt == 0) throw MeshError("mesh has no triangles");
  if (m.lineage_.size() != nt) throw MeshError("lineage size mismatch");

  m.areas_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& v = m.triangles_[t].v;
    for (VertexId id : v) {
      if (id < 0 || static_cast<std::size_t>(id) >= nv) throw MeshError("vertex id out of range");
    }
    if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) throw MeshError("repeated vertex in triangle");
    const double a = signed_area(m.vertices_[v[0]], m.vertices_[v[1]], m.vertices_[v[2]]);
    if (!(a > 0.0)) throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
    m.areas_[t] = a;
  }

  // Edges by sorting (key, element, local index) triples.
  struct Slot {
    std::uint64_t key;
    ElementId t;
    int local;
  };
  std::vector<Slot> slots;
  slots.reserve(3 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = local_edge(m.triangles_[t], i);
      slots.push_back({edge_key(a, b), static_cast<ElementId>(t), i});
    }
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& x, const Slot& y) {
    return x.key != y.key ? x.key < y.key : x.t < y.t;
  });
  m.element_edges_.assign(nt, {kNone, kNone, kNone});
  for (std::size_t i = 0; i < slots.size();) {
    std::size_t j = i;
    while (j < slots.size() && slots[j].key == slots[i].key) ++j;
    if (j - i > 2) throw MeshError("edge shared by more than two triangles");
    Edge e;
    e.a = static_cast<VertexId>(slots[i].key >> 32);
    e.b = static_cast<VertexId>(slots[i].key & 0xffffffffULL);
    e.elements[0] = slots[i].t;
    if (j - i == 2) {
      e.elements[1] = slots[i + 1].t;
      auto [a0, b0] = local_edge(m.triangles_[slots[i].t], slots[i].local);
      auto [a1, b1] = local_edge(m.triangles_[slots[i + 1].t], slots[i + 1].local);
      if (a0 != b1 || b0 != a1) throw MeshError("inconsistent orientation across an interior edge");
    }
    const auto id = static_cast<EdgeId>(m.edges_.size());
    for (std::size_t k = i; k < j; ++k) m.element_edges_[slots[k].t][slots[k].local] = id;
    m.edges_.push_back(e);
    i = j;
  }

  std::unordered_map<std::uint64_t, EdgeId> boundary_lookup;
  for (std::size_t e = 0; e < m.edges_.size(); ++e) {
    if (m.edges_[e].is_boundary()) {
      boundary_lookup.emplace(edge_key(m.edges_[e].a, m.edges_[e].b), static_cast<EdgeId>(e));
    }
  }
  for (const auto& f : data.boundary) {
    auto it = boundary_lookup.find(edge_key(f.a, f.b));
    if (it == boundary_lookup.end()) {
      throw MeshError("boundary label on (" + std::to_string(f.a) + "," + std::to_string(f.b) +
                      ") which is not a boundary facet");
    }
    auto& e = m.edges_[it->second];
    if (e.label && *e.label != f.kind) throw MeshError("conflicting boundary labels");
    e.label = f.kind;
  }
  for (const auto& e : m.edges_) {
    if (e.is_boundary() && !e.label) {
      throw MeshError("unlabeled boundary facet (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
    }
  }

  // Vertex to element adjacency (CSR).
  m.vertex_element_offsets_.assign(nv + 1, 0);
  for (const auto& tri : m.triangles_) {
    for (VertexId v : tri.v) ++m.vertex_element_offsets_[v + 1];
  }
  std::partial_sum(m.vertex_element_offsets_.begin(), m.vertex_element_offsets_.end(),
                   m.vertex_element_offsets_.begin());
  m.vertex_element_list_.resize(3 * nt);
  std::vector<std::int32_t> fill(m.vertex_element_offsets_.begin(), m.vertex_element_offsets_.end() - 1);
  for (std::size_t t = 0; t < nt; ++t) {
    for (VertexId v : m.triangles_[t].v) m.vertex_element_list_[fill[v]++] = static_cast<ElementId>(t);
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (m.vertex_element_offsets_[v + 1] == m.vertex_element_offsets_[v]) {
      throw MeshError("vertex " + std::to_string(v) + " belongs to no triangle");
    }
  }

  m.dirichlet_vertex_.assign(nv, 0);
  m.vertex_boundary_.assign(nv, -1);
  for (const auto& e : m.edges_) {
    if (!e.is_boundary()) continue;
    for (VertexId v : {e.a, e.b}) {
      const auto kind = static_cast<std::int8_t>(*e.label);
      if (*e.label == BoundaryKind::Dirichlet) m.dirichlet_vertex_[v] = 1;
      if (m.vertex_boundary_[v] < 0 || kind < m.vertex_boundary_[v]) m.vertex_boundary_[v] = kind;
    }
  }
  return m;
}

void Mesh::validate() const {
  for (std::size_t t = 0; t < num_elements(); ++t) {
    if (!(areas_[t] > 0.0)) throw MeshError("non-positive area");
  }
  // Hanging nodes show up as a vertex lying strictly inside a boundary edge.
  std::vector<VertexId> bverts;
  std::vector<EdgeId> bedges;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].is_boundary()) {
      bedges.push_back(static_cast<EdgeId>(e));
      bverts.push_back(edges_[e].a);
      bverts.push_back(edges_[e].b);
    }
  }
  std::sort(bverts.begin(), bverts.end());
  bverts.erase(std::unique(bverts.begin(), bverts.end()), bverts.end());
  for (EdgeId e : bedges) {
    const Vec2& p = vertices_[edges_[e].a];
    const Vec2& q = vertices_[edges_[e].b];
    const double len2 = (q - p).squaredNorm();
    for (VertexId v : bverts) {
      if (v == edges_[e].a || v == edges_[e].b) continue;
      const Vec2& x = vertices_[v];
      const double s = (x - p).dot(q - p) / len2;
      if (s <= 1e-12 || s >= 1.0 - 1e-12) continue;
      const double dist = std::abs((q - p).x() * (x - p).y() - (q - p).y() * (x - p).x()) / std::sqrt(len2);
      if (dist <= 1e-12 * std::sqrt(len2)) {
        throw MeshError("hanging node " + std::to_string(v) + " on edge (" + std::to_string(edges_[e].a) +
                        "," + std::to_string(edges_[e].b) + ")");
      }
    }
  }
}

namespace {

Mesh make_initial(std::vector<Vec2> vertices, std::vector<Triangle> tris,
                  const std::vector<BoundaryFacet>& boundary) {
  auto init = std::make_shared<InitialMesh>();
  static std::atomic<std::uint64_t> next_initial{1};
  init->id = next_initial.fetch_add(1);
  init->vertices = vertices;
  init->triangles = tris;
  init->boundary = boundary;
  Mesh::Data d;
  d.initial = init;
  d.vertices = std::move(vertices);
  d.lineage.resize(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) d.lineage[t].root = static_cast<std::int32_t>(t);
  d.triangles = std::move(tris);
  d.boundary = boundary;
  d.parent_vertex_count = d.vertices.size();
  Mesh m = Mesh::build(std::move(d));
  m.validate();
  return m;
}

Triangle oriented(const std::vector<Vec2>& vertices, std::array<VertexId, 3> v) {
  for (VertexId id : v) {
    if (id < 0 || static_cast<std::size_t>(id) >= vertices.size()) throw MeshError("vertex id out of range");
  }
  const double a = signed_area(vertices[v[0]], vertices[v[1]], vertices[v[2]]);
  if (a == 0.0 || !std::isfinite(a)) throw MeshError("degenerate triangle");
  if (a < 0.0) std::swap(v[1], v[2]);
  return {v};
}

Triangle rotate_to_newest(const Triangle& t, int newest) {
  return {{t.v[newest], t.v[(newest + 1) % 3], t.v[(newest + 2) % 3]}};
}

}  // namespace

Mesh new_initial_mesh(std::vector<Vec2> vertices, const std::vector<std::array<VertexId, 3>>& triangles,
                      const std::vector<BoundaryFacet>& boundary) {
  std::vector<Triangle> tris;
  tris.reserve(triangles.size());
  for (const auto& raw : triangles) {
    Triangle t = oriented(vertices, raw);
    int best = 0;
    double best_len = -1.0;
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = local_edge(t, i);
      const double len = (vertices[a] - vertices[b]).squaredNorm();
      // Exact comparison; ties go to the lower opposite vertex id.
      if (len > best_len || (len == best_len && t.v[i] < t.v[best])) {
        best = i;
        best_len = len;
      }
    }
    tris.push_back(rotate_to_newest(t, best));
  }
  return make_initial(std::move(vertices), std::move(tris), boundary);
}

Mesh new_initial_mesh_tagged(std::vector<Vec2> vertices,
                             const std::vector<std::array<VertexId, 3>>& triangles,
                             const std::vector<int>& refinement_edges,
                             const std::vector<BoundaryFacet>& boundary) {
  if (refinement_edges.size() != triangles.size()) throw MeshError("one refinement edge per triangle required");
  std::vector<Triangle> tris;
  tris.reserve(triangles.size());
  for (std::size_t k = 0; k < triangles.size(); ++k) {
    const int r = refinement_edges[k];
    if (r < 0 || r > 2) throw MeshError("refinement edge index must be 0, 1 or 2");
    const auto& raw = triangles[k];
    const VertexId opposite = raw[(r + 2) % 3];
    Triangle t = oriented(vertices, raw);
    const int newest = static_cast<int>(std::find(t.v.begin(), t.v.end(), opposite) - t.v.begin());
    tris.push_back(rotate_to_newest(t, newest));
  }
  return make_initial(std::move(vertices), std::move(tris), boundary);
}

std::vector<BoundaryFacet> label_boundary(std::span<const Vec2> vertices,
                                          const std::vector<std::array<VertexId, 3>>& triangles,
                                          const std::function<BoundaryKind(const Vec2&)>& label) {
  std::unordered_map<std::uint64_t, int> count;
  std::vector<std::uint64_t> order;
  for (const auto& t : triangles) {
    for (int i = 0; i < 3; ++i) {
      const auto key = edge_key(t[i], t[(i + 1) % 3]);
      if (count[key]++ == 0) order.push_back(key);
    }
  }
  std::vector<BoundaryFacet> out;
  for (auto key : order) {
    if (count[key] != 1) continue;
    const auto a = static_cast<VertexId>(key >> 32);
    const auto b = static_cast<VertexId>(key & 0xffffffffULL);
    out.push_back({a, b, label(0.5 * (vertices[a] + vertices[b]))});
  }
  return out;
}

namespace {

// Splits one element given the midpoints of its three edges (kNone if the
// edge is not bisected). The refinement edge must be bisected.
void bisect_element(const Triangle& tri, const Lineage& lin, const std::array<VertexId, 3>& mid,
                    ElementId parent, std::vector<Triangle>& out_tris, std::vector<Lineage>& out_lin,
                    std::vector<ElementId>& out_parent) {
  const VertexId a = tri.v[0], b = tri.v[1], c = tri.v[2];
  const VertexId m = mid[0];
  const Triangle c0{{m, a, b}};
  const Triangle c1{{m, c, a}};
  const Lineage l0 = lin.child(0);
  const Lineage l1 = lin.child(1);
  auto emit = [&](const Triangle& t, const Lineage& l) {
    out_tris.push_back(t);
    out_lin.push_back(l);
    out_parent.push_back(parent);
  };
  // Child 0 has refinement edge (a,b) = parent edge 2, child 1 has (c,a) = parent edge 1.
  if (mid[2] != kNone) {
    const VertexId m2 = mid[2];
    emit({{m2, m, a}}, l0.child(0));
    emit({{m2, b, m}}, l0.child(1));
  } else {
    emit(c0, l0);
  }
  if (mid[1] != kNone) {
    const VertexId m1 = mid[1];
    emit({{m1, m, c}}, l1.child(0));
    emit({{m1, a, m}}, l1.child(1));
  } else {
    emit(c1, l1);
  }
}

Mesh refine_edges(const Mesh& mesh, std::vector<std::uint8_t>& edge_marked) {
  // Closure: an element with any marked edge gets its refinement edge marked.
  std::vector<ElementId> queue;
  for (std::size_t e = 0; e < edge_marked.size(); ++e) {
    if (!edge_marked[e]) continue;
    for (ElementId t : mesh.edges()[e].elements) {
      if (t != kNone) queue.push_back(t);
    }
  }
  while (!queue.empty()) {
    const ElementId t = queue.back();
    queue.pop_back();
    const EdgeId r = mesh.element_edge(t, 0);
    if (edge_marked[r]) continue;
    edge_marked[r] = 1;
    for (ElementId n : mesh.edges()[r].elements) {
      if (n != kNone && n != t) queue.push_back(n);
    }
  }

  std::vector<Vec2> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<std::array<VertexId, 2>> vparents;
  std::vector<VertexId> midpoint(mesh.num_edges(), kNone);
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (!edge_marked[e]) continue;
    const auto& edge = mesh.edges()[e];
    midpoint[e] = static_cast<VertexId>(vertices.size());
    vertices.push_back(0.5 * (vertices[edge.a] + vertices[edge.b]));
    vparents.push_back({edge.a, edge.b});
  }

  Mesh::Data d;
  d.initial = mesh.initial();
  d.parent_mesh_id = mesh.id();
  d.parent_vertex_count = mesh.num_vertices();
  d.triangles.reserve(mesh.num_elements() + 3 * vparents.size());
  for (std::size_t t = 0; t < mesh.num_elements(); ++t) {
    const auto& ee = mesh.element_edges(static_cast<ElementId>(t));
    const std::array<VertexId, 3> mid{midpoint[ee[0]], midpoint[ee[1]], midpoint[ee[2]]};
    if (mid[0] == kNone) {
      d.triangles.push_back(mesh.triangle(static_cast<ElementId>(t)));
      d.lineage.push_back(mesh.lineage()[t]);
      d.parent.push_back(static_cast<ElementId>(t));
      d.copied.push_back(1);
      continue;
    }
    const std::size_t before = d.triangles.size();
    bisect_element(mesh.triangle(static_cast<ElementId>(t)), mesh.lineage()[t], mid, static_cast<ElementId>(t),
                   d.triangles, d.lineage, d.parent);
    d.copied.resize(d.copied.size() + (d.triangles.size() - before), 0);
  }

  for (const auto& e : mesh.edges()) {
    if (!e.is_boundary()) continue;
    const auto id = static_cast<std::size_t>(&e - mesh.edges().data());
    if (midpoint[id] == kNone) {
      d.boundary.push_back({e.a, e.b, *e.label});
    } else {
      d.boundary.push_back({e.a, midpoint[id], *e.label});
      d.boundary.push_back({midpoint[id], e.b, *e.label});
    }
  }
  d.vertices = std::move(vertices);
  d.vertex_parents = std::move(vparents);
  return Mesh::build(std::move(d));
}

}  // namespace

Mesh refine(const Mesh& mesh, const ElementSet& marked) {
  if (mesh.num_elements() == 0) throw MeshError("cannot refine an empty mesh");
  std::vector<std::uint8_t> edge_marked(mesh.num_edges(), 0);
  for (ElementId t : marked) {
    if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_elements()) throw MeshError("marked element out of range");
    edge_marked[mesh.element_edge(t, 0)] = 1;
  }
  return refine_edges(mesh, edge_marked);
}

Mesh uniform_refine(const Mesh& mesh) {
  if (mesh.num_elements() == 0) throw MeshError("cannot refine an empty mesh");
  std::vector<std::uint8_t> edge_marked(mesh.num_edges(), 1);
  return refine_edges(mesh, edge_marked);
}

Mesh overlay(const Mesh& a, const Mesh& b) {
  if (!a.initial() || a.initial() != b.initial()) {
    throw MeshError("overlay requires meshes refined from the same initial mesh");
  }
  const InitialMesh& init = *a.initial();

  std::unordered_set<Lineage, LineageHash> nodes;
  for (const Mesh* m : {&a, &b}) {
    for (const Lineage& l : m->lineage()) {
      for (int d = l.depth; d >= 0; --d) {
        if (!nodes.insert(l.ancestor(d)).second) break;
      }
    }
  }

  std::vector<Vec2> vertices = init.vertices;
  std::vector<std::array<VertexId, 2>> vparents;
  std::unordered_map<std::uint64_t, VertexId> midpoints;
  std::unordered_map<std::uint64_t, BoundaryKind> labels;
  for (const auto& f : init.boundary) labels.emplace(edge_key(f.a, f.b), f.kind);
  auto midpoint_of = [&](VertexId p, VertexId q) {
    const auto key = edge_key(p, q);
    auto [it, inserted] = midpoints.emplace(key, static_cast<VertexId>(vertices.size()));
    if (inserted) {
      vertices.push_back(0.5 * (vertices[p] + vertices[q]));
      vparents.push_back({p, q});
      auto lab = labels.find(key);
      if (lab != labels.end()) {
        const BoundaryKind kind = lab->second;
        labels.emplace(edge_key(p, it->second), kind);
        labels.emplace(edge_key(it->second, q), kind);
      }
    }
    return it->second;
  };

  Mesh::Data d;
  d.initial = a.initial();
  struct Item {
    Lineage lin;
    Triangle tri;
  };
  std::vector<Item> stack;
  for (std::size_t r = 0; r < init.triangles.size(); ++r) {
    Lineage root;
    root.root = static_cast<std::int32_t>(r);
    stack.push_back({root, init.triangles[r]});
    while (!stack.empty()) {
      Item it = stack.back();
      stack.pop_back();
      const Lineage l0 = it.lin.child(0);
      if (!nodes.count(l0)) {
        d.triangles.push_back(it.tri);
        d.lineage.push_back(it.lin);
        continue;
      }
      const auto& v = it.tri.v;
      const VertexId m = midpoint_of(v[1], v[2]);
      stack.push_back({it.lin.child(1), Triangle{{m, v[2], v[0]}}});
      stack.push_back({l0, Triangle{{m, v[0], v[1]}}});
    }
  }

  std::unordered_set<std::uint64_t> present;
  for (const auto& t : d.triangles) {
    for (int i = 0; i < 3; ++i) present.insert(edge_key(t.v[i], t.v[(i + 1) % 3]));
  }
  for (const auto& [key, kind] : labels) {
    if (!present.count(key)) continue;
    d.boundary.push_back({static_cast<VertexId>(key >> 32), static_cast<VertexId>(key & 0xffffffffULL), kind});
  }
  std::sort(d.boundary.begin(), d.boundary.end(),
            [](const BoundaryFacet& x, const BoundaryFacet& y) { return edge_key(x.a, x.b) < edge_key(y.a, y.b); });
  d.parent_vertex_count = init.vertices.size();
  d.vertex_parents = std::move(vparents);
  d.vertices = std::move(vertices);
  return Mesh::build(std::move(d));
}

ElementSet patch(const Mesh& mesh, const ElementSet& seed, int k) {
  if (k < 0) throw MeshError("patch depth must be nonnegative");
  std::vector<std::uint8_t> in(mesh.num_elements(), 0);
  std::vector<ElementId> frontier;
  for (ElementId t : seed) {
    if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_elements()) throw MeshError("seed element out of range");
    if (!in[t]) {
      in[t] = 1;
      frontier.push_back(t);
    }
  }
  std::vector<std::uint8_t> vseen(mesh.num_vertices(), 0);
  for (int level = 0; level < k && !frontier.empty(); ++level) {
    std::vector<ElementId> next;
    for (ElementId t : frontier) {
      for (VertexId v : mesh.triangle(t).v) {
        if (vseen[v]) continue;
        vseen[v] = 1;
        for (ElementId n : mesh.vertex_elements(v)) {
          if (!in[n]) {
            in[n] = 1;
            next.push_back(n);
          }
        }
      }
    }
    frontier = std::move(next);
  }
  ElementSet out;
  for (std::size_t t = 0; t < in.size(); ++t) {
    if (in[t]) out.push_back(static_cast<ElementId>(t));
  }
  return out;
}

ElementSet refined_elements(const Mesh& coarse, const Mesh& fine) {
  if (fine.parent_mesh_id() != coarse.id()) throw MeshError("mesh is not a one-step refinement of the given mesh");
  std::vector<std::uint8_t> hit(coarse.num_elements(), 0);
  for (std::size_t t = 0; t < fine.num_elements(); ++t) {
    if (!fine.is_unrefined_copy(static_cast<ElementId>(t))) hit[fine.parent(static_cast<ElementId>(t))] = 1;
  }
  ElementSet out;
  for (std::size_t t = 0; t < hit.size(); ++t) {
    if (hit[t]) out.push_back(static_cast<ElementId>(t));
  }
  return out;
}

ElementSet new_elements(const Mesh& fine) {
  ElementSet out;
  for (std::size_t t = 0; t < fine.num_elements(); ++t) {
    if (!fine.is_unrefined_copy(static_cast<ElementId>(t))) out.push_back(static_cast<ElementId>(t));
  }
  return out;
}

Eigen::VectorXd prolongate(const Mesh& fine, const Eigen::VectorXd& coarse_values) {
  const auto n0 = static_cast<Eigen::Index>(fine.parent_vertex_count());
  if (coarse_values.size() != n0) throw MeshError("coarse vector does not match the parent mesh");
  Eigen::VectorXd out(static_cast<Eigen::Index>(fine.num_vertices()));
  out.head(n0) = coarse_values;
  for (Eigen::Index v = n0; v < out.size(); ++v) {
    const auto [p, q] = fine.vertex_parents(static_cast<VertexId>(v));
    out[v] = 0.5 * (out[p] + out[q]);
  }
  return out;
}

namespace shapes {

namespace {
std::vector<BoundaryFacet> all_boundary(const std::vector<Vec2>& v, const std::vector<std::array<VertexId, 3>>& t,
                                        BoundaryKind kind) {
  return label_boundary(v, t, [kind](const Vec2&) { return kind; });
}
}  // namespace

Mesh unit_square(BoundaryKind kind) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::array<VertexId, 3>> t{{0, 1, 2}, {0, 2, 3}};
  auto b = all_boundary(v, t, kind);
  return new_initial_mesh(std::move(v), t, b);
}

Mesh unit_square_crisscross(BoundaryKind kind) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  std::vector<std::array<VertexId, 3>> t{{4, 0, 1}, {4, 1, 2}, {4, 2, 3}, {4, 3, 0}};
  auto b = all_boundary(v, t, kind);
  return new_initial_mesh(std::move(v), t, b);
}

Mesh lshape() {
  std::vector<Vec2> v{{-1, -1}, {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  std::vector<std::array<VertexId, 3>> t{{0, 1, 3}, {0, 3, 2}, {2, 3, 6}, {2, 6, 5}, {3, 4, 7}, {3, 7, 6}};
  auto b = all_boundary(v, t, BoundaryKind::Dirichlet);
  return new_initial_mesh(std::move(v), t, b);
}

Mesh lshape_crisscross() {
  std::vector<Vec2> v{{-1, -1}, {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1},
                      {-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}};
  std::vector<std::array<VertexId, 3>> t{
      {8, 0, 1}, {8, 1, 3}, {8, 3, 2}, {8, 2, 0},   // [-1,0]x[-1,0]
      {9, 2, 3}, {9, 3, 6}, {9, 6, 5}, {9, 5, 2},   // [-1,0]x[0,1]
      {10, 3, 4}, {10, 4, 7}, {10, 7, 6}, {10, 6, 3}};  // [0,1]x[0,1]
  auto b = all_boundary(v, t, BoundaryKind::Dirichlet);
  return new_initial_mesh(std::move(v), t, b);
}

Mesh reference_triangle(BoundaryKind kind) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}};
  std::vector<std::array<VertexId, 3>> t{{0, 1, 2}};
  auto b = all_boundary(v, t, kind);
  return new_initial_mesh(std::move(v), t, b);
}

}  // namespace shapes

}  // namespace afem
