#include "afem/discrete_function.hpp"

#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>

namespace afem {

void DiscreteFunction::require(const Mesh& mesh) const {
  if (!belongs_to(mesh)) throw MeshError("discrete function is not bound to this mesh");
}

DiscreteFunction interpolate(const Mesh& mesh, const std::function<double(const Vec2&)>& u) {
  DiscreteFunction out = DiscreteFunction::zeros(mesh);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) out.values[static_cast<Eigen::Index>(v)] = u(mesh.vertex(static_cast<VertexId>(v)));
  return out;
}

DiscreteFunction prolongate(const Mesh& fine, const DiscreteFunction& coarse) {
  if (coarse.values.size() != static_cast<Eigen::Index>(fine.parent_vertex_count()) ||
      (fine.parent_mesh_id() != 0 && coarse.mesh_id != fine.parent_mesh_id())) {
    throw MeshError("function does not live on the parent mesh");
  }
  return {fine.id(), prolongate(fine, coarse.values)};
}

void write_function_text(std::ostream& out, const DiscreteFunction& u) {
  out << "afem-function v1\n" << u.mesh_id << '\n' << u.values.size() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < u.values.size(); ++i) out << u.values[i] << '\n';
}

DiscreteFunction read_function_text(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (header != "afem-function v1") throw MeshError("function file: bad header");
  DiscreteFunction u;
  long n = 0;
  if (!(in >> u.mesh_id >> n) || n < 0) throw MeshError("function file: bad size line");
  u.values.resize(n);
  for (long i = 0; i < n; ++i) {
    if (!(in >> u.values[i])) throw MeshError("function file: truncated");
  }
  return u;
}

namespace {
constexpr char kMagic[8] = {'A', 'F', 'E', 'M', 'F', 'N', '0', '1'};
}

void write_function_binary(std::ostream& out, const DiscreteFunction& u) {
  const std::uint64_t n = static_cast<std::uint64_t>(u.values.size());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&u.mesh_id), sizeof u.mesh_id);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(u.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

DiscreteFunction read_function_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw MeshError("function file: bad magic");
  }
  DiscreteFunction u;
  std::uint64_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&u.mesh_id), sizeof u.mesh_id) || !in.read(reinterpret_cast<char*>(&n), sizeof n)) {
    throw MeshError("function file: truncated header");
  }
  u.values.resize(static_cast<Eigen::Index>(n));
  if (!in.read(reinterpret_cast<char*>(u.values.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw MeshError("function file: truncated data");
  }
  return u;
}

}  // namespace afem
