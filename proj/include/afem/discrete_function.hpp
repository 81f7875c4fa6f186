#pragma once

#include "afem/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>

namespace afem {

/// Nodal values of a P1 function on one mesh.
struct DiscreteFunction {
  std::uint64_t mesh_id = 0;
  Eigen::VectorXd values;

  static DiscreteFunction zeros(const Mesh& mesh) {
    return {mesh.id(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()))};
  }
  bool belongs_to(const Mesh& mesh) const {
    return mesh_id == mesh.id() && values.size() == static_cast<Eigen::Index>(mesh.num_vertices());
  }
  void require(const Mesh& mesh) const;
};

/// Nodal interpolant of a pointwise function.
DiscreteFunction interpolate(const Mesh& mesh, const std::function<double(const Vec2&)>& u);

/// The same function on a one-step refinement.
DiscreteFunction prolongate(const Mesh& fine, const DiscreteFunction& coarse);

/// Text form: `afem-function v1`, mesh id, count, one value per line.
void write_function_text(std::ostream& out, const DiscreteFunction& u);
DiscreteFunction read_function_text(std::istream& in);

/// Binary form: magic "AFEMFN01", u64 mesh id, u64 count, raw doubles.
void write_function_binary(std::ostream& out, const DiscreteFunction& u);
DiscreteFunction read_function_binary(std::istream& in);

}  // namespace afem
