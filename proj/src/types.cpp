#include "afem/types.hpp"

namespace afem {

std::string_view to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::Dirichlet: return "dirichlet";
    case BoundaryKind::Neumann: return "neumann";
    case BoundaryKind::Robin: return "robin";
  }
  return "unknown";
}

BoundaryKind boundary_kind_from_string(std::string_view name) {
  if (name == "dirichlet" || name == "D") return BoundaryKind::Dirichlet;
  if (name == "neumann" || name == "N") return BoundaryKind::Neumann;
  if (name == "robin" || name == "R") return BoundaryKind::Robin;
  throw MeshError("unknown boundary label '" + std::string(name) + "'");
}

}  // namespace afem
