#pragma once

#include "afem/discrete_function.hpp"
#include "afem/mesh.hpp"
#include "afem/problem.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

namespace afem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Reduced system on the free (non-Dirichlet) vertices.
struct LinearSystem {
  std::uint64_t mesh_id = 0;
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  std::vector<VertexId> free_nodes;  // free index -> vertex
  std::vector<int> free_index;       // vertex -> free index, -1 on Dirichlet vertices
  Eigen::VectorXd lifting;           // Dirichlet values, zero at free vertices
  bool symmetric = true;

  Eigen::Index size() const { return static_cast<Eigen::Index>(free_nodes.size()); }
  /// Full nodal vector from free values.
  DiscreteFunction expand(const Eigen::VectorXd& free_values) const;
  /// Free values of a nodal vector.
  Eigen::VectorXd restrict_to_free(const DiscreteFunction& u) const;
};

/// Gradients of the three barycentric coordinates, one per column.
Eigen::Matrix<double, 2, 3> p1_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2);
Eigen::Matrix<double, 2, 3> p1_gradients(const Mesh& mesh, ElementId t);

/// Element stiffness for -Laplace.
Eigen::Matrix3d local_stiffness(const Vec2& p0, const Vec2& p1, const Vec2& p2);

/// Gradient of a P1 function on element t.
Vec2 element_gradient(const Mesh& mesh, const Eigen::VectorXd& values, ElementId t);

/// Initial-mesh element the given element descends from.
inline int region_of(const Mesh& mesh, ElementId t) { return mesh.lineage()[t].root; }

/// Assembles the P1 system. Nonlinear problems need `linearization`, whose
/// gradient freezes alpha_nl.
LinearSystem assemble(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction* linearization = nullptr);

/// Scott-Zhang values of g_D at the Dirichlet vertices (zero elsewhere). Each
/// vertex averages over its adjacent Dirichlet facet with the lowest edge id.
Eigen::VectorXd scott_zhang_trace(const Mesh& mesh, const BoundaryField& g_D);

/// Full nodal matrix of the energy inner product: (A grad, grad) + (c, .) plus
/// the Robin mass. Nonlinear problems use the plain H1 seminorm.
SparseMatrix energy_matrix(const Mesh& mesh, const ProblemSpec& problem);

double energy_norm(const SparseMatrix& energy, const Eigen::VectorXd& v);

/// Energy norm of u - U for a problem with a manufactured solution.
double energy_norm_error(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& U);

}  // namespace afem
