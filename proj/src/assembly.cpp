#include "afem/assembly.hpp"

#include "afem/quadrature.hpp"

#include <cmath>

namespace afem {

namespace {

using Triplet = Eigen::Triplet<double>;

constexpr int kLoadRule = 6;     // collapsed Gauss, degree 10
constexpr int kErrorRule = 8;    // collapsed Gauss, degree 14
constexpr int kEdgeRule = 4;     // Gauss on facets, degree 7

std::array<Vec2, 3> corners(const Mesh& mesh, ElementId t) {
  const auto& v = mesh.triangle(t).v;
  return {mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2])};
}

}  // namespace

DiscreteFunction LinearSystem::expand(const Eigen::VectorXd& free_values) const {
  DiscreteFunction u{mesh_id, lifting};
  for (std::size_t i = 0; i < free_nodes.size(); ++i) u.values[free_nodes[i]] = free_values[static_cast<Eigen::Index>(i)];
  return u;
}

Eigen::VectorXd LinearSystem::restrict_to_free(const DiscreteFunction& u) const {
  if (u.values.size() != lifting.size()) throw MeshError("function size does not match the system");
  Eigen::VectorXd x(size());
  for (std::size_t i = 0; i < free_nodes.size(); ++i) x[static_cast<Eigen::Index>(i)] = u.values[free_nodes[i]];
  return x;
}

Eigen::Matrix<double, 2, 3> p1_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  const double two_area = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  if (two_area == 0.0) throw AssemblyError("singular element Jacobian");
  Eigen::Matrix<double, 2, 3> g;
  g.col(0) << p1.y() - p2.y(), p2.x() - p1.x();
  g.col(1) << p2.y() - p0.y(), p0.x() - p2.x();
  g.col(2) << p0.y() - p1.y(), p1.x() - p0.x();
  return g / two_area;
}

Eigen::Matrix<double, 2, 3> p1_gradients(const Mesh& mesh, ElementId t) {
  const auto p = corners(mesh, t);
  return p1_gradients(p[0], p[1], p[2]);
}

Eigen::Matrix3d local_stiffness(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  const auto g = p1_gradients(p0, p1, p2);
  return std::abs(signed_area(p0, p1, p2)) * (g.transpose() * g);
}

Vec2 element_gradient(const Mesh& mesh, const Eigen::VectorXd& values, ElementId t) {
  const auto g = p1_gradients(mesh, t);
  const auto& v = mesh.triangle(t).v;
  return g.col(0) * values[v[0]] + g.col(1) * values[v[1]] + g.col(2) * values[v[2]];
}

Eigen::VectorXd scott_zhang_trace(const Mesh& mesh, const BoundaryField& g_D) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  std::vector<std::uint8_t> done(mesh.num_vertices(), 0);
  const auto& rule = line_rule_3();
  for (const auto& e : mesh.edges()) {
    if (!e.is_boundary() || e.label != BoundaryKind::Dirichlet) continue;
    for (int side = 0; side < 2; ++side) {
      const VertexId z = side == 0 ? e.a : e.b;
      const VertexId w = side == 0 ? e.b : e.a;
      if (done[z]) continue;
      done[z] = 1;
      double value = 0.0;
      for (const auto& q : rule) {
        const Vec2 x = (1.0 - q.s) * mesh.vertex(z) + q.s * mesh.vertex(w);
        const double g = g_D ? g_D(x) : 0.0;
        value += q.weight * g * (4.0 * (1.0 - q.s) - 2.0 * q.s);
      }
      out[z] = value;
    }
  }
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.is_dirichlet_vertex(static_cast<VertexId>(v)) && !done[v]) {
      throw AssemblyError("Dirichlet vertex without adjacent Dirichlet facet");
    }
  }
  return out;
}

LinearSystem assemble(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction* linearization) {
  if (problem.is_nonlinear()) {
    if (!linearization) throw AssemblyError("nonlinear problem needs a linearization point");
    linearization->require(mesh);
  }
  const std::size_t nv = mesh.num_vertices();
  LinearSystem sys;
  sys.mesh_id = mesh.id();
  sys.symmetric = problem.is_symmetric();
  sys.free_index.assign(nv, -1);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!mesh.is_dirichlet_vertex(static_cast<VertexId>(v))) {
      sys.free_index[v] = static_cast<int>(sys.free_nodes.size());
      sys.free_nodes.push_back(static_cast<VertexId>(v));
    }
  }
  sys.lifting = scott_zhang_trace(mesh, problem.dirichlet);
  const auto n = sys.size();
  sys.rhs = Eigen::VectorXd::Zero(n);

  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  auto scatter = [&](const std::array<VertexId, 3>& v, const Eigen::Matrix3d& k, const Eigen::Vector3d& f) {
    for (int i = 0; i < 3; ++i) {
      const int fi = sys.free_index[v[i]];
      if (fi < 0) continue;
      sys.rhs[fi] += f[i];
      for (int j = 0; j < 3; ++j) {
        const int fj = sys.free_index[v[j]];
        if (fj >= 0) {
          triplets.emplace_back(fi, fj, k(i, j));
        } else {
          sys.rhs[fi] -= k(i, j) * sys.lifting[v[j]];
        }
      }
    }
  };

  const auto& rule4 = triangle_rule_degree4();
  const auto& load_rule = triangle_rule_collapsed(kLoadRule);
  for (std::size_t ti = 0; ti < mesh.num_elements(); ++ti) {
    const auto t = static_cast<ElementId>(ti);
    const auto p = corners(mesh, t);
    const double area = mesh.area(t);
    const auto g = p1_gradients(p[0], p[1], p[2]);
    const int region = region_of(mesh, t);

    Eigen::Matrix2d a_mean = Eigen::Matrix2d::Identity();
    if (problem.is_nonlinear()) {
      const Vec2 grad = element_gradient(mesh, linearization->values, t);
      a_mean *= problem.alpha_nl(grad.squaredNorm());
    } else if (problem.diffusion) {
      a_mean.setZero();
      for (const auto& q : rule4) a_mean += q.weight * problem.diffusion(map_to_triangle(p[0], p[1], p[2], q.xi, q.eta), region);
    }
    Eigen::Matrix3d k = area * (g.transpose() * a_mean * g);
    if (problem.convection || problem.reaction) {
      for (const auto& q : rule4) {
        const Vec2 x = map_to_triangle(p[0], p[1], p[2], q.xi, q.eta);
        const Eigen::Vector3d lam(1.0 - q.xi - q.eta, q.xi, q.eta);
        const double c = problem.c(x, region);
        const Eigen::RowVector3d bg = problem.b(x, region).transpose() * g;
        k += area * q.weight * (lam * bg + c * lam * lam.transpose());
      }
    }
    Eigen::Vector3d f = Eigen::Vector3d::Zero();
    if (problem.source) {
      for (const auto& q : load_rule) {
        const Eigen::Vector3d lam(1.0 - q.xi - q.eta, q.xi, q.eta);
        f += area * q.weight * problem.source(map_to_triangle(p[0], p[1], p[2], q.xi, q.eta), region) * lam;
      }
    }
    scatter(mesh.triangle(t).v, k, f);
  }

  // Neumann and Robin facets.
  const auto& erule = gauss_legendre(kEdgeRule);
  for (const auto& e : mesh.edges()) {
    if (!e.is_boundary() || e.label == BoundaryKind::Dirichlet) continue;
    const double len = e.length(mesh.vertices());
    Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
    Eigen::Vector2d f = Eigen::Vector2d::Zero();
    for (const auto& q : erule) {
      const Vec2 x = (1.0 - q.s) * mesh.vertex(e.a) + q.s * mesh.vertex(e.b);
      const Eigen::Vector2d phi(1.0 - q.s, q.s);
      if (e.label == BoundaryKind::Neumann) {
        f += len * q.weight * problem.phi_N(x) * phi;
      } else {
        const double alpha = problem.alpha(x);
        if (!(alpha > 0.0)) throw AssemblyError("Robin coefficient must be positive");
        f += len * q.weight * problem.phi_R(x) * phi;
        k += len * q.weight * alpha * phi * phi.transpose();
      }
    }
    const std::array<VertexId, 2> v{e.a, e.b};
    for (int i = 0; i < 2; ++i) {
      const int fi = sys.free_index[v[i]];
      if (fi < 0) continue;
      sys.rhs[fi] += f[i];
      for (int j = 0; j < 2; ++j) {
        const int fj = sys.free_index[v[j]];
        if (fj >= 0) {
          triplets.emplace_back(fi, fj, k(i, j));
        } else {
          sys.rhs[fi] -= k(i, j) * sys.lifting[v[j]];
        }
      }
    }
  }

  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(sys.matrix.coeff(i, i) > 0.0)) {
      throw AssemblyError("bilinear form is not elliptic: nonpositive diagonal at free node " +
                          std::to_string(sys.free_nodes[i]));
    }
  }
  return sys;
}

SparseMatrix energy_matrix(const Mesh& mesh, const ProblemSpec& problem) {
  const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  const auto& rule4 = triangle_rule_degree4();
  const bool nonlinear = problem.is_nonlinear();
  for (std::size_t ti = 0; ti < mesh.num_elements(); ++ti) {
    const auto t = static_cast<ElementId>(ti);
    const auto p = corners(mesh, t);
    const double area = mesh.area(t);
    const auto g = p1_gradients(p[0], p[1], p[2]);
    const int region = region_of(mesh, t);
    Eigen::Matrix2d a_mean = Eigen::Matrix2d::Identity();
    if (!nonlinear && problem.diffusion) {
      a_mean.setZero();
      for (const auto& q : rule4) a_mean += q.weight * problem.diffusion(map_to_triangle(p[0], p[1], p[2], q.xi, q.eta), region);
    }
    Eigen::Matrix3d k = area * (g.transpose() * a_mean * g);
    if (!nonlinear && problem.reaction) {
      for (const auto& q : rule4) {
        const Eigen::Vector3d lam(1.0 - q.xi - q.eta, q.xi, q.eta);
        k += area * q.weight * problem.c(map_to_triangle(p[0], p[1], p[2], q.xi, q.eta), region) * lam * lam.transpose();
      }
    }
    const auto& v = mesh.triangle(t).v;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) triplets.emplace_back(v[i], v[j], k(i, j));
    }
  }
  if (!nonlinear) {
    const auto& erule = gauss_legendre(kEdgeRule);
    for (const auto& e : mesh.edges()) {
      if (!e.is_boundary() || e.label != BoundaryKind::Robin) continue;
      const double len = e.length(mesh.vertices());
      Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
      for (const auto& q : erule) {
        const Vec2 x = (1.0 - q.s) * mesh.vertex(e.a) + q.s * mesh.vertex(e.b);
        const Eigen::Vector2d phi(1.0 - q.s, q.s);
        k += len * q.weight * problem.alpha(x) * phi * phi.transpose();
      }
      const std::array<VertexId, 2> v{e.a, e.b};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) triplets.emplace_back(v[i], v[j], k(i, j));
      }
    }
  }
  SparseMatrix m(nv, nv);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

double energy_norm(const SparseMatrix& energy, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, v.dot(energy * v)));
}

double energy_norm_error(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& U) {
  if (!problem.has_exact()) throw AssemblyError("problem '" + problem.name + "' has no manufactured solution");
  U.require(mesh);
  const bool nonlinear = problem.is_nonlinear();
  const auto& rule = triangle_rule_collapsed(kErrorRule);
  double sum = 0.0;
  for (std::size_t ti = 0; ti < mesh.num_elements(); ++ti) {
    const auto t = static_cast<ElementId>(ti);
    const auto p = corners(mesh, t);
    const auto& v = mesh.triangle(t).v;
    const double area = mesh.area(t);
    const Vec2 grad_u = element_gradient(mesh, U.values, t);
    const int region = region_of(mesh, t);
    double local = 0.0;
    for (const auto& q : rule) {
      const Vec2 x = map_to_triangle(p[0], p[1], p[2], q.xi, q.eta);
      const Vec2 d = problem.exact_gradient(x) - grad_u;
      double val = nonlinear ? d.squaredNorm() : d.dot(problem.A(x, region) * d);
      if (!nonlinear && problem.reaction) {
        const double uh = (1.0 - q.xi - q.eta) * U.values[v[0]] + q.xi * U.values[v[1]] + q.eta * U.values[v[2]];
        const double diff = problem.exact(x) - uh;
        val += problem.c(x, region) * diff * diff;
      }
      local += q.weight * val;
    }
    sum += area * local;
  }
  if (!nonlinear) {
    const auto& erule = gauss_legendre(kErrorRule);
    for (const auto& e : mesh.edges()) {
      if (!e.is_boundary() || e.label != BoundaryKind::Robin) continue;
      const double len = e.length(mesh.vertices());
      for (const auto& q : erule) {
        const Vec2 x = (1.0 - q.s) * mesh.vertex(e.a) + q.s * mesh.vertex(e.b);
        const double diff = problem.exact(x) - ((1.0 - q.s) * U.values[e.a] + q.s * U.values[e.b]);
        sum += len * q.weight * problem.alpha(x) * diff * diff;
      }
    }
  }
  return std::sqrt(sum);
}

}  // namespace afem
