#include "afem/estimate.hpp"

#include "afem/assembly.hpp"
#include "afem/quadrature.hpp"

#include <cmath>

namespace afem {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Residual: return "residual";
    case EstimatorKind::Facet: return "facet";
    case EstimatorKind::ZZ: return "zz";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
  if (name == "residual") return EstimatorKind::Residual;
  if (name == "facet") return EstimatorKind::Facet;
  if (name == "zz") return EstimatorKind::ZZ;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

double LocalIndicators::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double LocalIndicators::eta() const { return std::sqrt(total()); }

void LocalIndicators::push(IndexKind kind, std::int32_t id, double value, ElementId t0, ElementId t1) {
  kinds.push_back(kind);
  ids.push_back(id);
  values.push_back(value);
  elements.push_back({t0, t1});
}

double OscillationVector::total() const {
  double s = 0.0;
  for (std::size_t t = 0; t < osc.size(); ++t) s += osc[t] + dir[t] + boundary[t];
  return s;
}

namespace {

constexpr int kVolumeRule = 4;  // collapsed Gauss, degree 6
constexpr int kEdgeRule = 4;

// Tangential derivative of g along the unit direction `tau` at x.
double tangential_derivative(const BoundaryField& g, const Vec2& x, const Vec2& tau, double step) {
  return (-g(x + 2 * step * tau) + 8 * g(x + step * tau) - 8 * g(x - step * tau) + g(x - 2 * step * tau)) /
         (12.0 * step);
}

// ||(1 - Pi_0) d_t g||_E^2 on the segment (p, q).
double dirichlet_oscillation_edge(const BoundaryField& g, const Vec2& p, const Vec2& q) {
  if (!g) return 0.0;
  const double len = (q - p).norm();
  const Vec2 tau = (q - p) / len;
  const double mean = (g(q) - g(p)) / len;
  double sum = 0.0;
  for (const auto& pt : gauss_legendre(kEdgeRule)) {
    const Vec2 x = (1.0 - pt.s) * p + pt.s * q;
    const double d = tangential_derivative(g, x, tau, 1e-4 * len) - mean;
    sum += pt.weight * d * d;
  }
  return len * sum;
}

// ||phi - mean phi||_E^2.
double data_oscillation_edge(const BoundaryField& phi, const Vec2& p, const Vec2& q) {
  if (!phi) return 0.0;
  const double len = (q - p).norm();
  const auto& rule = gauss_legendre(kEdgeRule);
  double vals[16];
  double mean = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    vals[i] = phi((1.0 - rule[i].s) * p + rule[i].s * q);
    mean += rule[i].weight * vals[i];
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule[i].weight * (vals[i] - mean) * (vals[i] - mean);
  return len * sum;
}

}  // namespace

struct Estimator::Impl {
  const Mesh* mesh = nullptr;
  ProblemSpec problem;
  EstimatorKind kind = EstimatorKind::Residual;
  std::vector<double> h;
  std::vector<Eigen::Matrix<double, 2, 3>> grads;
  bool constant_flux = true;
  bool volume_depends_on_u = false;
  // Per element: mean and centred square integral of the volume residual
  // (valid only when it does not depend on U).
  std::vector<double> vol_mean, vol_spread;
  // Per edge.
  std::vector<Vec2> normal;  // outward for elements[0]
  std::vector<double> length;
  std::vector<double> dir;  // ||(1-Pi_0) d_t g_D||^2 on Dirichlet edges

  void init(const Mesh& m, const ProblemSpec& p, EstimatorKind k, const std::vector<double>* h_override) {
    mesh = &m;
    problem = p;
    kind = k;
    h = h_override ? *h_override : m.mesh_sizes();
    if (h.size() != m.num_elements()) throw MeshError("mesh-size override has the wrong length");
    if (k == EstimatorKind::Facet || k == EstimatorKind::ZZ) {
      if (m.max_boundary_facets_per_element() > 1) {
        throw MeshError("facet-based estimators need at most one boundary facet per element");
      }
    }
    grads.resize(m.num_elements());
    for (std::size_t t = 0; t < m.num_elements(); ++t) grads[t] = p1_gradients(m, static_cast<ElementId>(t));
    constant_flux = !problem.diffusion || problem.is_nonlinear();
    volume_depends_on_u = static_cast<bool>(problem.convection) || static_cast<bool>(problem.reaction) || !constant_flux;

    const auto ne = m.num_edges();
    normal.resize(ne);
    length.resize(ne);
    dir.assign(ne, 0.0);
    for (std::size_t ei = 0; ei < ne; ++ei) {
      const auto& e = m.edges()[ei];
      const Vec2 pa = m.vertex(e.a), pb = m.vertex(e.b);
      length[ei] = (pb - pa).norm();
      Vec2 n(pb.y() - pa.y(), pa.x() - pb.x());
      n /= length[ei];
      const auto& tv = m.triangle(e.elements[0]).v;
      const Vec2 centroid = (m.vertex(tv[0]) + m.vertex(tv[1]) + m.vertex(tv[2])) / 3.0;
      if ((centroid - pa).dot(n) > 0.0) n = -n;
      normal[ei] = n;
      if (e.is_boundary() && e.label == BoundaryKind::Dirichlet) {
        dir[ei] = dirichlet_oscillation_edge(problem.dirichlet, pa, pb);
      }
    }
    if (!volume_depends_on_u) {
      vol_mean.resize(m.num_elements());
      vol_spread.resize(m.num_elements());
      const DiscreteFunction zero = DiscreteFunction::zeros(m);
      for (std::size_t t = 0; t < m.num_elements(); ++t) {
        volume_moments(static_cast<ElementId>(t), zero.values, vol_mean[t], vol_spread[t]);
      }
    }
  }

  Vec2 flux(ElementId t, const Vec2& grad_u, const Vec2& x) const {
    if (problem.is_nonlinear()) return problem.alpha_nl(grad_u.squaredNorm()) * grad_u;
    if (!problem.diffusion) return grad_u;
    return problem.diffusion(x, region_of(*mesh, t)) * grad_u;
  }

  Vec2 element_grad(ElementId t, const Eigen::VectorXd& u) const {
    const auto& v = mesh->triangle(t).v;
    return grads[t].col(0) * u[v[0]] + grads[t].col(1) * u[v[1]] + grads[t].col(2) * u[v[2]];
  }

  // Mean and integral of (r - mean)^2 of the volume residual on element t.
  void volume_moments(ElementId t, const Eigen::VectorXd& u, double& mean, double& spread) const {
    const auto& v = mesh->triangle(t).v;
    const Vec2 p0 = mesh->vertex(v[0]), p1 = mesh->vertex(v[1]), p2 = mesh->vertex(v[2]);
    const int region = region_of(*mesh, t);
    const Vec2 g = element_grad(t, u);
    const auto& rule = triangle_rule_collapsed(kVolumeRule);
    double r[64];
    mean = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 x = map_to_triangle(p0, p1, p2, rule[q].xi, rule[q].eta);
      double val = problem.f(x, region);
      if (problem.convection) val -= problem.b(x, region).dot(g);
      if (problem.reaction) {
        const double uh = (1.0 - rule[q].xi - rule[q].eta) * u[v[0]] + rule[q].xi * u[v[1]] + rule[q].eta * u[v[2]];
        val -= problem.c(x, region) * uh;
      }
      if (!constant_flux) {
        const double step = 1e-6 * std::max(h[t], 1e-12);
        for (int i = 0; i < 2; ++i) {
          Vec2 dx = Vec2::Zero();
          dx[i] = step;
          const Eigen::Matrix2d da = (problem.diffusion(x + dx, region) - problem.diffusion(x - dx, region)) / (2 * step);
          val += da.row(i).dot(g);
        }
      }
      r[q] = val;
      mean += rule[q].weight * val;
    }
    spread = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) spread += rule[q].weight * (r[q] - mean) * (r[q] - mean);
    spread *= mesh->area(t);
  }

  // Integral of the squared conormal jump over an interior edge.
  double jump_squared(EdgeId ei, const Eigen::VectorXd& u) const {
    const auto& e = mesh->edges()[ei];
    const ElementId t0 = e.elements[0], t1 = e.elements[1];
    const Vec2 g0 = element_grad(t0, u), g1 = element_grad(t1, u);
    const Vec2& n = normal[ei];
    if (constant_flux) {
      const Vec2 zero = Vec2::Zero();
      const double j = (flux(t0, g0, zero) - flux(t1, g1, zero)).dot(n);
      return j * j * length[ei];
    }
    double sum = 0.0;
    for (const auto& q : gauss_legendre(kEdgeRule)) {
      const Vec2 x = (1.0 - q.s) * mesh->vertex(e.a) + q.s * mesh->vertex(e.b);
      const double j = (flux(t0, g0, x) - flux(t1, g1, x)).dot(n);
      sum += q.weight * j * j;
    }
    return sum * length[ei];
  }

  // Integral of the squared Neumann/Robin data residual on a boundary edge.
  double boundary_residual_squared(EdgeId ei, const Eigen::VectorXd& u) const {
    const auto& e = mesh->edges()[ei];
    const ElementId t = e.elements[0];
    const Vec2 g = element_grad(t, u);
    double sum = 0.0;
    for (const auto& q : gauss_legendre(kEdgeRule)) {
      const Vec2 x = (1.0 - q.s) * mesh->vertex(e.a) + q.s * mesh->vertex(e.b);
      const double dn = flux(t, g, x).dot(normal[ei]);
      double d = 0.0;
      if (e.label == BoundaryKind::Neumann) {
        d = problem.phi_N(x) - dn;
      } else {
        const double uh = (1.0 - q.s) * u[e.a] + q.s * u[e.b];
        d = problem.phi_R(x) - problem.alpha(x) * uh - dn;
      }
      sum += q.weight * d * d;
    }
    return sum * length[ei];
  }

  void moments(const Eigen::VectorXd& u, std::vector<double>& mean, std::vector<double>& spread) const {
    if (!volume_depends_on_u) {
      mean = vol_mean;
      spread = vol_spread;
      return;
    }
    mean.resize(mesh->num_elements());
    spread.resize(mesh->num_elements());
    for (std::size_t t = 0; t < mesh->num_elements(); ++t) volume_moments(static_cast<ElementId>(t), u, mean[t], spread[t]);
  }

  // ||r - mean_omega r||^2 over the two elements of an interior edge.
  double patch_spread(EdgeId ei, const std::vector<double>& mean, const std::vector<double>& spread) const {
    const auto& e = mesh->edges()[ei];
    const ElementId t0 = e.elements[0], t1 = e.elements[1];
    const double a0 = mesh->area(t0), a1 = mesh->area(t1);
    const double m = (a0 * mean[t0] + a1 * mean[t1]) / (a0 + a1);
    return spread[t0] + spread[t1] + a0 * (mean[t0] - m) * (mean[t0] - m) + a1 * (mean[t1] - m) * (mean[t1] - m);
  }

  std::vector<double> residual_elements(const Eigen::VectorXd& u) const {
    std::vector<double> mean, spread;
    moments(u, mean, spread);
    const auto nt = mesh->num_elements();
    std::vector<double> val(nt);
    for (std::size_t t = 0; t < nt; ++t) val[t] = h[t] * h[t] * (spread[t] + mesh->area(static_cast<ElementId>(t)) * mean[t] * mean[t]);
    for (std::size_t ei = 0; ei < mesh->num_edges(); ++ei) {
      const auto& e = mesh->edges()[ei];
      const auto id = static_cast<EdgeId>(ei);
      if (!e.is_boundary()) {
        const double j = jump_squared(id, u);
        val[e.elements[0]] += h[e.elements[0]] * j;
        val[e.elements[1]] += h[e.elements[1]] * j;
      } else if (e.label == BoundaryKind::Dirichlet) {
        val[e.elements[0]] += h[e.elements[0]] * dir[ei];
      } else {
        val[e.elements[0]] += h[e.elements[0]] * boundary_residual_squared(id, u);
      }
    }
    return val;
  }

  // Data terms on boundary facets shared by the facet and ZZ estimators.
  void push_boundary_facets(LocalIndicators& out, const Eigen::VectorXd& u) const {
    for (std::size_t ei = 0; ei < mesh->num_edges(); ++ei) {
      const auto& e = mesh->edges()[ei];
      if (!e.is_boundary()) continue;
      const auto id = static_cast<EdgeId>(ei);
      if (e.label == BoundaryKind::Dirichlet) {
        if (!problem.dirichlet) continue;
        out.push(IndexKind::Facet, id, length[ei] * dir[ei], e.elements[0]);
      } else {
        out.push(IndexKind::Facet, id, length[ei] * boundary_residual_squared(id, u), e.elements[0]);
      }
    }
  }

  LocalIndicators compute(const DiscreteFunction& fn) const {
    fn.require(*mesh);
    const Eigen::VectorXd& u = fn.values;
    LocalIndicators out;
    out.mesh_id = mesh->id();
    if (kind == EstimatorKind::Residual) {
      const auto val = residual_elements(u);
      out.kinds.assign(val.size(), IndexKind::Element);
      out.ids.resize(val.size());
      out.elements.resize(val.size());
      for (std::size_t t = 0; t < val.size(); ++t) {
        out.ids[t] = static_cast<std::int32_t>(t);
        out.elements[t] = {static_cast<ElementId>(t), kNone};
      }
      out.values = val;
      return out;
    }
    std::vector<double> mean, spread;
    moments(u, mean, spread);
    if (kind == EstimatorKind::ZZ) {
      const auto g = recovered(u);
      for (std::size_t t = 0; t < mesh->num_elements(); ++t) {
        const auto id = static_cast<ElementId>(t);
        const Vec2 gu = element_grad(id, u);
        const auto& v = mesh->triangle(id).v;
        Vec2 d[3];
        for (int i = 0; i < 3; ++i) d[i] = gu - g[v[i]];
        double s = 0.0;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) s += (i == j ? 2.0 : 1.0) * d[i].dot(d[j]);
        }
        out.push(IndexKind::Element, id, mesh->area(id) / 12.0 * s, id);
      }
    }
    for (std::size_t ei = 0; ei < mesh->num_edges(); ++ei) {
      const auto& e = mesh->edges()[ei];
      if (e.is_boundary()) continue;
      const auto id = static_cast<EdgeId>(ei);
      const double diam = length[ei];
      double value = diam * diam * patch_spread(id, mean, spread);
      if (kind == EstimatorKind::Facet) value += diam * jump_squared(id, u);
      out.push(IndexKind::Facet, id, value, e.elements[0], e.elements[1]);
    }
    push_boundary_facets(out, u);
    return out;
  }

  std::vector<Vec2> recovered(const Eigen::VectorXd& u) const {
    std::vector<Vec2> g(mesh->num_vertices(), Vec2::Zero());
    std::vector<double> w(mesh->num_vertices(), 0.0);
    for (std::size_t t = 0; t < mesh->num_elements(); ++t) {
      const auto id = static_cast<ElementId>(t);
      const Vec2 gu = element_grad(id, u);
      const double a = mesh->area(id);
      for (VertexId v : mesh->triangle(id).v) {
        g[v] += a * gu;
        w[v] += a;
      }
    }
    for (std::size_t v = 0; v < g.size(); ++v) g[v] /= w[v];
    return g;
  }
};

Estimator::Estimator(const Mesh& mesh, const ProblemSpec& problem, EstimatorKind kind, const std::vector<double>* h)
    : impl_(std::make_unique<Impl>()) {
  impl_->init(mesh, problem, kind, h);
}
Estimator::~Estimator() = default;
Estimator::Estimator(Estimator&&) noexcept = default;
Estimator& Estimator::operator=(Estimator&&) noexcept = default;

LocalIndicators Estimator::indicators(const DiscreteFunction& u) const { return impl_->compute(u); }
double Estimator::eta(const DiscreteFunction& u) const { return impl_->compute(u).eta(); }
EstimatorKind Estimator::kind() const { return impl_->kind; }

std::vector<double> Estimator::element_values(const DiscreteFunction& u) const {
  u.require(*impl_->mesh);
  return impl_->residual_elements(u.values);
}

LocalIndicators residual_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u) {
  return Estimator(mesh, problem, EstimatorKind::Residual).indicators(u);
}

LocalIndicators facet_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u) {
  return Estimator(mesh, problem, EstimatorKind::Facet).indicators(u);
}

LocalIndicators zz_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u) {
  return Estimator(mesh, problem, EstimatorKind::ZZ).indicators(u);
}

LocalIndicators compute_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u,
                                   EstimatorKind kind) {
  return Estimator(mesh, problem, kind).indicators(u);
}

double facet_patch_projection(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u, EdgeId e) {
  const auto& edge = mesh.edges()[e];
  if (edge.is_boundary()) throw MeshError("facet has no second neighbour");
  Estimator::Impl impl;
  impl.mesh = &mesh;
  impl.problem = problem;
  impl.h = mesh.mesh_sizes();
  impl.grads.resize(mesh.num_elements());
  for (ElementId t : edge.elements) impl.grads[t] = p1_gradients(mesh, t);
  impl.constant_flux = !problem.diffusion || problem.is_nonlinear();
  double m0, s0, m1, s1;
  impl.volume_moments(edge.elements[0], u.values, m0, s0);
  impl.volume_moments(edge.elements[1], u.values, m1, s1);
  const double a0 = mesh.area(edge.elements[0]), a1 = mesh.area(edge.elements[1]);
  return -(a0 * m0 + a1 * m1) / (a0 + a1);
}

std::vector<Vec2> recovered_gradient(const Mesh& mesh, const DiscreteFunction& u) {
  u.require(mesh);
  Estimator::Impl impl;
  impl.mesh = &mesh;
  impl.grads.resize(mesh.num_elements());
  for (std::size_t t = 0; t < mesh.num_elements(); ++t) impl.grads[t] = p1_gradients(mesh, static_cast<ElementId>(t));
  return impl.recovered(u.values);
}

OscillationVector oscillation(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u) {
  u.require(mesh);
  const auto nt = mesh.num_elements();
  OscillationVector out;
  out.osc.assign(nt, 0.0);
  out.dir.assign(nt, 0.0);
  out.boundary.assign(nt, 0.0);
  const auto& rule = triangle_rule_collapsed(kVolumeRule);
  for (std::size_t t = 0; t < nt && problem.source; ++t) {
    const auto id = static_cast<ElementId>(t);
    const auto& v = mesh.triangle(id).v;
    const int region = region_of(mesh, id);
    double f[64];
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      f[q] = problem.f(map_to_triangle(mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2]), rule[q].xi, rule[q].eta), region);
      mean += rule[q].weight * f[q];
    }
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) s += rule[q].weight * (f[q] - mean) * (f[q] - mean);
    out.osc[t] = mesh.area(id) * mesh.area(id) * s;  // h_T^2 |T| * mean square
  }
  for (const auto& e : mesh.edges()) {
    if (!e.is_boundary()) continue;
    const ElementId t = e.elements[0];
    const double h = mesh.mesh_size(t);
    const Vec2 pa = mesh.vertex(e.a), pb = mesh.vertex(e.b);
    if (e.label == BoundaryKind::Dirichlet) {
      out.dir[t] += h * dirichlet_oscillation_edge(problem.dirichlet, pa, pb);
    } else if (e.label == BoundaryKind::Neumann) {
      out.boundary[t] += h * data_oscillation_edge(problem.neumann, pa, pb);
    } else {
      out.boundary[t] += h * data_oscillation_edge(problem.robin, pa, pb);
    }
  }
  return out;
}

}  // namespace afem
