#pragma once

#include "afem/discrete_function.hpp"
#include "afem/mesh.hpp"
#include "afem/problem.hpp"

#include <array>
#include <memory>
#include <string_view>
#include <vector>

namespace afem {

enum class EstimatorKind { Residual, Facet, ZZ };
std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view name);

enum class IndexKind : std::uint8_t { Element, Facet };

/// Squared local contributions over an abstract index set. Element indices
/// map to themselves, facet indices to their one or two neighbours.
struct LocalIndicators {
  std::uint64_t mesh_id = 0;
  std::vector<IndexKind> kinds;
  std::vector<std::int32_t> ids;
  std::vector<double> values;
  std::vector<std::array<ElementId, 2>> elements;

  std::size_t size() const { return values.size(); }
  /// Sum in index order.
  double total() const;
  double eta() const;
  void push(IndexKind kind, std::int32_t id, double value, ElementId t0, ElementId t1 = kNone);
};

/// Per-element squared data oscillation and Dirichlet oscillation.
struct OscillationVector {
  std::vector<double> osc;
  std::vector<double> dir;
  /// Neumann and Robin data oscillation, attached to the adjacent element.
  std::vector<double> boundary;
  double total() const;
};

/// Precomputes everything that does not depend on the discrete function, so
/// repeated evaluations (inexact solves) stay cheap.
class Estimator {
 public:
  /// `h` overrides h_T = |T|^{1/2} in the residual weights when given.
  Estimator(const Mesh& mesh, const ProblemSpec& problem, EstimatorKind kind,
            const std::vector<double>* h = nullptr);
  ~Estimator();
  Estimator(Estimator&&) noexcept;
  Estimator& operator=(Estimator&&) noexcept;

  LocalIndicators indicators(const DiscreteFunction& u) const;
  double eta(const DiscreteFunction& u) const;
  EstimatorKind kind() const;

  /// Elementwise residual contributions; needed for reduction and reliability
  /// checks whatever the marking estimator is.
  std::vector<double> element_values(const DiscreteFunction& u) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// h_T^2 ||f + div A grad U - b.grad U - c U||_T^2 + h_T ||[A grad U . n]||^2 on
/// interior facets + Neumann/Robin data residuals + dir_T^2, per element.
LocalIndicators residual_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u);

/// diam(E)^2 ||r - mean r||^2 over the facet patch + diam(E) ||[A grad U . n]||_E^2
/// per interior facet, plus data terms on boundary facets.
LocalIndicators facet_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u);

/// ||(1 - G) grad U||_T^2 per element with G the patch-average recovery, plus
/// the facet oscillation terms of `facet_indicators`.
LocalIndicators zz_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u);

LocalIndicators compute_indicators(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u,
                                   EstimatorKind kind);

/// Best constant approximation of the volume residual on the patch of an
/// interior facet, with the sign convention of Delta U - f (so -mean(f) for
/// the Poisson problem).
double facet_patch_projection(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u, EdgeId e);

/// Nodal values of the recovered gradient.
std::vector<Vec2> recovered_gradient(const Mesh& mesh, const DiscreteFunction& u);

OscillationVector oscillation(const Mesh& mesh, const ProblemSpec& problem, const DiscreteFunction& u);

}  // namespace afem
