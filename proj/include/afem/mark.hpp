#pragma once

#include "afem/estimate.hpp"
#include "afem/mesh.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace afem {

enum class MarkingStrategy { Greedy, Binning };
std::string_view to_string(MarkingStrategy s);
MarkingStrategy marking_strategy_from_string(std::string_view name);

/// Selected positions into a LocalIndicators list.
struct MarkedSet {
  std::vector<std::size_t> indices;  // ascending
  double theta = 0.5;
  MarkingStrategy strategy = MarkingStrategy::Greedy;
  double achieved_fraction = 0.0;

  std::size_t size() const { return indices.size(); }
};

/// Smallest set whose sum reaches theta * total; ties go to the lower position.
MarkedSet mark_greedy(std::span<const double> values, double theta);
MarkedSet mark_greedy(const LocalIndicators& ind, double theta);

/// Linear-time marking over power-of-two buckets; at most twice the minimal size.
MarkedSet mark_binning(std::span<const double> values, double theta);
MarkedSet mark_binning(const LocalIndicators& ind, double theta);

MarkedSet mark(const LocalIndicators& ind, double theta, MarkingStrategy strategy);

/// Union of the element sets of the marked indices.
ElementSet elements_to_refine(const Mesh& mesh, const MarkedSet& marked, const LocalIndicators& ind);

}  // namespace afem
