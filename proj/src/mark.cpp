#include "afem/mark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace afem {

std::string_view to_string(MarkingStrategy s) { return s == MarkingStrategy::Greedy ? "greedy" : "binning"; }

MarkingStrategy marking_strategy_from_string(std::string_view name) {
  if (name == "greedy") return MarkingStrategy::Greedy;
  if (name == "binning") return MarkingStrategy::Binning;
  throw ConfigError("unknown marking strategy '" + std::string(name) + "'");
}

namespace {

void check_theta(double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0,1]");
}

double sum_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) throw ConfigError("indicator values must be finite and nonnegative");
    s += v;
  }
  return s;
}

// Dorfler target with a relative slack of 1e-12 against summation-order rounding.
double target_of(double theta, double total) { return theta * total * (1.0 - 1e-12); }

MarkedSet finish(std::vector<std::size_t> idx, std::span<const double> values, double theta, MarkingStrategy s,
                 double total) {
  std::sort(idx.begin(), idx.end());
  MarkedSet m;
  m.theta = theta;
  m.strategy = s;
  double part = 0.0;
  for (auto i : idx) part += values[i];
  m.achieved_fraction = total > 0.0 ? part / total : 0.0;
  m.indices = std::move(idx);
  return m;
}

MarkedSet all_positive(std::span<const double> values, double theta, MarkingStrategy s, double total) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0) idx.push_back(i);
  }
  return finish(std::move(idx), values, theta, s, total);
}

}  // namespace

MarkedSet mark_greedy(std::span<const double> values, double theta) {
  check_theta(theta);
  const double total = sum_of(values);
  if (total == 0.0) return finish({}, values, theta, MarkingStrategy::Greedy, 0.0);
  if (theta == 1.0) return all_positive(values, theta, MarkingStrategy::Greedy, total);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  const double target = target_of(theta, total);
  std::vector<std::size_t> idx;
  double sum = 0.0;
  for (std::size_t i : order) {
    if (sum >= target) break;
    idx.push_back(i);
    sum += values[i];
  }
  return finish(std::move(idx), values, theta, MarkingStrategy::Greedy, total);
}

MarkedSet mark_binning(std::span<const double> values, double theta) {
  check_theta(theta);
  const double total = sum_of(values);
  if (total == 0.0) return finish({}, values, theta, MarkingStrategy::Binning, 0.0);
  if (theta == 1.0) return all_positive(values, theta, MarkingStrategy::Binning, total);

  // Bucket b holds values in [2^(e-1), 2^e) with e = b - kOffset.
  constexpr int kOffset = 1100;
  constexpr int kBuckets = 2200;
  std::vector<double> bucket_sum(kBuckets, 0.0);
  std::vector<int> bucket_of(values.size(), -1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= 0.0) continue;
    int e = 0;
    std::frexp(values[i], &e);
    const int b = std::clamp(e + kOffset, 0, kBuckets - 1);
    bucket_of[i] = b;
    bucket_sum[b] += values[i];
  }
  const double target = target_of(theta, total);
  double sum = 0.0;
  int last = kBuckets;
  for (int b = kBuckets - 1; b >= 0; --b) {
    if (bucket_sum[b] == 0.0) continue;
    last = b;
    if (sum + bucket_sum[b] >= target) break;
    sum += bucket_sum[b];
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (bucket_of[i] > last) idx.push_back(i);
  }
  // The last bucket is filled in index order, only as far as needed.
  for (std::size_t i = 0; i < values.size() && sum < target; ++i) {
    if (bucket_of[i] == last) {
      idx.push_back(i);
      sum += values[i];
    }
  }
  return finish(std::move(idx), values, theta, MarkingStrategy::Binning, total);
}

MarkedSet mark_greedy(const LocalIndicators& ind, double theta) { return mark_greedy(std::span<const double>(ind.values), theta); }
MarkedSet mark_binning(const LocalIndicators& ind, double theta) { return mark_binning(std::span<const double>(ind.values), theta); }

MarkedSet mark(const LocalIndicators& ind, double theta, MarkingStrategy strategy) {
  return strategy == MarkingStrategy::Greedy ? mark_greedy(ind, theta) : mark_binning(ind, theta);
}

ElementSet elements_to_refine(const Mesh& mesh, const MarkedSet& marked, const LocalIndicators& ind) {
  if (ind.mesh_id != 0 && ind.mesh_id != mesh.id()) throw MeshError("indicators belong to another mesh");
  std::vector<std::uint8_t> hit(mesh.num_elements(), 0);
  for (std::size_t i : marked.indices) {
    if (i >= ind.size()) throw MeshError("marked index " + std::to_string(i) + " is out of range");
    for (ElementId t : ind.elements[i]) {
      if (t == kNone) continue;
      if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_elements()) throw MeshError("dangling element id");
      hit[t] = 1;
    }
  }
  ElementSet out;
  for (std::size_t t = 0; t < hit.size(); ++t) {
    if (hit[t]) out.push_back(static_cast<ElementId>(t));
  }
  return out;
}

}  // namespace afem
