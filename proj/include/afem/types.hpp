#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace afem {

using VertexId = std::int32_t;
using ElementId = std::int32_t;
using EdgeId = std::int32_t;
using Vec2 = Eigen::Vector2d;

inline constexpr std::int32_t kNone = -1;

enum class BoundaryKind : std::uint8_t { Dirichlet, Neumann, Robin };

std::string_view to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(std::string_view name);

/// Invalid or inconsistent mesh data.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear or nonlinear solve did not reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The discrete problem cannot be set up (non-elliptic form, missing data).
class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed run configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace afem
