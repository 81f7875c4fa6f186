#pragma once

#include "afem/adapt.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace afem {

/// Parameter lists for `afem sweep`.
struct SweepSpec {
  std::vector<double> theta;
  std::vector<double> vartheta;
};

struct ConfigFile {
  AdaptiveConfig adaptive;
  SweepSpec sweep;
};

/// TOML or JSON text. Top-level keys: problem, estimator, marking, theta,
/// uniform, k, n_max, seed, companions, audit_inexact, vtk_every, vtk_dir and
/// the tables [solver], [stop], [sweep]. Unknown keys are rejected. A zero
/// stop value switches that criterion off.
ConfigFile parse_config_toml(std::string_view text);
ConfigFile parse_config_json(std::string_view text);

/// Picks the parser from the extension (.toml or .json). Throws ConfigError.
ConfigFile load_config(const std::filesystem::path& path);

/// JSON echo of a configuration, as written into run summaries.
std::string config_to_json(const AdaptiveConfig& config);

}  // namespace afem
