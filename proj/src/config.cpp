#include "afem/config.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace afem {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

// Glossary symbols are accepted next to the ASCII names.
json normalize(json obj) {
  static const std::pair<const char*, const char*> aliases[] = {{"θ", "theta"}, {"ϑ", "vartheta"}};
  if (!obj.is_object()) return obj;
  json out = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string key = it.key();
    for (const auto& [from, to] : aliases) {
      if (key == from) key = to;
    }
    if (out.contains(key)) throw ConfigError("key '" + key + "' given twice");
    out[key] = normalize(it.value());
  }
  return out;
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + " must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

ConfigFile from_json(const json& raw) {
  if (!raw.is_object()) throw ConfigError("configuration must be a table");
  const json j = normalize(raw);
  reject_unknown(j,
                 {"problem", "estimator", "marking", "theta", "uniform", "k", "n_max", "seed", "companions",
                  "audit_inexact", "vtk_every", "vtk_dir", "solver", "stop", "sweep", "keep_history"},
                 "configuration");
  ConfigFile cf;
  auto& c = cf.adaptive;
  const std::string top = "configuration";
  if (j.contains("problem")) c.problem = get<std::string>(j, "problem", top);
  if (j.contains("estimator")) c.estimator = estimator_kind_from_string(get<std::string>(j, "estimator", top));
  if (j.contains("marking")) c.marking = marking_strategy_from_string(get<std::string>(j, "marking", top));
  if (j.contains("theta")) c.theta = get<double>(j, "theta", top);
  if (j.contains("uniform")) c.uniform = get<bool>(j, "uniform", top);
  if (j.contains("k")) c.k = get<int>(j, "k", top);
  if (j.contains("n_max")) c.n_max = get<int>(j, "n_max", top);
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", top);
  if (j.contains("companions")) c.companions = get<bool>(j, "companions", top);
  if (j.contains("audit_inexact")) c.audit_inexact = get<bool>(j, "audit_inexact", top);
  if (j.contains("keep_history")) c.keep_history = get<bool>(j, "keep_history", top);
  if (j.contains("vtk_every")) c.vtk_every = get<int>(j, "vtk_every", top);
  if (j.contains("vtk_dir")) c.vtk_dir = get<std::string>(j, "vtk_dir", top);

  if (j.contains("solver")) {
    const json& s = j["solver"];
    const std::string where = "[solver]";
    if (!s.is_object()) throw ConfigError("[solver] must be a table");
    reject_unknown(s,
                   {"mode", "tolerance", "vartheta", "max_iterations", "lanczos_steps", "safety",
                    "picard_max_iterations", "picard_tolerance"},
                   where);
    auto& sc = c.solver;
    if (s.contains("mode")) sc.mode = solve_mode_from_string(get<std::string>(s, "mode", where));
    if (s.contains("tolerance")) sc.tolerance = get<double>(s, "tolerance", where);
    if (s.contains("vartheta")) sc.vartheta = get<double>(s, "vartheta", where);
    if (s.contains("max_iterations")) sc.max_iterations = get<int>(s, "max_iterations", where);
    if (s.contains("lanczos_steps")) sc.lanczos_steps = get<int>(s, "lanczos_steps", where);
    if (s.contains("safety")) sc.safety = get<double>(s, "safety", where);
    if (s.contains("picard_max_iterations")) sc.picard_max_iterations = get<int>(s, "picard_max_iterations", where);
    if (s.contains("picard_tolerance")) sc.picard_tolerance = get<double>(s, "picard_tolerance", where);
  }
  if (j.contains("stop")) {
    const json& s = j["stop"];
    const std::string where = "[stop]";
    if (!s.is_object()) throw ConfigError("[stop] must be a table");
    reject_unknown(s, {"max_elements", "eta", "max_levels"}, where);
    if (s.contains("max_elements")) {
      const auto v = get<std::size_t>(s, "max_elements", where);
      c.stop.max_elements = v ? std::optional<std::size_t>(v) : std::nullopt;
    }
    if (s.contains("eta")) {
      const auto v = get<double>(s, "eta", where);
      c.stop.eta_tolerance = v > 0.0 ? std::optional<double>(v) : std::nullopt;
    }
    if (s.contains("max_levels")) {
      const auto v = get<int>(s, "max_levels", where);
      c.stop.max_levels = v ? std::optional<int>(v) : std::nullopt;
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (!s.is_object()) throw ConfigError("[sweep] must be a table");
    reject_unknown(s, {"theta", "vartheta"}, "[sweep]");
    if (s.contains("theta")) cf.sweep.theta = number_list(s["theta"], "sweep.theta");
    if (s.contains("vartheta")) cf.sweep.vartheta = number_list(s["vartheta"], "sweep.vartheta");
  }
  // Fail early on unknown problem names.
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end()) {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  c.validate();
  return cf;
}

}  // namespace

ConfigFile parse_config_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
  return from_json(j);
}

ConfigFile parse_config_toml(std::string_view text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  std::ostringstream out;
  out << toml::json_formatter{tbl};
  return from_json(json::parse(out.str()));
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto ext = path.extension().string();
  if (ext == ".toml") return parse_config_toml(buf.str());
  if (ext == ".json") return parse_config_json(buf.str());
  throw ConfigError("config file must end in .toml or .json");
}

std::string config_to_json(const AdaptiveConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["estimator"] = std::string(to_string(c.estimator));
  j["marking"] = std::string(to_string(c.marking));
  j["theta"] = c.theta;
  j["uniform"] = c.uniform;
  j["k"] = c.k;
  j["n_max"] = c.n_max ? json(*c.n_max) : json(nullptr);
  j["seed"] = c.seed;
  j["companions"] = c.companions;
  j["audit_inexact"] = c.audit_inexact;
  j["solver"] = {{"mode", std::string(to_string(c.solver.mode))},
                 {"tolerance", c.solver.tolerance},
                 {"vartheta", c.solver.vartheta},
                 {"max_iterations", c.solver.max_iterations},
                 {"lanczos_steps", c.solver.lanczos_steps},
                 {"safety", c.solver.safety},
                 {"picard_max_iterations", c.solver.picard_max_iterations},
                 {"picard_tolerance", c.solver.picard_tolerance}};
  j["stop"] = {{"max_elements", c.stop.max_elements ? json(*c.stop.max_elements) : json(nullptr)},
               {"eta", c.stop.eta_tolerance ? json(*c.stop.eta_tolerance) : json(nullptr)},
               {"max_levels", c.stop.max_levels ? json(*c.stop.max_levels) : json(nullptr)}};
  return j.dump(2);
}

}  // namespace afem
