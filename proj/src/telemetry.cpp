#include "afem/telemetry.hpp"

#include "afem/config.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <variant>

namespace afem {

namespace {

using Member = std::variant<int LevelRecord::*, std::size_t LevelRecord::*, double LevelRecord::*>;

struct Column {
  const char* name;
  Member member;
};

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      {"level", &LevelRecord::level},
      {"elements", &LevelRecord::elements},
      {"vertices", &LevelRecord::vertices},
      {"dofs", &LevelRecord::dofs},
      {"eta", &LevelRecord::eta},
      {"error", &LevelRecord::error},
      {"osc", &LevelRecord::osc},
      {"marked", &LevelRecord::marked},
      {"refined", &LevelRecord::refined},
      {"achieved_fraction", &LevelRecord::achieved_fraction},
      {"dist_next", &LevelRecord::dist_next},
      {"solver_iters", &LevelRecord::solver_iters},
      {"picard_iters", &LevelRecord::picard_iters},
      {"alg_residual", &LevelRecord::alg_residual},
      {"certified_bound", &LevelRecord::certified_bound},
      {"lambda_min", &LevelRecord::lambda_min},
      {"eta_residual", &LevelRecord::eta_residual},
      {"eta_facet", &LevelRecord::eta_facet},
      {"eta_zz", &LevelRecord::eta_zz},
      {"eta_exact", &LevelRecord::eta_exact},
      {"dist_exact", &LevelRecord::dist_exact},
      {"shape_constant", &LevelRecord::shape_constant},
      {"hmod_violations", &LevelRecord::hmod_violations},
  };
  return cols;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_cell(const LevelRecord& r, const Member& m) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using T = std::remove_cvref_t<decltype(r.*ptr)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(r.*ptr);
        } else {
          return std::to_string(r.*ptr);
        }
      },
      m);
}

void parse_cell(LevelRecord& r, const Member& m, const std::string& text, std::size_t line) {
  std::visit(
      [&](auto ptr) {
        using T = std::remove_cvref_t<decltype(r.*ptr)>;
        char* end = nullptr;
        if constexpr (std::is_same_v<T, double>) {
          r.*ptr = std::strtod(text.c_str(), &end);
        } else if constexpr (std::is_same_v<T, int>) {
          r.*ptr = static_cast<int>(std::strtol(text.c_str(), &end, 10));
        } else {
          r.*ptr = static_cast<T>(std::strtoull(text.c_str(), &end, 10));
        }
        if (text.empty() || end != text.c_str() + text.size()) {
          throw ConfigError("bad CSV value '" + text + "' on line " + std::to_string(line));
        }
      },
      m);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& run_csv_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : columns()) n.emplace_back(c.name);
    return n;
  }();
  return names;
}

void write_run_csv(std::ostream& out, const AdaptiveRun& run) {
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i].name;
  out << '\n';
  for (const auto& r : run.levels) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << format_cell(r, cols[i].member);
    out << '\n';
  }
}

std::vector<LevelRecord> read_run_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty run CSV");
  const auto header = split(line);
  const auto& cols = columns();
  std::vector<const Column*> order;
  for (const auto& h : header) {
    const Column* found = nullptr;
    for (const auto& c : cols) {
      if (h == c.name) found = &c;
    }
    if (!found) throw ConfigError("unknown CSV column '" + h + "'");
    order.push_back(found);
  }
  std::vector<LevelRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != order.size()) throw ConfigError("wrong cell count on CSV line " + std::to_string(lineno));
    LevelRecord r;
    for (std::size_t i = 0; i < cells.size(); ++i) parse_cell(r, order[i]->member, cells[i], lineno);
    out.push_back(r);
  }
  return out;
}

void write_timing_csv(std::ostream& out, const AdaptiveRun& run) {
  out << "level,wall_time,solve_time\n";
  for (const auto& r : run.levels) {
    out << r.level << ',' << format_double(r.wall_time) << ',' << format_double(r.solve_time) << '\n';
  }
}

std::string run_summary_json(const AdaptiveRun& run) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_to_json(run.config));
  j["levels"] = run.levels.size();
  j["initial_elements"] = run.initial_elements;
  j["stop_reason"] = run.stop_reason;
  if (!run.levels.empty()) {
    const auto& last = run.levels.back();
    j["final"] = {{"elements", last.elements}, {"eta", num(last.eta)}, {"error", num(last.error)}};
  }
  nlohmann::json rates = nlohmann::json::object();
  auto add_fit = [&](const char* key, RateQuantity q) {
    try {
      const RateFit f = fit_rate(run, q);
      rates[key] = {{"slope", f.slope}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high}, {"std_error", f.std_error},
                    {"points", f.points}};
    } catch (const ConfigError& e) {
      rates[key] = {{"unavailable", e.what()}};
    }
  };
  add_fit("estimator", RateQuantity::Estimator);
  if (!run.levels.empty() && !std::isnan(run.levels.back().error)) add_fit("error", RateQuantity::Error);
  j["rates"] = rates;

  const auto etas = run.etas();
  nlohmann::json consts;
  const auto env = r_linear_envelope(etas);
  consts["r_linear"] = {{"rho", num(env.rho)}, {"C", num(env.c)}};
  const auto s = summability_proxy(etas);
  consts["summability"] = {{"sup", num(s.sup)},
                           {"first_half_max", num(s.first_half_max)},
                           {"final_half_max", num(s.final_half_max)},
                           {"non_growing", s.non_growing}};
  const auto red = estimator_reduction(run);
  consts["estimator_reduction"] = {{"q", num(red.q)}, {"C", num(red.c)}};
  consts["C_mon"] = num(quasi_monotonicity(etas));
  const auto cm = closure_constants(run);
  double c_mesh = 0.0;
  for (double v : cm) c_mesh = std::max(c_mesh, v);
  consts["C_mesh"] = num(c_mesh);
  std::size_t hv = 0;
  for (const auto& r : run.levels) hv += r.hmod_violations;
  consts["hmod_violations"] = hv;
  j["constants"] = consts;
  return j.dump(2);
}

void write_run_outputs(const std::filesystem::path& dir, const AdaptiveRun& run) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "run.csv");
    write_run_csv(out, run);
  }
  {
    std::ofstream out(dir / "timing.csv");
    write_timing_csv(out, run);
  }
  std::ofstream out(dir / "summary.json");
  out << run_summary_json(run) << '\n';
  if (!out) throw std::runtime_error("cannot write outputs to '" + dir.string() + "'");
}

}  // namespace afem
