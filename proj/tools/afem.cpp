// afem: run, verify, rates and sweep front end.

#include "afem/config.hpp"
#include "afem/telemetry.hpp"
#include "afem/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using namespace afem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct Overrides {
  std::string config;
  std::string out = "afem-out";
  std::optional<std::uint64_t> seed;
  std::optional<double> stop_eta;
  std::optional<std::size_t> stop_elements;
  std::optional<int> vtk_every;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_config = true) {
  auto* c = cmd->add_option("--config", o.config, "TOML or JSON configuration");
  if (needs_config) c->required();
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "random seed (overrides the file)");
  cmd->add_option("--stop-eta", o.stop_eta, "stop once eta drops below this value");
  cmd->add_option("--stop-elements", o.stop_elements, "stop once the mesh has more elements");
  cmd->add_option("--vtk-every", o.vtk_every, "VTK snapshot every m levels");
}

ConfigFile load(const Overrides& o) {
  if (!fs::exists(o.config)) throw ConfigError("config file '" + o.config + "' does not exist");
  ConfigFile cf = load_config(o.config);
  auto& c = cf.adaptive;
  if (o.seed) c.seed = *o.seed;
  if (o.stop_eta) c.stop.eta_tolerance = *o.stop_eta;
  if (o.stop_elements) c.stop.max_elements = *o.stop_elements;
  if (o.vtk_every) c.vtk_every = *o.vtk_every;
  if (c.vtk_every > 0) c.vtk_dir = fs::path(o.out) / "vtk";
  c.validate();
  return cf;
}

void print_rates(const AdaptiveRun& run) {
  std::printf("%zu levels, %zu elements, eta = %.4e (%s)\n", run.levels.size(), run.levels.back().elements,
              run.levels.back().eta, run.stop_reason.c_str());
  try {
    const auto f = fit_rate(run, RateQuantity::Estimator);
    std::printf("estimator slope %.4f  95%% CI [%.4f, %.4f]\n", f.slope, f.ci_low, f.ci_high);
  } catch (const ConfigError& e) {
    std::printf("estimator slope unavailable: %s\n", e.what());
  }
  if (!std::isnan(run.levels.back().error)) {
    try {
      const auto f = fit_rate(run, RateQuantity::Error);
      std::printf("error slope     %.4f  95%% CI [%.4f, %.4f]\n", f.slope, f.ci_low, f.ci_high);
    } catch (const ConfigError&) {
    }
  }
}

int cmd_run(const Overrides& o) {
  ConfigFile cf = load(o);
  cf.adaptive.keep_history = false;
  const AdaptiveRun run = run_adaptive(cf.adaptive);
  write_run_outputs(o.out, run);
  print_rates(run);
  return kOk;
}

int cmd_verify(const Overrides& o, bool axioms) {
  ConfigFile cf = load(o);
  cf.adaptive.keep_history = true;
  cf.adaptive.companions = cf.adaptive.estimator == EstimatorKind::Residual;
  const ProblemSpec problem = make_problem(cf.adaptive.problem);
  const AdaptiveRun run = run_adaptive(cf.adaptive, problem.initial_mesh(), problem);
  write_run_outputs(o.out, run);
  VerifyOptions vo;
  vo.seed = cf.adaptive.seed;
  VerificationReport rep = verify_run(run, problem, vo);
  if (axioms) {
    MeshAxiomOptions mo;
    mo.seed = cf.adaptive.seed;
    mo.k = cf.adaptive.k;
    for (auto& c : run_mesh_axiom_suite(problem.initial_mesh(), mo).checks) rep.checks.push_back(std::move(c));
  }
  std::ofstream(fs::path(o.out) / "verification.json") << rep.to_json() << '\n';
  std::cout << rep.to_table();
  return rep.passed() ? kOk : kRuntime;
}

int cmd_rates(const Overrides& o, const std::string& run_dir) {
  AdaptiveRun run;
  if (!run_dir.empty()) {
    std::ifstream in(fs::path(run_dir) / "run.csv");
    if (!in) throw ConfigError("no run.csv in '" + run_dir + "'");
    run.levels = read_run_csv(in);
    if (run.levels.empty()) throw ConfigError("run.csv has no levels");
    run.initial_elements = run.levels.front().elements;
    run.stop_reason = "read from " + run_dir;
  } else {
    if (o.config.empty()) throw ConfigError("rates needs --config or --run");
    ConfigFile cf = load(o);
    cf.adaptive.keep_history = false;
    run = run_adaptive(cf.adaptive);
    write_run_outputs(o.out, run);
  }
  print_rates(run);
  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "rates.json") << run_summary_json(run) << '\n';
  return kOk;
}

int cmd_sweep(const Overrides& o, std::vector<double> thetas, std::vector<double> varthetas, int jobs) {
  ConfigFile cf = load(o);
  if (thetas.empty()) thetas = cf.sweep.theta;
  if (varthetas.empty()) varthetas = cf.sweep.vartheta;
  if (thetas.empty()) throw ConfigError("sweep needs a nonempty theta list");

  struct Job {
    double theta;
    std::optional<double> vartheta;
    fs::path dir;
    nlohmann::json result;
  };
  std::vector<Job> todo;
  for (double t : thetas) {
    if (varthetas.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "theta_%g", t);
      todo.push_back({t, std::nullopt, fs::path(o.out) / name, {}});
    } else {
      for (double v : varthetas) {
        char name[64];
        std::snprintf(name, sizeof name, "theta_%g_vartheta_%g", t, v);
        todo.push_back({t, v, fs::path(o.out) / name, {}});
      }
    }
  }
  for (const auto& j : todo) {
    AdaptiveConfig c = cf.adaptive;
    c.theta = j.theta;
    if (j.vartheta) c.solver.vartheta = *j.vartheta;
    c.validate();
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  std::string first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= todo.size() || failed) return;
      Job& job = todo[i];
      try {
        AdaptiveConfig c = cf.adaptive;
        c.theta = job.theta;
        if (job.vartheta) {
          c.solver.mode = SolveMode::Inexact;
          c.solver.vartheta = *job.vartheta;
        }
        c.keep_history = false;
        if (c.vtk_every > 0) c.vtk_dir = job.dir / "vtk";
        const AdaptiveRun run = run_adaptive(c);
        write_run_outputs(job.dir, run);
        job.result = nlohmann::json::parse(run_summary_json(run));
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        if (first_error.empty()) first_error = e.what();
        failed = true;
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  nlohmann::json agg;
  agg["runs"] = nlohmann::json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& j : todo) {
    if (j.result.is_null()) continue;
    nlohmann::json e = {{"theta", j.theta}, {"dir", j.dir.string()}};
    if (j.vartheta) e["vartheta"] = *j.vartheta;
    e["rates"] = j.result["rates"];
    if (j.result["rates"]["estimator"].contains("slope")) {
      const double s = j.result["rates"]["estimator"]["slope"].get<double>();
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    agg["runs"].push_back(e);
  }
  agg["slope_spread"] = hi >= lo ? nlohmann::json(hi - lo) : nlohmann::json(nullptr);
  agg["complete"] = !failed.load();
  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "sweep.json") << agg.dump(2) << '\n';
  for (const auto& e : agg["runs"]) {
    if (e["rates"]["estimator"].contains("slope")) {
      std::printf("theta %-5g %s estimator slope %.4f\n", e["theta"].get<double>(),
                  e.contains("vartheta") ? ("vartheta " + e["vartheta"].dump()).c_str() : "",
                  e["rates"]["estimator"]["slope"].get<double>());
    }
  }
  if (failed) {
    std::cerr << "afem: sweep aborted: " << first_error << '\n';
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive P1 finite elements with axiom verification"};
  app.require_subcommand(1);

  Overrides run_o, verify_o, rates_o, sweep_o;
  auto* run = app.add_subcommand("run", "adaptive run; writes run.csv, timing.csv, summary.json");
  add_common(run, run_o);

  auto* verify = app.add_subcommand("verify", "adaptive run followed by the verification harness");
  add_common(verify, verify_o);
  bool no_axioms = false;
  verify->add_flag("--no-axioms", no_axioms, "skip the random mesh-axiom suite");

  auto* rates = app.add_subcommand("rates", "fitted convergence rates of a run");
  add_common(rates, rates_o, false);
  std::string run_dir;
  rates->add_option("--run", run_dir, "existing output directory with run.csv");

  auto* sweep = app.add_subcommand("sweep", "one run per parameter combination");
  add_common(sweep, sweep_o);
  std::vector<double> thetas, varthetas;
  int jobs = 1;
  sweep->add_option("--theta", thetas, "marking parameters")->delimiter(',');
  sweep->add_option("--vartheta", varthetas, "inexact solver parameters")->delimiter(',');
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*verify) return cmd_verify(verify_o, !no_axioms);
    if (*rates) return cmd_rates(rates_o, run_dir);
    if (*sweep) return cmd_sweep(sweep_o, thetas, varthetas, jobs);
  } catch (const ConfigError& e) {
    std::cerr << "afem: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "afem: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
